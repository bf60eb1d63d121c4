#include "qam/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qam/error.hpp"
#include "qam/parallel.hpp"
#include "qam/rng.hpp"
#include "qam/stats.hpp"

namespace qam {
namespace {

// Draw index reserved for initial-position sampling, far above any step pair index.
constexpr std::uint64_t kInitialDrawIndex = std::uint64_t{1} << 62;

struct PathResult {
  std::int64_t absorbed_step = -1;
};

// Integrates one path and writes its recorded samples in integration order into row
// (row[0] is the starting point). The same routine backs the parallel and serial samplers.
PathResult integrate_path(const VelocityField& field, const PhysicalParams& params, const SdeConfig& cfg,
                          double x0, std::uint64_t stream, double* row) {
  const NoiseStream noise(cfg.seed, stream);
  const std::size_t n_steps = cfg.n_steps();
  const double dt = cfg.dt_sde;
  const double noise_scale = params.noise_amplitude() * std::sqrt(dt);
  const double lo = field.x_min();
  const double hi = field.x_max();
  const bool backward = cfg.direction == Direction::backward;

  PathResult result;
  double x = x0;
  row[0] = x;
  std::array<double, 2> pair{};
  std::size_t rec = 1;
  for (std::size_t step = 0; step < n_steps; ++step) {
    if (result.absorbed_step < 0) {
      if (step % 2 == 0) pair = noise.normal_pair(step / 2);
      const double s = static_cast<double>(step) * dt;
      double drift;
      if (backward) {
        const VelocityPair vp = field.at(x, cfg.t_end - s);
        drift = vp.u - vp.v;
      } else {
        const VelocityPair vp = field.at(x, cfg.t_start + s);
        drift = vp.v + vp.u;
      }
      if (!std::isfinite(drift)) {
        result.absorbed_step = static_cast<std::int64_t>(step);
      } else {
        x += drift * dt + noise_scale * pair[step % 2];
        if (cfg.boundary == BoundaryPolicy::reflect) {
          while (x < lo || x > hi) x = x < lo ? 2.0 * lo - x : 2.0 * hi - x;
        } else if (x <= lo || x >= hi) {
          x = std::clamp(x, lo, hi);
          result.absorbed_step = static_cast<std::int64_t>(step + 1);
        }
      }
    }
    if ((step + 1) % cfg.record_every == 0) row[rec++] = x;
  }
  return result;
}

template <class Loop>
TrajectoryEnsemble run_sampler(const VelocityField& field, const PhysicalParams& params, const SdeConfig& cfg,
                               std::span<const double> x0, Loop&& loop) {
  validate(params);
  validate(cfg);
  if (x0.size() != cfg.n_paths) throw Error(ErrorKind::invalid_argument, "starting point count != n_paths");
  if (const auto dt_pde = field.pde_time_step(); dt_pde && cfg.dt_sde > *dt_pde * (1.0 + 1e-12)) {
    throw Error(ErrorKind::invalid_argument, "dt_sde must not exceed the field's dt_pde");
  }
  const double tol = 1e-9 * std::max(1.0, std::abs(cfg.t_end));
  if (cfg.t_start < field.t_min() - tol || cfg.t_end > field.t_max() + tol) {
    throw Error(ErrorKind::field_coverage, "requested horizon [" + std::to_string(cfg.t_start) + ", " +
                                               std::to_string(cfg.t_end) + "] exceeds stored fields");
  }

  const std::size_t n_steps = cfg.n_steps();
  const std::size_t n_rec = n_steps / cfg.record_every + 1;
  const double h = cfg.dt_sde * static_cast<double>(cfg.record_every);

  TrajectoryEnsemble ens;
  ens.n_paths = cfg.n_paths;
  ens.direction = cfg.direction;
  ens.seed = cfg.seed;
  ens.dt_sde = cfg.dt_sde;
  ens.stationary = field.stationary();
  ens.times.resize(n_rec);
  for (std::size_t k = 0; k < n_rec; ++k) ens.times[k] = cfg.t_start + h * static_cast<double>(k);
  ens.positions.resize(cfg.n_paths * n_rec);
  ens.stream_ids.resize(cfg.n_paths);
  ens.absorbed_at.assign(cfg.n_paths, -1);

  const bool backward = cfg.direction == Direction::backward;
  loop(cfg.n_paths, [&](std::size_t p) {
    const std::uint64_t stream = stream_id(p, cfg.direction);
    ens.stream_ids[p] = stream;
    double* row = ens.positions.data() + p * n_rec;
    const PathResult r = integrate_path(field, params, cfg, x0[p], stream, row);
    std::int64_t rec = -1;
    if (r.absorbed_step >= 0) {
      // First recorded index at or after the absorption step.
      rec = (r.absorbed_step + static_cast<std::int64_t>(cfg.record_every) - 1) /
            static_cast<std::int64_t>(cfg.record_every);
    }
    if (backward) {
      std::reverse(row, row + n_rec);
      if (rec >= 0) rec = static_cast<std::int64_t>(n_rec) - 1 - rec;
    }
    ens.absorbed_at[p] = rec;
  });
  return ens;
}

void serial_loop(std::size_t n, const std::function<void(std::size_t)>& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

void check_density(const GridSpec& grid, std::span<const double> rho) {
  if (rho.size() != grid.n_points) throw Error(ErrorKind::invalid_argument, "density size does not match grid");
  for (double r : rho) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw Error(ErrorKind::invalid_argument, "density must be finite and >= 0");
  }
  const double mass = trapezoid(grid, rho);
  if (std::abs(mass - 1.0) > 1e-6) {
    throw Error(ErrorKind::not_normalized, "density integrates to " + std::to_string(mass));
  }
}

}  // namespace

std::size_t SdeConfig::n_steps() const {
  return static_cast<std::size_t>(std::llround((t_end - t_start) / dt_sde));
}

void validate(const SdeConfig& cfg) {
  if (!(cfg.dt_sde > 0.0) || !std::isfinite(cfg.dt_sde)) throw Error(ErrorKind::invalid_argument, "dt_sde must be > 0");
  if (cfg.n_paths < 1) throw Error(ErrorKind::invalid_argument, "n_paths must be >= 1");
  if (!(cfg.t_end > cfg.t_start)) throw Error(ErrorKind::inverted_bounds, "t_end must exceed t_start");
  if (cfg.record_every < 1) throw Error(ErrorKind::invalid_argument, "record_every must be >= 1");
  const double steps = (cfg.t_end - cfg.t_start) / cfg.dt_sde;
  if (std::abs(steps - std::round(steps)) > 1e-6) {
    throw Error(ErrorKind::invalid_argument, "horizon must be an integer number of dt_sde steps");
  }
  if (cfg.n_steps() % cfg.record_every != 0) {
    throw Error(ErrorKind::invalid_argument, "step count must be a multiple of record_every");
  }
}

bool TrajectoryEnsemble::valid(std::size_t p, std::size_t k) const {
  const std::int64_t a = absorbed_at[p];
  if (a < 0) return true;
  const auto kk = static_cast<std::int64_t>(k);
  return direction == Direction::forward ? kk < a : kk > a;
}

std::vector<double> TrajectoryEnsemble::marginal(std::size_t k) const {
  std::vector<double> xs;
  xs.reserve(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (valid(p, k)) xs.push_back(at(p, k));
  }
  return xs;
}

std::size_t TrajectoryEnsemble::time_index(double t) const {
  if (times.empty()) throw Error(ErrorKind::horizon, "empty ensemble");
  const double h = times.size() > 1 ? times[1] - times[0] : 1.0;
  const double pos = (t - times.front()) / h;
  const double k = std::round(pos);
  if (k < 0.0 || k > static_cast<double>(times.size() - 1) || std::abs(pos - k) > 1e-6) {
    throw Error(ErrorKind::horizon, "time " + std::to_string(t) + " is not a recorded ensemble time");
  }
  return static_cast<std::size_t>(k);
}

std::uint64_t stream_id(std::size_t path, Direction direction) {
  const std::uint64_t tag = direction == Direction::backward ? std::uint64_t{1} << 63 : 0;
  return static_cast<std::uint64_t>(path) | tag;
}

std::vector<double> sample_initial_positions(const GridSpec& grid, std::span<const double> rho0, std::size_t n_paths,
                                             std::uint64_t seed, Direction direction) {
  check_density(grid, rho0);
  const std::vector<double> cdf = cumulative_trapezoid(grid, rho0);
  const double total = cdf.back();
  std::vector<double> xs(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    const double target = NoiseStream(seed, stream_id(p, direction)).uniform(kInitialDrawIndex) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    std::size_t i = it == cdf.begin() ? 0 : static_cast<std::size_t>(it - cdf.begin()) - 1;
    if (i >= grid.n_points - 1) i = grid.n_points - 2;
    // Cells of zero mass are skipped by upper_bound, so the denominator is positive.
    const double cell = cdf[i + 1] - cdf[i];
    const double frac = cell > 0.0 ? (target - cdf[i]) / cell : 0.5;
    xs[p] = grid.x(i) + grid.dx * std::clamp(frac, 0.0, 1.0);
  }
  return xs;
}

TrajectoryEnsemble sample_from_positions(const VelocityField& field, const PhysicalParams& params,
                                         const SdeConfig& config, std::span<const double> x0) {
  return run_sampler(field, params, config, x0, [](std::size_t n, const auto& fn) { parallel_for(n, fn); });
}

TrajectoryEnsemble sample_forward(const VelocityField& field, const PhysicalParams& params, const SdeConfig& config,
                                  const GridSpec& rho_grid, std::span<const double> rho0) {
  if (config.direction != Direction::forward) throw Error(ErrorKind::invalid_argument, "config direction must be forward");
  const auto x0 = sample_initial_positions(rho_grid, rho0, config.n_paths, config.seed, Direction::forward);
  return sample_from_positions(field, params, config, x0);
}

TrajectoryEnsemble sample_backward(const VelocityField& field, const PhysicalParams& params, const SdeConfig& config,
                                   const GridSpec& rho_grid, std::span<const double> rhoT) {
  if (config.direction != Direction::backward) throw Error(ErrorKind::invalid_argument, "config direction must be backward");
  const auto x0 = sample_initial_positions(rho_grid, rhoT, config.n_paths, config.seed, Direction::backward);
  return sample_from_positions(field, params, config, x0);
}

namespace reference {

TrajectoryEnsemble sample_from_positions(const VelocityField& field, const PhysicalParams& params,
                                         const SdeConfig& config, std::span<const double> x0) {
  return run_sampler(field, params, config, x0, serial_loop);
}

}  // namespace reference

std::vector<double> uniform_edges(double lo, double hi, std::size_t n_bins) {
  if (!(hi > lo) || n_bins == 0) throw Error(ErrorKind::invalid_argument, "bad bin range");
  std::vector<double> edges(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(n_bins);
  return edges;
}

namespace {

struct BinAccumulator {
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> xs;
};

std::ptrdiff_t find_bin(std::span<const double> edges, double x) {
  if (x < edges.front() || x >= edges.back()) return -1;
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  return static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
}

struct LagSetup {
  std::size_t k;
  std::size_t lag;
};

LagSetup lag_setup(const TrajectoryEnsemble& ens, double t, double delta_t, Direction which) {
  if (ens.n_times() < 2) throw Error(ErrorKind::horizon, "ensemble needs at least two recorded times");
  if (delta_t < ens.dt_sde * (1.0 - 1e-12)) throw Error(ErrorKind::invalid_argument, "delta_t must be >= dt_sde");
  const double h = ens.times[1] - ens.times[0];
  const double lag_f = delta_t / h;
  const auto lag = static_cast<std::size_t>(std::llround(lag_f));
  if (lag == 0 || std::abs(lag_f - static_cast<double>(lag)) > 1e-6) {
    throw Error(ErrorKind::invalid_argument, "delta_t must be a positive multiple of the recording interval");
  }
  const std::size_t k = ens.time_index(t);
  if (which == Direction::forward && k + lag >= ens.n_times()) throw Error(ErrorKind::horizon, "t + delta_t beyond horizon");
  if (which == Direction::backward && k < lag) throw Error(ErrorKind::horizon, "t - delta_t before horizon");
  return {k, lag};
}

// Per-path value is the difference quotient of f minus offset(x(t)) when offset is set.
BinnedEstimate binned_quotient(const TrajectoryEnsemble& ens, const PathFunction& f, const PathFunction& offset,
                               double t, double delta_t, std::span<const double> edges, Direction which,
                               std::size_t min_count) {
  const LagSetup s = lag_setup(ens, t, delta_t, which);
  const std::size_t n_bins = edges.size() - 1;
  const std::size_t k_other = which == Direction::forward ? s.k + s.lag : s.k - s.lag;
  const double t_other = ens.times[k_other];
  const double t_now = ens.times[s.k];
  const double span = which == Direction::forward ? t_other - t_now : t_now - t_other;

  // Per-path quotients in parallel, then binned serially in path order.
  std::vector<double> quotient(ens.n_paths, 0.0);
  std::vector<std::uint8_t> usable(ens.n_paths, 0);
  parallel_for(ens.n_paths, [&](std::size_t p) {
    if (!ens.valid(p, s.k) || !ens.valid(p, k_other)) return;
    const double x_now = ens.at(p, s.k);
    const double x_other = ens.at(p, k_other);
    const double diff = which == Direction::forward ? f(x_other, t_other) - f(x_now, t_now)
                                                    : f(x_now, t_now) - f(x_other, t_other);
    quotient[p] = diff / span - (offset ? offset(x_now, t_now) : 0.0);
    usable[p] = 1;
  });

  BinAccumulator acc{std::vector<std::vector<double>>(n_bins), std::vector<std::vector<double>>(n_bins)};
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    if (!usable[p]) continue;
    const auto b = find_bin(edges, ens.at(p, s.k));
    if (b < 0) continue;
    acc.values[static_cast<std::size_t>(b)].push_back(quotient[p]);
    acc.xs[static_cast<std::size_t>(b)].push_back(ens.at(p, s.k));
  }

  BinnedEstimate out;
  out.edges.assign(edges.begin(), edges.end());
  for (std::size_t b = 0; b < n_bins; ++b) {
    const Estimate e = mean_estimate(acc.values[b]);
    out.centers.push_back(0.5 * (edges[b] + edges[b + 1]));
    out.mean.push_back(e.value);
    out.std_error.push_back(e.std_error);
    out.x_mean.push_back(mean_estimate(acc.xs[b]).value);
    out.count.push_back(acc.values[b].size());
    out.flagged.push_back(acc.values[b].size() < min_count ? 1 : 0);
  }
  return out;
}

}  // namespace

BinnedEstimate binned_mean_derivative(const TrajectoryEnsemble& ens, const PathFunction& f, double t, double delta_t,
                                      std::span<const double> edges, Direction which, std::size_t min_count) {
  return binned_quotient(ens, f, nullptr, t, delta_t, edges, which, min_count);
}

BinnedEstimate mean_derivative(const TrajectoryEnsemble& ens, double t, double delta_t, std::span<const double> edges,
                               Direction which, std::size_t min_count) {
  return binned_mean_derivative(
      ens, [](double x, double) { return x; }, t, delta_t, edges, which, min_count);
}

NewtonEstimate nelson_newton_residual(const TrajectoryEnsemble& forward, const TrajectoryEnsemble& backward,
                                      const VelocityField& field, const PhysicalParams& params,
                                      const Potential& potential, double t, double delta_t,
                                      std::span<const double> edges, std::size_t min_count) {
  const double m = params.mass;
  // D_b x = v - u and D_f x = v + u as fields; the outer derivative acts along paths.
  // Subtracting F/m per path keeps the within-bin spread of the force out of the residual.
  auto make = [&](double sign) -> PathFunction {
    return [&field, sign](double x, double tt) {
      const VelocityPair vp = field.at(x, tt);
      return vp.v + sign * vp.u;
    };
  };
  const PathFunction force_over_m = [&potential, m](double x, double) { return potential.force(x) / m; };

  const BinnedEstimate df_db = binned_mean_derivative(forward, make(-1.0), t, delta_t, edges, Direction::forward, min_count);
  const BinnedEstimate db_df = binned_mean_derivative(backward, make(+1.0), t, delta_t, edges, Direction::backward, min_count);

  const BinnedEstimate rf = binned_quotient(forward, make(-1.0), force_over_m, t, delta_t, edges, Direction::forward, min_count);
  const BinnedEstimate rb = binned_quotient(backward, make(+1.0), force_over_m, t, delta_t, edges, Direction::backward, min_count);

  // Mean F/m per bin over both ensembles.
  auto force_mean = [&](const TrajectoryEnsemble& ens, std::size_t b) {
    const std::size_t k = ens.time_index(t);
    std::vector<double> fs;
    for (std::size_t p = 0; p < ens.n_paths; ++p) {
      if (!ens.valid(p, k)) continue;
      const double x = ens.at(p, k);
      if (x >= edges[b] && x < edges[b + 1]) fs.push_back(potential.force(x) / m);
    }
    return fs;
  };

  NewtonEstimate out;
  const std::size_t n_bins = edges.size() - 1;
  for (std::size_t b = 0; b < n_bins; ++b) {
    out.centers.push_back(df_db.centers[b]);
    out.acceleration.push_back(0.5 * (df_db.mean[b] + db_df.mean[b]));
    out.acceleration_std_error.push_back(0.5 * std::hypot(df_db.std_error[b], db_df.std_error[b]));
    std::vector<double> fs = force_mean(forward, b);
    const std::vector<double> fb = force_mean(backward, b);
    fs.insert(fs.end(), fb.begin(), fb.end());
    out.force_over_mass.push_back(mean_estimate(fs).value);
    out.residual.push_back(0.5 * m * (rf.mean[b] + rb.mean[b]));
    out.residual_std_error.push_back(0.5 * m * std::hypot(rf.std_error[b], rb.std_error[b]));
    out.count_forward.push_back(df_db.count[b]);
    out.count_backward.push_back(db_df.count[b]);
    out.trusted.push_back(!df_db.flagged[b] && !db_df.flagged[b] ? 1 : 0);
  }
  return out;
}

}  // namespace qam
