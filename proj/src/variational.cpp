#include "qam/variational.hpp"

#include <cmath>
#include <complex>

#include "qam/error.hpp"
#include "qam/parallel.hpp"

namespace qam {
namespace {

struct Integrands {
  double real_action = 0.0;          // (m/2)(v^2 - u^2) - V
  double entropy = 0.0;              // v u
  std::complex<double> complex{};    // (m/2) v_q^2 - V
};

Integrands integrands(const VelocityField& field, const PhysicalParams& params, const Potential& potential,
                      double x, double t) {
  const VelocityPair vp = field.at(x, t);
  const double m = params.mass;
  const double pot = potential.value(x);
  const std::complex<double> vq(vp.v, -vp.u);
  return {0.5 * m * (vp.v * vp.v - vp.u * vp.u) - pot, vp.v * vp.u, 0.5 * m * vq * vq - pot};
}

void integrate_path(const TrajectoryEnsemble& ens, const VelocityField& field, const PhysicalParams& params,
                    const Potential& potential, const ActionFunctionalSpec& spec, std::size_t p, PathActions& out) {
  const std::size_t n = ens.n_times();
  for (std::size_t k = 0; k < n; ++k) {
    if (!ens.valid(p, k)) return;
  }
  double jr = 0.0, ent = 0.0;
  std::complex<double> jc{};
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = ens.times[k + 1] - ens.times[k];
    const double x0 = ens.at(p, k), x1 = ens.at(p, k + 1);
    const double t0 = ens.times[k], t1 = ens.times[k + 1];
    Integrands f;
    switch (spec.rule) {
      case IntegrationRule::trapezoid: {
        const Integrands a = integrands(field, params, potential, x0, t0);
        const Integrands b = integrands(field, params, potential, x1, t1);
        f = {0.5 * (a.real_action + b.real_action), 0.5 * (a.entropy + b.entropy), 0.5 * (a.complex + b.complex)};
        break;
      }
      case IntegrationRule::midpoint:
        f = integrands(field, params, potential, 0.5 * (x0 + x1), 0.5 * (t0 + t1));
        break;
      case IntegrationRule::ito_forward:
        f = integrands(field, params, potential, x0, t0);
        break;
    }
    jr += f.real_action * dt;
    ent += f.entropy * dt;
    jc += f.complex * dt;
  }
  const double x_end = ens.at(p, n - 1);
  const double m = params.mass;
  out.j_r[p] = jr + (spec.s_terminal ? spec.s_terminal(x_end) : 0.0);
  out.j_i[p] = -m * (ent + (spec.r_terminal ? spec.r_terminal(x_end) : 0.0));
  out.j_complex_re[p] = jc.real() + (spec.phi_terminal ? spec.phi_terminal(x_end) : 0.0);
  out.j_complex_im[p] = jc.imag();
  out.used[p] = 1;
}

template <class Loop>
PathActions compute_actions(const TrajectoryEnsemble& ens, const VelocityField& field, const PhysicalParams& params,
                            const Potential& potential, const ActionFunctionalSpec& spec, Loop&& loop) {
  if (ens.n_times() < 2) throw Error(ErrorKind::horizon, "ensemble needs at least two recorded times");
  const double span = ens.times.back() - ens.times.front();
  if (std::abs(span - spec.horizon) > 1e-9 * std::max(1.0, spec.horizon)) {
    throw Error(ErrorKind::horizon, "ensemble horizon " + std::to_string(span) + " != functional horizon " +
                                        std::to_string(spec.horizon));
  }
  PathActions out;
  out.j_r.assign(ens.n_paths, 0.0);
  out.j_i.assign(ens.n_paths, 0.0);
  out.j_complex_re.assign(ens.n_paths, 0.0);
  out.j_complex_im.assign(ens.n_paths, 0.0);
  out.used.assign(ens.n_paths, 0);
  loop(ens.n_paths, [&](std::size_t p) { integrate_path(ens, field, params, potential, spec, p, out); });
  return out;
}

std::vector<double> used_values(const std::vector<double>& values, const std::vector<std::uint8_t>& used) {
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (used[i]) out.push_back(values[i]);
  }
  return out;
}

}  // namespace

std::string to_string(ProbeSign sign) {
  switch (sign) {
    case ProbeSign::positive: return "positive";
    case ProbeSign::negative: return "negative";
    case ProbeSign::zero: return "zero";
    case ProbeSign::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

PathActions action_per_path(const TrajectoryEnsemble& ens, const VelocityField& field, const PhysicalParams& params,
                            const Potential& potential, const ActionFunctionalSpec& spec) {
  return compute_actions(ens, field, params, potential, spec,
                         [](std::size_t n, const auto& fn) { parallel_for(n, fn); });
}

namespace reference {

PathActions action_per_path(const TrajectoryEnsemble& ens, const VelocityField& field, const PhysicalParams& params,
                            const Potential& potential, const ActionFunctionalSpec& spec) {
  return compute_actions(ens, field, params, potential, spec, [](std::size_t n, const auto& fn) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  });
}

}  // namespace reference

ActionEstimate estimate_action_functionals(const TrajectoryEnsemble& ens, const VelocityField& field,
                                           const PhysicalParams& params, const Potential& potential,
                                           const ActionFunctionalSpec& spec) {
  const PathActions a = action_per_path(ens, field, params, potential, spec);
  ActionEstimate est;
  est.j_r = jackknife_mean(used_values(a.j_r, a.used));
  est.j_i = jackknife_mean(used_values(a.j_i, a.used));
  est.j_complex_re = jackknife_mean(used_values(a.j_complex_re, a.used));
  est.j_complex_im = jackknife_mean(used_values(a.j_complex_im, a.used));
  for (auto u : a.used) est.n_paths += u;
  return est;
}

EnergySeries estimate_mean_energy(const TrajectoryEnsemble& ens, const VelocityField& field,
                                  const PhysicalParams& params, const Potential& potential) {
  const std::size_t n = ens.n_times();
  if (n < 3) throw Error(ErrorKind::horizon, "energy series needs at least three recorded times");
  const double m = params.mass;

  std::vector<double> energy(ens.n_paths * n, 0.0);
  std::vector<double> slopes(ens.n_paths, 0.0);
  std::vector<double> levels(ens.n_paths, 0.0);
  std::vector<std::uint8_t> used(ens.n_paths, 0);
  parallel_for(ens.n_paths, [&](std::size_t p) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!ens.valid(p, k)) return;
    }
    double* e = energy.data() + p * n;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = ens.at(p, k);
      const VelocityPair vp = field.at(x, ens.times[k]);
      e[k] = 0.5 * m * (vp.v * vp.v + vp.u * vp.u) + potential.value(x);
    }
    const LinearFit fit = linear_fit(ens.times, std::span<const double>(e, n));
    slopes[p] = fit.slope;
    levels[p] = pairwise_sum(std::span<const double>(e, n)) / static_cast<double>(n);
    used[p] = 1;
  });

  EnergySeries out;
  out.times = ens.times;
  std::vector<double> column;
  column.reserve(ens.n_paths);
  for (std::size_t k = 0; k < n; ++k) {
    column.clear();
    for (std::size_t p = 0; p < ens.n_paths; ++p) {
      if (used[p]) column.push_back(energy[p * n + k]);
    }
    const Estimate e = mean_estimate(column);
    out.mean.push_back(e.value);
    out.std_error.push_back(e.std_error);
  }
  out.slope = mean_estimate(used_values(slopes, used));
  out.level = mean_estimate(used_values(levels, used));
  return out;
}

ProbeResult saddle_point_probe(const VelocityField& field, const PhysicalParams& params, const Potential& potential,
                               const ActionFunctionalSpec& spec, const Perturbation& perturbation,
                               const SdeConfig& config, const GridSpec& rho_grid, std::span<const double> rho0,
                               double n_std_errors) {
  const PerturbedVelocityField perturbed(field, perturbation);
  const auto x0 = sample_initial_positions(rho_grid, rho0, config.n_paths, config.seed, config.direction);
  const TrajectoryEnsemble base_ens = sample_from_positions(field, params, config, x0);
  const TrajectoryEnsemble pert_ens = sample_from_positions(perturbed, params, config, x0);
  const PathActions base = action_per_path(base_ens, field, params, potential, spec);
  const PathActions pert = action_per_path(pert_ens, perturbed, params, potential, spec);

  std::vector<double> diff, b, q;
  for (std::size_t p = 0; p < config.n_paths; ++p) {
    if (!base.used[p] || !pert.used[p]) continue;
    diff.push_back(pert.j_r[p] - base.j_r[p]);
    b.push_back(base.j_r[p]);
    q.push_back(pert.j_r[p]);
  }
  ProbeResult r;
  r.n_pairs = diff.size();
  r.delta = mean_estimate(diff);
  r.baseline = mean_estimate(b).value;
  r.perturbed = mean_estimate(q).value;
  if (r.delta.value == 0.0 && r.delta.std_error == 0.0) {
    r.sign = ProbeSign::zero;
  } else if (r.delta.value > n_std_errors * r.delta.std_error) {
    r.sign = ProbeSign::positive;
  } else if (r.delta.value < -n_std_errors * r.delta.std_error) {
    r.sign = ProbeSign::negative;
  } else {
    r.sign = ProbeSign::inconclusive;
  }
  return r;
}

}  // namespace qam
