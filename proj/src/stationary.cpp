#include "qam/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "qam/analysis.hpp"
#include "qam/error.hpp"
#include "qam/kinematics.hpp"
#include "qam/velocity.hpp"

namespace qam {
namespace {

namespace odeint = boost::numeric::odeint;

struct PoleHit {};

// Integrates the Riccati equation from one boundary to the matching index and stores
// u at every grid node passed on the way.
void shoot(const Potential& potential, const PhysicalParams& params, double energy, const GridSpec& grid,
           std::size_t match, bool from_left, const ShootingOptions& opt, std::vector<double>& u_out) {
  const double m = params.mass;
  const double hbar = params.hbar;
  const std::size_t start = from_left ? 0 : grid.n_points - 1;
  const double sign = from_left ? 1.0 : -1.0;
  // The asymptotic start value is not an exact solution; its error decays as a stiff
  // transient. Starting a short way outside the grid lets it die out before the first
  // node, where it would otherwise dominate the finite-difference residual.
  double xb = grid.x(start) - sign * 0.05 * (grid.x_max - grid.x_min);
  if (!(potential.value(xb) - energy > potential.value(grid.x(start)) - energy)) xb = grid.x(start);
  const double excess = potential.value(xb) - energy;
  // Leading WKB behaviour plus its first correction.
  double u = sign * std::sqrt(2.0 * excess / m) - hbar * (-potential.force(xb)) / (4.0 * m * excess);

  std::vector<double> xs;
  const bool extended = xb != grid.x(start);
  if (extended) xs.push_back(xb);
  if (from_left) {
    for (std::size_t i = 0; i <= match; ++i) xs.push_back(grid.x(i));
  } else {
    for (std::size_t i = grid.n_points - 1; i + 1 > match; --i) xs.push_back(grid.x(i));
  }

  auto rhs = [&](const double& uu, double& du, double x) {
    if (!std::isfinite(uu) || std::abs(uu) > opt.pole_bound) throw PoleHit{};
    du = (2.0 / hbar) * (potential.value(x) - energy - 0.5 * m * uu * uu);
  };
  std::size_t idx = 0;
  bool skip = extended;
  auto observer = [&](const double& uu, double) {
    if (skip) {
      skip = false;
      return;
    }
    const std::size_t i = from_left ? idx : grid.n_points - 1 - idx;
    u_out[i] = uu;
    ++idx;
  };
  auto stepper = odeint::make_controlled(opt.ode_abs_tol, opt.ode_rel_tol, odeint::runge_kutta_dopri5<double>());
  const double h0 = (from_left ? 1.0 : -1.0) * grid.dx * 0.1;
  try {
    odeint::integrate_times(stepper, rhs, u, xs.begin(), xs.end(), h0, observer);
  } catch (const PoleHit&) {
    throw Error(ErrorKind::node_encountered,
                "osmotic velocity develops a pole at E = " + std::to_string(energy) + " (excited-state territory)");
  } catch (const std::exception& e) {
    throw Error(ErrorKind::node_encountered, std::string("Riccati integration failed: ") + e.what());
  }
}

double matching_defect(const Potential& potential, const PhysicalParams& params, double energy, const GridSpec& grid,
                       std::size_t match, const ShootingOptions& opt, std::vector<double>& u) {
  shoot(potential, params, energy, grid, match, true, opt, u);
  const double left = u[match];
  shoot(potential, params, energy, grid, match, false, opt, u);
  const double right = u[match];
  return left - right;
}

}  // namespace

StationarySolution solve_stationary_ground(const Potential& potential, const PhysicalParams& params, double e_lo,
                                           double e_hi, const GridSpec& grid, const ShootingOptions& opt) {
  validate(params);
  if (!(e_hi > e_lo)) throw Error(ErrorKind::inverted_bounds, "energy bracket must satisfy E_lo < E_hi");
  if (!(potential.value(grid.x_min) > e_hi) || !(potential.value(grid.x_max) > e_hi)) {
    throw Error(ErrorKind::invalid_argument, "potential must exceed E_hi at both grid boundaries");
  }

  // Match at the potential minimum, kept away from the boundaries. When the minimum is
  // degenerate (symmetric multi-well) the match sits halfway between the outermost minima,
  // so neither shot has to tunnel through a barrier where excited-state poles form.
  double v_min = potential.value(grid.x(2));
  for (std::size_t i = 2; i + 2 < grid.n_points; ++i) v_min = std::min(v_min, potential.value(grid.x(i)));
  const double v_tol = 1e-12 * std::max(1.0, std::abs(v_min));
  std::size_t first_min = grid.n_points, last_min = 0;
  for (std::size_t i = 2; i + 2 < grid.n_points; ++i) {
    if (potential.value(grid.x(i)) <= v_min + v_tol) {
      first_min = std::min(first_min, i);
      last_min = i;
    }
  }
  const std::size_t match = (first_min + last_min) / 2;

  std::vector<double> u(grid.n_points, 0.0);
  double lo = e_lo, hi = e_hi;
  const double d_lo = matching_defect(potential, params, lo, grid, match, opt, u);
  const double d_hi = matching_defect(potential, params, hi, grid, match, opt, u);
  if (d_lo * d_hi > 0.0) {
    throw Error(ErrorKind::no_bracket, "matching defect has the same sign at E_lo and E_hi");
  }

  StationarySolution sol;
  sol.grid = grid;
  sol.matching_x = grid.x(match);
  sol.tol = opt.tol;
  double f_lo = d_lo;
  while (hi - lo > opt.tol && sol.iterations < opt.max_iterations) {
    const double mid = 0.5 * (lo + hi);
    const double d = matching_defect(potential, params, mid, grid, match, opt, u);
    ++sol.iterations;
    if (d == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((d > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = d;
    } else {
      hi = mid;
    }
  }
  sol.converged = hi - lo <= opt.tol;
  sol.energy = 0.5 * (lo + hi);

  // Final profile: left branch up to the matching node, right branch beyond it.
  std::vector<double> left(grid.n_points), right(grid.n_points);
  shoot(potential, params, sol.energy, grid, match, true, opt, left);
  shoot(potential, params, sol.energy, grid, match, false, opt, right);
  sol.u_profile.resize(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) sol.u_profile[i] = i <= match ? left[i] : right[i];
  sol.rho = density_from_osmotic(sol.u_profile, grid, params);
  sol.residual_sup = riccati_residual_sup(sol.u_profile, sol.energy, grid, potential, params);
  return sol;
}

std::vector<double> density_from_osmotic(std::span<const double> u, const GridSpec& grid, const PhysicalParams& params) {
  const std::size_t n = grid.n_points;
  if (u.size() != n) throw Error(ErrorKind::invalid_argument, "profile size does not match grid");
  for (double v : u) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "osmotic profile must be finite");
  }
  const double dx = grid.dx;
  std::vector<double> du(n);
  du[0] = (u[1] - u[0]) / dx;
  du[n - 1] = (u[n - 1] - u[n - 2]) / dx;
  for (std::size_t i = 1; i + 1 < n; ++i) du[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);

  // Trapezoid with endpoint-derivative correction, exact for cubic integrands.
  const double scale = 2.0 * params.mass / params.hbar;
  std::vector<double> log_rho(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double cell = 0.5 * dx * (u[i - 1] + u[i]) - dx * dx / 12.0 * (du[i] - du[i - 1]);
    log_rho[i] = log_rho[i - 1] + scale * cell;
  }
  const double peak = *std::max_element(log_rho.begin(), log_rho.end());
  std::vector<double> rho(n);
  for (std::size_t i = 0; i < n; ++i) rho[i] = std::exp(log_rho[i] - peak);
  const double mass = trapezoid(grid, rho);
  for (double& r : rho) r /= mass;
  return rho;
}

double riccati_residual_sup(std::span<const double> u, double energy, const GridSpec& grid, const Potential& potential,
                            const PhysicalParams& params) {
  const std::size_t n = grid.n_points;
  double sup = 0.0;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double du = (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]) / (12.0 * grid.dx);
    const double r = 0.5 * params.mass * u[i] * u[i] + 0.5 * params.hbar * du - potential.value(grid.x(i)) + energy;
    sup = std::max(sup, std::abs(r));
  }
  return sup;
}

std::size_t count_sign_changes(std::span<const double> u) {
  std::size_t changes = 0;
  for (std::size_t i = 1; i < u.size(); ++i) {
    if ((u[i - 1] > 0.0 && u[i] <= 0.0) || (u[i - 1] < 0.0 && u[i] >= 0.0)) ++changes;
  }
  return changes;
}

MadelungFields stationary_fields(const StationarySolution& sol, const PhysicalParams& params) {
  const std::size_t n = sol.grid.n_points;
  MadelungFields f;
  f.grid = sol.grid;
  f.params = params;
  f.times = {0.0};
  const double peak = *std::max_element(sol.rho.begin(), sol.rho.end());
  f.density_floor = 1e-12 * peak;
  f.rho = sol.rho;
  f.action.assign(n, 0.0);
  f.drift.assign(n, 0.0);
  f.osmotic = sol.u_profile;
  f.low_density.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.low_density[i] = sol.rho[i] < 10.0 * f.density_floor ? 1 : 0;
  f.node_detected = {0};
  return f;
}

StationaryCheck verify_stationary_by_sampling(const StationarySolution& sol, const PhysicalParams& params,
                                              std::size_t n_paths, double horizon, double dt_sde, std::uint64_t seed,
                                              double threshold) {
  if (!sol.converged) throw Error(ErrorKind::invalid_argument, "stationary solution did not converge");
  auto fields = std::make_shared<const MadelungFields>(stationary_fields(sol, params));
  const GridVelocityField field(fields);

  SdeConfig cfg;
  cfg.dt_sde = dt_sde;
  cfg.n_paths = n_paths;
  cfg.seed = seed;
  cfg.boundary = BoundaryPolicy::reflect;
  cfg.t_start = 0.0;
  cfg.t_end = horizon;
  cfg.record_every = cfg.n_steps();
  const TrajectoryEnsemble ens = sample_forward(field, params, cfg, sol.grid, sol.rho);

  const GridCdf cdf(sol.grid, sol.rho);
  StationaryCheck check;
  check.n_paths = n_paths;
  check.threshold = threshold;
  check.ks = ks_distance(ens.marginal(ens.n_times() - 1), [&cdf](double x) { return cdf(x); });
  check.passed = check.ks < threshold;
  return check;
}

}  // namespace qam
