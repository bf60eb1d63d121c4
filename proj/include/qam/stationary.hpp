#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qam/grid.hpp"
#include "qam/madelung.hpp"
#include "qam/potential.hpp"

namespace qam {

/// Ground state obtained from the stationary quantum Hamilton equations (v = 0, p = m u):
/// the Riccati first integral (m/2) u^2 + (hbar/2) u' = V - E with E as shooting parameter.
struct StationarySolution {
  GridSpec grid;
  double energy = 0.0;
  std::vector<double> u_profile;
  std::vector<double> rho;
  bool converged = false;
  std::size_t iterations = 0;
  double residual_sup = 0.0;
  double matching_x = 0.0;
  double tol = 0.0;
};

struct ShootingOptions {
  double tol = 1e-11;  // bracket width at which bisection stops
  std::size_t max_iterations = 200;
  double ode_abs_tol = 1e-12;
  double ode_rel_tol = 1e-12;
  double pole_bound = 1e8;  // |u| beyond this is treated as a pole
};

/// Shoots u inward from both boundaries (decaying WKB start values) and bisects on E
/// until the two branches meet at the potential minimum.
StationarySolution solve_stationary_ground(const Potential& potential, const PhysicalParams& params, double e_lo,
                                           double e_hi, const GridSpec& grid, const ShootingOptions& options = {});

/// rho(x) proportional to exp((2m / hbar) int u dx'), accumulated in the log domain.
std::vector<double> density_from_osmotic(std::span<const double> u, const GridSpec& grid,
                                         const PhysicalParams& params);

/// sup |(m/2) u^2 + (hbar/2) u' - V + E| over the interior, u' by fourth-order differences.
double riccati_residual_sup(std::span<const double> u, double energy, const GridSpec& grid,
                            const Potential& potential, const PhysicalParams& params);

std::size_t count_sign_changes(std::span<const double> u);

/// Static single-slice fields: rho, S = 0, v = 0, u = profile.
MadelungFields stationary_fields(const StationarySolution& solution, const PhysicalParams& params);

struct StationaryCheck {
  double ks = 0.0;
  double threshold = 0.02;
  std::size_t n_paths = 0;
  bool passed = false;
};

/// Starts an ensemble in rho, runs dx = u dt + sqrt(hbar/m) dW for time T with reflecting
/// walls and compares the final empirical law against rho.
StationaryCheck verify_stationary_by_sampling(const StationarySolution& solution, const PhysicalParams& params,
                                              std::size_t n_paths, double horizon, double dt_sde,
                                              std::uint64_t seed, double threshold = 0.02);

}  // namespace qam
