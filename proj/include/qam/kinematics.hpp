#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qam/grid.hpp"
#include "qam/potential.hpp"
#include "qam/velocity.hpp"

namespace qam {

enum class Direction { forward, backward };
enum class BoundaryPolicy { reflect, absorb };

struct SdeConfig {
  double dt_sde = 1e-3;
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  Direction direction = Direction::forward;
  BoundaryPolicy boundary = BoundaryPolicy::reflect;
  double t_start = 0.0;
  double t_end = 1.0;
  std::size_t record_every = 1;

  /// Number of Euler-Maruyama steps covering [t_start, t_end].
  std::size_t n_steps() const;
};

void validate(const SdeConfig& config);

/// Sampled paths on recorded physical times (ascending for both directions).
struct TrajectoryEnsemble {
  std::vector<double> times;
  std::vector<double> positions;  // n_paths x n_times, row-major
  std::size_t n_paths = 0;
  Direction direction = Direction::forward;
  std::uint64_t seed = 0;
  double dt_sde = 0.0;
  bool stationary = false;
  std::vector<std::uint64_t> stream_ids;
  // Recorded index of absorption, -1 if never absorbed. Forward paths are invalid from
  // that index on; backward paths (integrated from t_end down) are invalid up to it.
  std::vector<std::int64_t> absorbed_at;

  std::size_t n_times() const { return times.size(); }
  double at(std::size_t path, std::size_t k) const { return positions[path * times.size() + k]; }
  std::span<const double> path(std::size_t p) const { return {positions.data() + p * times.size(), times.size()}; }
  bool valid(std::size_t path, std::size_t k) const;
  /// Positions of all still-valid paths at recorded index k.
  std::vector<double> marginal(std::size_t k) const;
  /// Index of the recorded time equal to t; throws horizon otherwise.
  std::size_t time_index(double t) const;
};

/// Stream id of a path; forward and backward ensembles never share noise.
std::uint64_t stream_id(std::size_t path, Direction direction);

/// i.i.d. draws from rho0 by inverting the piecewise-linear cumulative trapezoid integral.
std::vector<double> sample_initial_positions(const GridSpec& grid, std::span<const double> rho0,
                                             std::size_t n_paths, std::uint64_t seed,
                                             Direction direction = Direction::forward);

/// Euler-Maruyama for dx = (v + u) dt + sqrt(hbar/m) dW, paths parallel over OpenMP workers.
TrajectoryEnsemble sample_forward(const VelocityField& field, const PhysicalParams& params,
                                  const SdeConfig& config, const GridSpec& rho_grid,
                                  std::span<const double> rho0);

/// Time-reversed integration y(s) = x(T - s), dy = (u - v)(y, T - s) ds + sqrt(hbar/m) dW,
/// started from rhoT at t_end and re-indexed to physical time.
TrajectoryEnsemble sample_backward(const VelocityField& field, const PhysicalParams& params,
                                   const SdeConfig& config, const GridSpec& rho_grid,
                                   std::span<const double> rhoT);

/// Ensemble from explicit starting points (used by both samplers and by tests).
TrajectoryEnsemble sample_from_positions(const VelocityField& field, const PhysicalParams& params,
                                         const SdeConfig& config, std::span<const double> x0);

struct BinnedEstimate {
  std::vector<double> edges;
  std::vector<double> centers;
  std::vector<double> mean;
  std::vector<double> std_error;
  std::vector<double> x_mean;
  std::vector<std::size_t> count;
  std::vector<std::uint8_t> flagged;  // fewer than min_count paths
};

std::vector<double> uniform_edges(double lo, double hi, std::size_t n_bins);

using PathFunction = std::function<double(double x, double t)>;

/// Binned conditional difference quotient of f along paths:
/// forward  E[(f(x(t+dt), t+dt) - f(x(t), t)) / dt | x(t) in bin],
/// backward E[(f(x(t), t) - f(x(t-dt), t-dt)) / dt | x(t) in bin].
BinnedEstimate binned_mean_derivative(const TrajectoryEnsemble& ensemble, const PathFunction& f, double t,
                                      double delta_t, std::span<const double> edges, Direction which,
                                      std::size_t min_count = 50);

/// D_f x or D_b x.
BinnedEstimate mean_derivative(const TrajectoryEnsemble& ensemble, double t, double delta_t,
                               std::span<const double> edges, Direction which, std::size_t min_count = 50);

struct NewtonEstimate {
  std::vector<double> centers;
  std::vector<double> acceleration;  // (1/2)(D_f D_b + D_b D_f) x
  std::vector<double> acceleration_std_error;
  std::vector<double> force_over_mass;
  std::vector<double> residual;  // m a - F
  std::vector<double> residual_std_error;
  std::vector<std::size_t> count_forward;
  std::vector<std::size_t> count_backward;
  std::vector<std::uint8_t> trusted;
};

/// Nelson-Newton check: D_f acts on the field v - u along the forward ensemble and
/// D_b on v + u along the backward ensemble.
NewtonEstimate nelson_newton_residual(const TrajectoryEnsemble& forward, const TrajectoryEnsemble& backward,
                                      const VelocityField& field, const PhysicalParams& params,
                                      const Potential& potential, double t, double delta_t,
                                      std::span<const double> edges, std::size_t min_count = 50);

namespace reference {

/// Same contract as sample_from_positions, single-threaded.
TrajectoryEnsemble sample_from_positions(const VelocityField& field, const PhysicalParams& params,
                                         const SdeConfig& config, std::span<const double> x0);

}  // namespace reference

}  // namespace qam
