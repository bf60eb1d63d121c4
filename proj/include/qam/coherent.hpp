#pragma once

#include <complex>
#include <vector>

#include "qam/grid.hpp"

namespace qam {

struct CoherentStateSpec {
  double omega = 1.0;
  double n_mean = 0.0;
  PhysicalParams params;

  double x_zpf_squared() const { return params.hbar / (2.0 * params.mass * omega); }
  double x_zpf() const { return std::sqrt(x_zpf_squared()); }
  double p_zpf() const { return std::sqrt(params.hbar * params.mass * omega / 2.0); }
  double classical_energy() const { return n_mean * params.hbar * omega; }
};

void validate(const CoherentStateSpec& spec);

struct PhaseSpacePoint {
  double x = 0.0;
  double p = 0.0;
};

/// Classical oscillator orbit x = 2 sqrt(<n>) x_zpf sin(wt), p = 2 sqrt(<n>) p_zpf cos(wt).
PhaseSpacePoint classical_trajectory(const CoherentStateSpec& spec, double t);

/// Minimum-uncertainty Gaussian centred on the classical orbit, sampled on the grid.
/// Throws grid_truncation when |psi| at either boundary reaches 1e-8.
std::vector<std::complex<double>> coherent_wavefunction(const CoherentStateSpec& spec, double t,
                                                        const GridSpec& grid);

/// Closed-form velocity fields of the coherent state at a fixed time:
/// v = p_cl / m (uniform), u = -omega (x - x_cl).
struct CoherentVelocity {
  double x_cl = 0.0;
  double p_cl = 0.0;
  double mass = 1.0;
  double omega = 1.0;

  double v(double /*x*/) const { return p_cl / mass; }
  double u(double x) const { return -omega * (x - x_cl); }
};

CoherentVelocity coherent_velocity_fields(const CoherentStateSpec& spec, double t);

}  // namespace qam
