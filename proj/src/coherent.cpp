#include "qam/coherent.hpp"

#include <cmath>
#include <numbers>

#include "qam/error.hpp"

namespace qam {

void validate(const CoherentStateSpec& spec) {
  validate(spec.params);
  if (!(spec.omega > 0.0) || !std::isfinite(spec.omega)) {
    throw Error(ErrorKind::invalid_argument, "omega must be > 0");
  }
  if (!(spec.n_mean >= 0.0) || !std::isfinite(spec.n_mean)) {
    throw Error(ErrorKind::invalid_argument, "n_mean must be >= 0");
  }
}

PhaseSpacePoint classical_trajectory(const CoherentStateSpec& spec, double t) {
  validate(spec);
  if (!std::isfinite(t)) throw Error(ErrorKind::invalid_argument, "time must be finite");
  const double amplitude = 2.0 * std::sqrt(spec.n_mean);
  return {amplitude * spec.x_zpf() * std::sin(spec.omega * t),
          amplitude * spec.p_zpf() * std::cos(spec.omega * t)};
}

std::vector<std::complex<double>> coherent_wavefunction(const CoherentStateSpec& spec, double t,
                                                        const GridSpec& grid) {
  const PhaseSpacePoint cl = classical_trajectory(spec, t);
  const double s2 = spec.x_zpf() * spec.x_zpf();
  const double hbar = spec.params.hbar;
  const double amplitude = std::pow(2.0 * std::numbers::pi * s2, -0.25);

  std::vector<std::complex<double>> psi(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    const double x = grid.x(i);
    const double dxc = x - cl.x;
    const double modulus = amplitude * std::exp(-dxc * dxc / (4.0 * s2));
    const double phase = (x * cl.p - 0.5 * cl.x * cl.p) / hbar - 0.5 * spec.omega * t;
    psi[i] = std::polar(modulus, phase);
  }
  constexpr double kBoundary = 1e-8;
  if (std::abs(psi.front()) >= kBoundary || std::abs(psi.back()) >= kBoundary) {
    throw Error(ErrorKind::grid_truncation, "coherent state amplitude at grid boundary exceeds 1e-8");
  }
  return psi;
}

CoherentVelocity coherent_velocity_fields(const CoherentStateSpec& spec, double t) {
  const PhaseSpacePoint cl = classical_trajectory(spec, t);
  return {cl.x, cl.p, spec.params.mass, spec.omega};
}

}  // namespace qam
