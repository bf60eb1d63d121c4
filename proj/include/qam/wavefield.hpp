#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "qam/grid.hpp"
#include "qam/potential.hpp"

namespace qam {

using Complex = std::complex<double>;

/// psi(x, t) on a grid, one row per stored time (row-major times x points).
struct WaveField {
  GridSpec grid;
  std::vector<double> times;
  std::vector<Complex> psi;

  std::size_t n_times() const { return times.size(); }
  std::span<const Complex> slice(std::size_t k) const {
    return {psi.data() + k * grid.n_points, grid.n_points};
  }
  std::span<Complex> slice(std::size_t k) { return {psi.data() + k * grid.n_points, grid.n_points}; }

  /// sum |psi|^2 dx of stored slice k.
  double norm(std::size_t k) const;
};

WaveField single_slice(const GridSpec& grid, double t, std::vector<Complex> psi);

/// Normalized Gaussian packet exp(-(x - x0)^2 / (4 sigma^2) + i k0 x).
std::vector<Complex> gaussian_packet(const GridSpec& grid, double x0, double sigma, double k0);

struct CrankNicolsonOptions {
  std::size_t n_steps = 0;
  std::size_t store_every = 1;
  double leakage_threshold = 1e-6;
  double initial_boundary_threshold = 1e-8;
  double norm_tolerance = 1e-8;
};

/// Propagates i hbar d_t psi = (-hbar^2/2m d_x^2 + V) psi with homogeneous Dirichlet ends.
/// The time step is grid.dt_pde and must satisfy dt_pde <= dx^2 m / hbar.
WaveField propagate_crank_nicolson(std::span<const Complex> psi0, double t0, const Potential& potential,
                                   const PhysicalParams& params, const GridSpec& grid,
                                   const CrankNicolsonOptions& options);

}  // namespace qam
