#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace qam {

/// Uniform 1D configuration-space grid plus the PDE time step used on it.
struct GridSpec {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t n_points = 0;
  double dx = 0.0;
  double dt_pde = 0.0;

  double x(std::size_t i) const { return x_min + dx * static_cast<double>(i); }
  std::vector<double> nodes() const;
};

GridSpec build_grid(double x_min, double x_max, std::size_t n_points, double dt_pde);

struct PhysicalParams {
  double mass = 1.0;
  double hbar = 1.0;

  // ħ/m is the variance rate of the Wiener term.
  double diffusion() const { return hbar / mass; }
  double noise_amplitude() const { return std::sqrt(hbar / mass); }
};

void validate(const PhysicalParams& params);

double trapezoid(const GridSpec& grid, std::span<const double> values);

/// Running trapezoid integral; element i holds the integral over [x_min, x_i].
std::vector<double> cumulative_trapezoid(const GridSpec& grid, std::span<const double> values);

}  // namespace qam
