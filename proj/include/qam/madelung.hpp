#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qam/grid.hpp"
#include "qam/potential.hpp"
#include "qam/wavefield.hpp"

namespace qam {

/// Hydrodynamic decomposition psi = sqrt(rho) exp(i S / hbar) on a grid, with the drift
/// v = d_x S / m and osmotic u = (hbar / 2m) d_x ln rho velocities. Arrays are row-major
/// (times x points).
struct MadelungFields {
  GridSpec grid;
  PhysicalParams params;
  std::vector<double> times;
  double density_floor = 0.0;

  std::vector<double> rho;
  std::vector<double> action;
  std::vector<double> drift;
  std::vector<double> osmotic;
  std::vector<std::uint8_t> low_density;  // rho < 10 eps
  std::vector<std::uint8_t> node_detected;  // per time slice

  std::size_t n_times() const { return times.size(); }
  std::size_t index(std::size_t k, std::size_t i) const { return k * grid.n_points + i; }
  bool trusted(std::size_t k, std::size_t i) const { return low_density[index(k, i)] == 0; }
  bool any_node() const;
};

/// 1e-12 times the largest density in the field.
double recommended_density_floor(const WaveField& field);

MadelungFields madelung_decompose(const WaveField& field, const PhysicalParams& params,
                                  double density_floor);

struct ResidualReport {
  double continuity_sup = 0.0;
  double continuity_l2 = 0.0;
  double qhj_sup = 0.0;
  double qhj_l2 = 0.0;
  std::size_t points_used = 0;
  // Per (time, point) residuals; zero outside the trusted region and on the stencil rim.
  std::vector<double> continuity;
  std::vector<double> qhj;
};

/// Residuals of the continuity and quantum Hamilton-Jacobi equations evaluated with
/// centred differences wherever every stencil point has rho > 10 eps.
ResidualReport madelung_residuals(const MadelungFields& fields, const Potential& potential);

}  // namespace qam
