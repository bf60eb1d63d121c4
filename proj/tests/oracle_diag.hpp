#pragma once

// Grid Hamiltonian diagonalization, the reference for the stationary solver.

#include <vector>

#include <Eigen/Dense>

#include "qam/grid.hpp"
#include "qam/potential.hpp"

namespace oracle {

struct GroundState {
  double energy = 0.0;
  std::vector<double> rho;  // on every grid node, zero at the Dirichlet ends
};

/// Lowest eigenpair of the 3-point finite-difference Hamiltonian with Dirichlet ends.
inline GroundState fd_ground_state(const qam::Potential& v, const qam::GridSpec& g, const qam::PhysicalParams& p) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.n_points) - 2;
  const double kin = p.hbar * p.hbar / (2.0 * p.mass * g.dx * g.dx);
  Eigen::VectorXd diag(n), off(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) diag[i] = 2.0 * kin + v.value(g.x(static_cast<std::size_t>(i) + 1));
  off.setConstant(-kin);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  GroundState out;
  out.energy = solver.eigenvalues()[0];
  out.rho.assign(g.n_points, 0.0);
  double norm = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = solver.eigenvectors()(i, 0);
    out.rho[static_cast<std::size_t>(i) + 1] = c * c;
    norm += c * c * g.dx;
  }
  for (double& r : out.rho) r /= norm;
  return out;
}

/// Ground energy Richardson-extrapolated from the grid and its half-spacing refinement.
inline double fd_ground_energy_extrapolated(const qam::Potential& v, const qam::GridSpec& g,
                                            const qam::PhysicalParams& p) {
  const qam::GridSpec fine = qam::build_grid(g.x_min, g.x_max, 2 * g.n_points - 1, g.dt_pde);
  return (4.0 * fd_ground_state(v, fine, p).energy - fd_ground_state(v, g, p).energy) / 3.0;
}

}  // namespace oracle
