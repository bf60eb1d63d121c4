#include "qam/wavefield.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qam/error.hpp"

namespace qam {

double WaveField::norm(std::size_t k) const {
  const auto s = slice(k);
  double sum = 0.0;
  for (const Complex& c : s) sum += std::norm(c);
  return sum * grid.dx;
}

WaveField single_slice(const GridSpec& grid, double t, std::vector<Complex> psi) {
  if (psi.size() != grid.n_points) {
    throw Error(ErrorKind::invalid_argument, "wavefunction size does not match grid");
  }
  WaveField field;
  field.grid = grid;
  field.times = {t};
  field.psi = std::move(psi);
  return field;
}

std::vector<Complex> gaussian_packet(const GridSpec& grid, double x0, double sigma, double k0) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::invalid_argument, "packet width must be > 0");
  const double amplitude = std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25);
  std::vector<Complex> psi(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    const double d = grid.x(i) - x0;
    psi[i] = std::polar(amplitude * std::exp(-d * d / (4.0 * sigma * sigma)), k0 * grid.x(i));
  }
  // Renormalize on the grid so the discrete norm is exactly one.
  double sum = 0.0;
  for (const Complex& c : psi) sum += std::norm(c);
  const double scale = 1.0 / std::sqrt(sum * grid.dx);
  for (Complex& c : psi) c *= scale;
  return psi;
}

WaveField propagate_crank_nicolson(std::span<const Complex> psi0, double t0, const Potential& potential,
                                   const PhysicalParams& params, const GridSpec& grid,
                                   const CrankNicolsonOptions& options) {
  validate(params);
  const std::size_t n = grid.n_points;
  if (psi0.size() != n) throw Error(ErrorKind::invalid_argument, "wavefunction size does not match grid");
  if (options.store_every == 0) throw Error(ErrorKind::invalid_argument, "store_every must be >= 1");

  const double dt = grid.dt_pde;
  const double guard = grid.dx * grid.dx * params.mass / params.hbar;
  if (dt > guard * (1.0 + 1e-12)) {
    throw Error(ErrorKind::stability_guard, "dt_pde " + std::to_string(dt) + " exceeds dx^2 m/hbar = " +
                                                std::to_string(guard));
  }
  if (std::abs(psi0.front()) >= options.initial_boundary_threshold ||
      std::abs(psi0.back()) >= options.initial_boundary_threshold) {
    throw Error(ErrorKind::boundary_leakage, "initial state is not negligible at the boundaries");
  }
  {
    double sum = 0.0;
    for (const Complex& c : psi0) sum += std::norm(c);
    if (std::abs(sum * grid.dx - 1.0) > options.norm_tolerance) {
      throw Error(ErrorKind::not_normalized, "initial state norm deviates from 1");
    }
  }

  // Interior unknowns 1..n-2; psi_0 = psi_{n-1} = 0.
  const std::size_t m = n - 2;
  const double hbar = params.hbar;
  const double kinetic = hbar * hbar / (2.0 * params.mass * grid.dx * grid.dx);
  const Complex half_i_dt(0.0, 0.5 * dt / hbar);

  std::vector<Complex> diag(m);
  const Complex off = half_i_dt * (-kinetic);
  for (std::size_t j = 0; j < m; ++j) {
    diag[j] = 1.0 + half_i_dt * (2.0 * kinetic + potential.value(grid.x(j + 1)));
  }
  // Thomas factorization of the constant left-hand matrix (1 + i dt H / 2hbar).
  std::vector<Complex> c_prime(m);
  std::vector<Complex> inv_denom(m);
  inv_denom[0] = 1.0 / diag[0];
  c_prime[0] = off * inv_denom[0];
  for (std::size_t j = 1; j < m; ++j) {
    inv_denom[j] = 1.0 / (diag[j] - off * c_prime[j - 1]);
    c_prime[j] = off * inv_denom[j];
  }
  // Right-hand side uses the conjugate operator (1 - i dt H / 2hbar).
  std::vector<Complex> rhs_diag(m);
  for (std::size_t j = 0; j < m; ++j) rhs_diag[j] = 2.0 - diag[j];
  const Complex rhs_off = -off;

  WaveField out;
  out.grid = grid;
  const std::size_t n_store = options.n_steps / options.store_every + 1;
  out.times.reserve(n_store);
  out.psi.reserve(n_store * n);

  std::vector<Complex> cur(psi0.begin(), psi0.end());
  cur.front() = 0.0;
  cur.back() = 0.0;
  out.times.push_back(t0);
  out.psi.insert(out.psi.end(), cur.begin(), cur.end());

  std::vector<Complex> rhs(m);
  for (std::size_t step = 1; step <= options.n_steps; ++step) {
    for (std::size_t j = 0; j < m; ++j) {
      Complex r = rhs_diag[j] * cur[j + 1];
      if (j > 0) r += rhs_off * cur[j];
      if (j + 1 < m) r += rhs_off * cur[j + 2];
      rhs[j] = r;
    }
    rhs[0] *= inv_denom[0];
    for (std::size_t j = 1; j < m; ++j) rhs[j] = (rhs[j] - off * rhs[j - 1]) * inv_denom[j];
    for (std::size_t j = m - 1; j-- > 0;) rhs[j] -= c_prime[j] * rhs[j + 1];
    for (std::size_t j = 0; j < m; ++j) cur[j + 1] = rhs[j];

    if (std::norm(cur[1]) > options.leakage_threshold || std::norm(cur[n - 2]) > options.leakage_threshold) {
      throw Error(ErrorKind::boundary_leakage,
                  "boundary density exceeds threshold at t = " + std::to_string(t0 + dt * step));
    }
    if (step % options.store_every == 0) {
      out.times.push_back(t0 + dt * static_cast<double>(step));
      out.psi.insert(out.psi.end(), cur.begin(), cur.end());
    }
  }
  return out;
}

}  // namespace qam
