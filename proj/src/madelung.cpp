#include "qam/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qam/error.hpp"

namespace qam {
namespace {

double wrap_phase(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0.0) a += two_pi;
  return a - std::numbers::pi;
}

// Central difference in the interior, one-sided at the ends.
void differentiate(const double* f, double* out, std::size_t n, double dx) {
  out[0] = (f[1] - f[0]) / dx;
  out[n - 1] = (f[n - 1] - f[n - 2]) / dx;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
}

}  // namespace

bool MadelungFields::any_node() const {
  return std::any_of(node_detected.begin(), node_detected.end(), [](std::uint8_t f) { return f != 0; });
}

double recommended_density_floor(const WaveField& field) {
  double peak = 0.0;
  for (const Complex& c : field.psi) peak = std::max(peak, std::norm(c));
  return 1e-12 * peak;
}

MadelungFields madelung_decompose(const WaveField& field, const PhysicalParams& params,
                                  double density_floor) {
  validate(params);
  if (!(density_floor > 0.0)) throw Error(ErrorKind::invalid_argument, "density floor must be > 0");
  const std::size_t n = field.grid.n_points;
  const std::size_t nt = field.n_times();
  if (nt == 0) throw Error(ErrorKind::invalid_argument, "wave field has no time slices");

  MadelungFields out;
  out.grid = field.grid;
  out.params = params;
  out.times = field.times;
  out.density_floor = density_floor;
  out.rho.resize(nt * n);
  out.action.resize(nt * n);
  out.drift.resize(nt * n);
  out.osmotic.resize(nt * n);
  out.low_density.resize(nt * n);
  out.node_detected.assign(nt, 0);

  const double hbar = params.hbar;
  const double m = params.mass;
  std::vector<double> log_rho(n);
  std::vector<double> phase(n);

  for (std::size_t k = 0; k < nt; ++k) {
    const auto psi = field.slice(k);
    double* rho = out.rho.data() + k * n;
    double* s = out.action.data() + k * n;

    std::size_t peak = 0;
    for (std::size_t i = 0; i < n; ++i) {
      rho[i] = std::norm(psi[i]);
      phase[i] = std::arg(psi[i]);
      if (rho[i] > rho[peak]) peak = i;
      out.low_density[k * n + i] = rho[i] < 10.0 * density_floor ? 1 : 0;
      log_rho[i] = std::log(std::max(rho[i], density_floor));
    }

    // Unwrap outward from the density maximum, the most trusted phase sample.
    s[peak] = hbar * phase[peak];
    for (std::size_t i = peak + 1; i < n; ++i) s[i] = s[i - 1] + hbar * wrap_phase(phase[i] - phase[i - 1]);
    for (std::size_t i = peak; i-- > 0;) s[i] = s[i + 1] + hbar * wrap_phase(phase[i] - phase[i + 1]);

    // Keep S continuous in time at the current density maximum.
    if (k > 0) {
      const double jump = s[peak] - out.action[(k - 1) * n + peak];
      const double turns = std::round(jump / (2.0 * std::numbers::pi * hbar));
      if (turns != 0.0) {
        for (std::size_t i = 0; i < n; ++i) s[i] -= turns * 2.0 * std::numbers::pi * hbar;
      }
    }

    differentiate(s, out.drift.data() + k * n, n, field.grid.dx);
    differentiate(log_rho.data(), out.osmotic.data() + k * n, n, field.grid.dx);
    for (std::size_t i = 0; i < n; ++i) {
      out.drift[k * n + i] /= m;
      out.osmotic[k * n + i] *= hbar / (2.0 * m);
    }

    // A node is a sub-floor point with trusted density on both sides of it.
    std::size_t first = n, last = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.low_density[k * n + i]) {
        first = std::min(first, i);
        last = i;
      }
    }
    for (std::size_t i = first + 1; first < n && i < last; ++i) {
      if (rho[i] < density_floor) {
        out.node_detected[k] = 1;
        break;
      }
    }
  }
  return out;
}

ResidualReport madelung_residuals(const MadelungFields& fields, const Potential& potential) {
  const std::size_t nt = fields.n_times();
  if (nt < 3) throw Error(ErrorKind::insufficient_time_slices, "need at least 3 time slices");
  const std::size_t n = fields.grid.n_points;
  const double dx = fields.grid.dx;
  const double m = fields.params.mass;
  const double hbar = fields.params.hbar;

  ResidualReport report;
  report.continuity.assign(nt * n, 0.0);
  report.qhj.assign(nt * n, 0.0);

  std::vector<double> flux(n);
  double cont_sq = 0.0, qhj_sq = 0.0;
  for (std::size_t k = 1; k + 1 < nt; ++k) {
    const double dt2 = fields.times[k + 1] - fields.times[k - 1];
    const double weight = dx * 0.5 * dt2;
    for (std::size_t i = 0; i < n; ++i) flux[i] = fields.drift[fields.index(k, i)] * fields.rho[fields.index(k, i)];

    for (std::size_t i = 2; i + 2 < n; ++i) {
      bool ok = fields.trusted(k - 1, i) && fields.trusted(k + 1, i);
      for (std::size_t j = i - 2; ok && j <= i + 2; ++j) ok = fields.trusted(k, j);
      if (!ok) continue;

      const std::size_t c = fields.index(k, i);
      const double drho_dt = (fields.rho[fields.index(k + 1, i)] - fields.rho[fields.index(k - 1, i)]) / dt2;
      const double dflux_dx = (flux[i + 1] - flux[i - 1]) / (2.0 * dx);
      const double r_cont = drho_dt + dflux_dx;

      const double ds_dt = (fields.action[fields.index(k + 1, i)] - fields.action[fields.index(k - 1, i)]) / dt2;
      const double grad_s = m * fields.drift[c];
      const double amp_l = std::sqrt(fields.rho[c - 1]);
      const double amp_c = std::sqrt(fields.rho[c]);
      const double amp_r = std::sqrt(fields.rho[c + 1]);
      const double quantum = hbar * hbar / (2.0 * m) * (amp_l - 2.0 * amp_c + amp_r) / (dx * dx * amp_c);
      const double r_qhj = ds_dt + grad_s * grad_s / (2.0 * m) + potential.value(fields.grid.x(i)) - quantum;

      report.continuity[c] = r_cont;
      report.qhj[c] = r_qhj;
      report.continuity_sup = std::max(report.continuity_sup, std::abs(r_cont));
      report.qhj_sup = std::max(report.qhj_sup, std::abs(r_qhj));
      cont_sq += r_cont * r_cont * weight;
      qhj_sq += r_qhj * r_qhj * weight;
      ++report.points_used;
    }
  }
  report.continuity_l2 = std::sqrt(cont_sq);
  report.qhj_l2 = std::sqrt(qhj_sq);
  return report;
}

}  // namespace qam
