#include "qam/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fftw3.h>
#include <omp.h>

#include "analysis_internal.hpp"
#include "qam/error.hpp"
#include "qam/parallel.hpp"
#include "qam/stats.hpp"

namespace qam {

std::vector<double> Histogram::centers() const {
  std::vector<double> c;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) c.push_back(0.5 * (edges[b] + edges[b + 1]));
  return c;
}

Histogram histogram(std::span<const double> samples, std::span<const double> edges) {
  if (edges.size() < 2) throw Error(ErrorKind::invalid_argument, "histogram needs at least one bin");
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.counts.assign(edges.size() - 1, 0);
  for (double x : samples) {
    if (x < edges.front() || x > edges.back()) {
      ++h.n_outside;
      continue;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    std::size_t b = static_cast<std::size_t>(it - edges.begin());
    b = b == 0 ? 0 : b - 1;
    if (b >= h.counts.size()) b = h.counts.size() - 1;
    ++h.counts[b];
    ++h.n_inside;
  }
  h.density.assign(h.counts.size(), 0.0);
  if (h.n_inside > 0) {
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      h.density[b] = static_cast<double>(h.counts[b]) / (static_cast<double>(h.n_inside) * (edges[b + 1] - edges[b]));
    }
  }
  return h;
}

Histogram empirical_density(const TrajectoryEnsemble& ens, double t, std::span<const double> edges) {
  if (ens.times.empty() || t < ens.times.front() || t > ens.times.back()) {
    throw Error(ErrorKind::horizon, "time " + std::to_string(t) + " outside the ensemble horizon");
  }
  // Nearest recorded time.
  const auto it = std::lower_bound(ens.times.begin(), ens.times.end(), t);
  std::size_t k = static_cast<std::size_t>(it - ens.times.begin());
  if (k > 0 && (k == ens.n_times() || t - ens.times[k - 1] <= ens.times[k] - t)) --k;
  return histogram(ens.marginal(k), edges);
}

GridCdf::GridCdf(const GridSpec& grid, std::span<const double> rho) : grid_(grid), cdf_(cumulative_trapezoid(grid, rho)) {
  const double total = cdf_.back();
  if (!(total > 0.0)) throw Error(ErrorKind::invalid_argument, "density has no mass");
  for (double& c : cdf_) c /= total;
}

double GridCdf::operator()(double x) const {
  if (x <= grid_.x_min) return 0.0;
  if (x >= grid_.x_max) return 1.0;
  const double s = (x - grid_.x_min) / grid_.dx;
  std::size_t i = std::min(static_cast<std::size_t>(s), grid_.n_points - 2);
  const double w = s - static_cast<double>(i);
  return cdf_[i] + w * (cdf_[i + 1] - cdf_[i]);
}

double gaussian_cdf(double x, double mean, double variance) {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

double ks_distance(std::vector<double> samples, const Cdf& reference) {
  if (samples.size() < 100) throw Error(ErrorKind::too_few_samples, "KS distance needs >= 100 samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = reference(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_distance(const Histogram& hist, const Cdf& reference) {
  if (hist.n_inside < 100) throw Error(ErrorKind::too_few_samples, "KS distance needs >= 100 samples");
  double cum = 0.0;
  double d = std::abs(reference(hist.edges.front()));
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    cum += static_cast<double>(hist.counts[b]) / static_cast<double>(hist.n_inside);
    d = std::max(d, std::abs(cum - reference(hist.edges[b + 1])));
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 100 || b.size() < 100) throw Error(ErrorKind::too_few_samples, "KS distance needs >= 100 samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

Autocorrelation autocorrelation(const TrajectoryEnsemble& ens, double max_lag, Centering centering) {
  const std::vector<std::size_t> paths = detail::complete_paths(ens);
  if (paths.empty()) throw Error(ErrorKind::invalid_argument, "no complete paths");
  const std::size_t lags = detail::lag_count(ens, max_lag);
  const double h = detail::recording_interval(ens);

  if (!ens.stationary && centering == Centering::global) {
    Autocorrelation out;
    out.n_paths = paths.size();
    out.time_resolved = true;
    out.two_point = detail::two_point_function(ens, paths, lags);
    return out;
  }

  const std::size_t n = ens.n_times();
  const std::vector<double> center = detail::centering_profile(ens, paths, centering);
  const std::size_t fft_len = 2 * n;
  const std::size_t spec_len = fft_len / 2 + 1;

  double* plan_in = fftw_alloc_real(fft_len);
  fftw_complex* plan_out = fftw_alloc_complex(spec_len);
  const fftw_plan forward = fftw_plan_dft_r2c_1d(static_cast<int>(fft_len), plan_in, plan_out, FFTW_ESTIMATE);
  const fftw_plan inverse = fftw_plan_dft_c2r_1d(static_cast<int>(fft_len), plan_out, plan_in, FFTW_ESTIMATE);

  std::vector<double> per_path(paths.size() * (lags + 1));
  const auto count = static_cast<std::int64_t>(paths.size());
#pragma omp parallel
  {
    double* in = fftw_alloc_real(fft_len);
    fftw_complex* spec = fftw_alloc_complex(spec_len);
#pragma omp for schedule(static)
    for (std::int64_t ii = 0; ii < count; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const std::size_t p = paths[i];
      for (std::size_t k = 0; k < n; ++k) in[k] = ens.at(p, k) - center[k];
      std::fill(in + n, in + fft_len, 0.0);
      fftw_execute_dft_r2c(forward, in, spec);
      for (std::size_t j = 0; j < spec_len; ++j) {
        spec[j][0] = spec[j][0] * spec[j][0] + spec[j][1] * spec[j][1];
        spec[j][1] = 0.0;
      }
      fftw_execute_dft_c2r(inverse, spec, in);
      for (std::size_t j = 0; j <= lags; ++j) {
        per_path[i * (lags + 1) + j] = in[j] / static_cast<double>(fft_len) / static_cast<double>(n - j);
      }
    }
    fftw_free(in);
    fftw_free(spec);
  }
  fftw_destroy_plan(forward);
  fftw_destroy_plan(inverse);
  fftw_free(plan_in);
  fftw_free(plan_out);
  return detail::assemble(per_path, paths.size(), lags, h);
}

double SpectrumEstimate::integrated() const {
  if (freq.size() < 2) return 0.0;
  const double df = freq[1] - freq[0];
  return pairwise_sum(psd) * df;
}

SpectrumEstimate power_spectral_density(const TrajectoryEnsemble& ens, std::size_t segment_length, std::size_t overlap) {
  const std::vector<std::size_t> paths = detail::complete_paths(ens);
  if (paths.empty()) throw Error(ErrorKind::invalid_argument, "no complete paths");
  const detail::WelchPlan plan = detail::welch_plan(ens, segment_length, overlap, paths.size());
  const double h = detail::recording_interval(ens);
  const std::vector<double> center = detail::centering_profile(ens, paths, Centering::global);
  const std::size_t L = plan.length;
  const std::size_t bins = L / 2 + 1;

  double* plan_in = fftw_alloc_real(L);
  fftw_complex* plan_out = fftw_alloc_complex(bins);
  const fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(L), plan_in, plan_out, FFTW_ESTIMATE);

  std::vector<double> per_path(paths.size() * bins, 0.0);
  std::vector<double> per_path_var(paths.size(), 0.0);
  const auto count = static_cast<std::int64_t>(paths.size());
#pragma omp parallel
  {
    double* in = fftw_alloc_real(L);
    fftw_complex* out = fftw_alloc_complex(bins);
#pragma omp for schedule(static)
    for (std::int64_t ii = 0; ii < count; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const std::size_t p = paths[i];
      double* acc = per_path.data() + i * bins;
      for (std::size_t s = 0; s < plan.per_path; ++s) {
        const std::size_t start = s * plan.step;
        for (std::size_t k = 0; k < L; ++k) in[k] = plan.window[k] * (ens.at(p, start + k) - center[start + k]);
        fftw_execute_dft_r2c(fwd, in, out);
        for (std::size_t j = 0; j < bins; ++j) {
          const double power = out[j][0] * out[j][0] + out[j][1] * out[j][1];
          const bool edge = j == 0 || (L % 2 == 0 && j == L / 2);
          acc[j] += (edge ? 1.0 : 2.0) * power * h / plan.window_power;
        }
      }
      double ss = 0.0;
      for (std::size_t k = 0; k < ens.n_times(); ++k) {
        const double d = ens.at(p, k) - center[k];
        ss += d * d;
      }
      per_path_var[i] = ss / static_cast<double>(ens.n_times());
    }
    fftw_free(in);
    fftw_free(out);
  }
  fftw_destroy_plan(fwd);
  fftw_free(plan_in);
  fftw_free(plan_out);

  SpectrumEstimate est;
  est.segment_length = L;
  est.overlap = overlap;
  est.segments = plan.per_path * paths.size();
  est.freq.resize(bins);
  est.psd.resize(bins);
  std::vector<double> column(paths.size());
  for (std::size_t j = 0; j < bins; ++j) {
    est.freq[j] = static_cast<double>(j) / (static_cast<double>(L) * h);
    for (std::size_t i = 0; i < paths.size(); ++i) column[i] = per_path[i * bins + j];
    est.psd[j] = pairwise_sum(column) / static_cast<double>(est.segments);
  }
  est.variance = pairwise_sum(per_path_var) / static_cast<double>(paths.size());
  return est;
}

LorentzianFit fit_lorentzian_corner(const SpectrumEstimate& spectrum, double omega_max) {
  // Weighted by S^2 so that the relative (not absolute) scatter of 1/S is balanced.
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 1; j < spectrum.freq.size(); ++j) {
    const double omega = 2.0 * M_PI * spectrum.freq[j];
    if (omega > omega_max) break;
    const double s = spectrum.psd[j];
    if (!(s > 0.0)) continue;
    const double w = s * s, x = omega * omega, y = 1.0 / s;
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
    ++used;
  }
  if (used < 3) throw Error(ErrorKind::invalid_argument, "too few spectral bins below omega_max");
  const double b = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
  const double a = (sy - b * sx) / sw;
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::invalid_argument, "spectrum is not Lorentzian-shaped");
  return {std::sqrt(a / b), 1.0 / a};
}

std::vector<double> psd_from_autocorrelation(const Autocorrelation& corr, std::span<const double> freq) {
  if (corr.tau.size() < 2) throw Error(ErrorKind::invalid_argument, "autocorrelation has too few lags");
  const double h = corr.tau[1] - corr.tau[0];
  std::vector<double> out;
  out.reserve(freq.size());
  for (double f : freq) {
    double s = corr.c[0];
    for (std::size_t j = 1; j < corr.c.size(); ++j) s += 2.0 * corr.c[j] * std::cos(2.0 * M_PI * f * corr.tau[j]);
    out.push_back(2.0 * h * s);
  }
  return out;
}

bool Region::contains(double x) const {
  switch (kind) {
    case Kind::interval: return x >= lo && x <= hi;
    case Kind::above: return x >= lo;
    case Kind::below: return x <= hi;
  }
  return false;
}

std::string to_string(PassageStatus status) {
  switch (status) {
    case PassageStatus::qualified: return "qualified";
    case PassageStatus::censored: return "censored";
    case PassageStatus::never: return "never";
    case PassageStatus::ineligible: return "ineligible";
  }
  return "never";
}

double PassageReport::censored_fraction() const {
  const std::size_t eligible = n_qualified + n_censored + n_never;
  return eligible == 0 ? 0.0 : static_cast<double>(n_censored) / static_cast<double>(eligible);
}

std::vector<double> PassageReport::qualified_times() const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.status == PassageStatus::qualified) out.push_back(r.time);
  }
  return out;
}

namespace {

// Fraction of the segment a -> b at which the linear interpolant first lies in region,
// or a negative value if it never does. a is assumed outside the region.
double entry_fraction(const Region& r, double a, double b) {
  const double lo = r.kind == Region::Kind::below ? -INFINITY : r.lo;
  const double hi = r.kind == Region::Kind::above ? INFINITY : r.hi;
  if (a < lo) return b >= lo ? (lo - a) / (b - a) : -1.0;
  if (a > hi) return b <= hi ? (a - hi) / (a - b) : -1.0;
  return 0.0;
}

// Fraction at which a -> b first leaves region; a is assumed inside.
double exit_fraction(const Region& r, double a, double b) {
  if (r.contains(b)) return -1.0;
  const double lo = r.kind == Region::Kind::below ? -INFINITY : r.lo;
  if (b < lo) return (a - lo) / (a - b);
  return (r.hi - a) / (b - a);
}

}  // namespace

PassageReport first_passage_times(const TrajectoryEnsemble& ens, const Region& region, PassageSense sense,
                                  std::size_t histogram_bins) {
  if (ens.n_times() < 2) throw Error(ErrorKind::horizon, "ensemble needs at least two recorded times");
  if (region.kind == Region::Kind::interval && !(region.hi >= region.lo)) {
    throw Error(ErrorKind::inverted_bounds, "region upper edge below lower edge");
  }
  const double t0 = ens.times.front();
  PassageReport report;
  report.records.resize(ens.n_paths);

  parallel_for(ens.n_paths, [&](std::size_t p) {
    PassageRecord rec{p, 0.0, PassageStatus::never};
    // Valid recorded index range [first, last].
    std::size_t first = 0, last = ens.n_times() - 1;
    const bool absorbed = ens.absorbed_at[p] >= 0;
    if (absorbed) {
      const auto a = static_cast<std::size_t>(ens.absorbed_at[p]);
      if (ens.direction == Direction::forward) {
        last = a == 0 ? 0 : a - 1;
      } else {
        first = std::min(a + 1, ens.n_times() - 1);
      }
    }
    const double x_start = ens.at(p, first);

    Region target = region;
    bool leaving = sense == PassageSense::exit;
    if (sense == PassageSense::traverse && region.kind == Region::Kind::interval) {
      if (x_start < region.lo) {
        target = Region::above(region.hi);
      } else if (x_start > region.hi) {
        target = Region::below(region.lo);
      } else {
        rec.status = PassageStatus::ineligible;
        report.records[p] = rec;
        return;
      }
    } else if (sense == PassageSense::traverse && region.contains(x_start)) {
      // Threshold regions: the far side is the complement of the side the path starts on.
      target = region.kind == Region::Kind::above ? Region::below(region.lo) : Region::above(region.hi);
    }

    std::size_t from = first;
    if (target.contains(x_start) != leaving) {
      if (!leaving) {
        rec.status = PassageStatus::qualified;
        rec.time = ens.times[first] - t0;
        report.records[p] = rec;
        return;
      }
      // exit from outside: the clock still runs from the start, but only an exit after
      // the first entry counts.
      while (from < last && entry_fraction(target, ens.at(p, from), ens.at(p, from + 1)) < 0.0) ++from;
      if (from == last) {
        rec.status = absorbed ? PassageStatus::censored : PassageStatus::never;
        report.records[p] = rec;
        return;
      }
      const double a = ens.at(p, from), b = ens.at(p, from + 1);
      if (!target.contains(b)) {
        // Stepped clean over the region: leave through the far edge within the same step.
        const double frac = a < target.lo ? (target.hi - a) / (b - a) : (a - target.lo) / (a - b);
        rec.status = PassageStatus::qualified;
        rec.time = ens.times[from] + frac * (ens.times[from + 1] - ens.times[from]) - t0;
        report.records[p] = rec;
        return;
      }
      ++from;
    }
    for (std::size_t k = from; k < last; ++k) {
      const double a = ens.at(p, k), b = ens.at(p, k + 1);
      const double frac = leaving ? exit_fraction(target, a, b) : entry_fraction(target, a, b);
      if (frac >= 0.0) {
        rec.status = PassageStatus::qualified;
        rec.time = ens.times[k] + frac * (ens.times[k + 1] - ens.times[k]) - t0;
        report.records[p] = rec;
        return;
      }
    }
    rec.status = absorbed ? PassageStatus::censored : PassageStatus::never;
    report.records[p] = rec;
  });

  std::vector<double> times;
  for (const auto& r : report.records) {
    switch (r.status) {
      case PassageStatus::qualified:
        ++report.n_qualified;
        times.push_back(r.time);
        break;
      case PassageStatus::censored: ++report.n_censored; break;
      case PassageStatus::never: ++report.n_never; break;
      case PassageStatus::ineligible: ++report.n_ineligible; break;
    }
  }
  if (!times.empty()) {
    report.mean = pairwise_sum(times) / static_cast<double>(times.size());
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    report.median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    const double top = sorted.back() > 0.0 ? sorted.back() : 1.0;
    report.histogram = histogram(times, uniform_edges(0.0, top, std::max<std::size_t>(histogram_bins, 1)));
  }
  return report;
}

}  // namespace qam
