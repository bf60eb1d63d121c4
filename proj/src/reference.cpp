// Serial, direct-formula counterparts of the parallel analysis kernels. They exist to
// check the kernels and are not used on the production path.

#include <cmath>
#include <complex>

#include "analysis_internal.hpp"
#include "qam/analysis.hpp"

namespace qam::reference {

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
  std::vector<double> per_path(paths.size() * (lags + 1));
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = 0; j <= lags; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k + j < n; ++k) {
        s += (ens.at(paths[i], k) - center[k]) * (ens.at(paths[i], k + j) - center[k + j]);
      }
      per_path[i * (lags + 1) + j] = s / static_cast<double>(n - j);
    }
  }
  return detail::assemble(per_path, paths.size(), lags, h);
}

SpectrumEstimate power_spectral_density(const TrajectoryEnsemble& ens, std::size_t segment_length, std::size_t overlap) {
  const std::vector<std::size_t> paths = detail::complete_paths(ens);
  if (paths.empty()) throw Error(ErrorKind::invalid_argument, "no complete paths");
  const detail::WelchPlan plan = detail::welch_plan(ens, segment_length, overlap, paths.size());
  const double h = detail::recording_interval(ens);
  const std::vector<double> center = detail::centering_profile(ens, paths, Centering::global);
  const std::size_t L = plan.length;
  const std::size_t bins = L / 2 + 1;

  SpectrumEstimate est;
  est.segment_length = L;
  est.overlap = overlap;
  est.segments = plan.per_path * paths.size();
  est.freq.resize(bins);
  est.psd.assign(bins, 0.0);
  std::vector<double> seg(L);
  double var = 0.0;
  for (std::size_t p : paths) {
    for (std::size_t s = 0; s < plan.per_path; ++s) {
      const std::size_t start = s * plan.step;
      for (std::size_t k = 0; k < L; ++k) seg[k] = plan.window[k] * (ens.at(p, start + k) - center[start + k]);
      for (std::size_t j = 0; j < bins; ++j) {
        std::complex<double> acc{};
        for (std::size_t k = 0; k < L; ++k) {
          acc += seg[k] * std::polar(1.0, -2.0 * M_PI * static_cast<double>(j * k) / static_cast<double>(L));
        }
        const bool edge = j == 0 || (L % 2 == 0 && j == L / 2);
        est.psd[j] += (edge ? 1.0 : 2.0) * std::norm(acc) * h / plan.window_power;
      }
    }
    double ss = 0.0;
    for (std::size_t k = 0; k < ens.n_times(); ++k) ss += (ens.at(p, k) - center[k]) * (ens.at(p, k) - center[k]);
    var += ss / static_cast<double>(ens.n_times());
  }
  for (std::size_t j = 0; j < bins; ++j) {
    est.freq[j] = static_cast<double>(j) / (static_cast<double>(L) * h);
    est.psd[j] /= static_cast<double>(est.segments);
  }
  est.variance = var / static_cast<double>(paths.size());
  return est;
}

}  // namespace qam::reference
