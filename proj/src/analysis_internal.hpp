#pragma once

// Helpers shared by the parallel analysis kernels and their serial references.

#include <cmath>
#include <cstddef>
#include <vector>

#include "qam/analysis.hpp"
#include "qam/error.hpp"
#include "qam/stats.hpp"

namespace qam::detail {

inline std::vector<std::size_t> complete_paths(const TrajectoryEnsemble& ens) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    bool ok = true;
    for (std::size_t k = 0; ok && k < ens.n_times(); ++k) ok = ens.valid(p, k);
    if (ok) out.push_back(p);
  }
  return out;
}

/// Value subtracted at each recorded time.
inline std::vector<double> centering_profile(const TrajectoryEnsemble& ens, const std::vector<std::size_t>& paths,
                                             Centering centering) {
  const std::size_t n = ens.n_times();
  std::vector<double> per_time(n, 0.0);
  std::vector<double> column(paths.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < paths.size(); ++i) column[i] = ens.at(paths[i], k);
    per_time[k] = pairwise_sum(column) / static_cast<double>(paths.size());
  }
  if (centering == Centering::per_time) return per_time;
  const double global = pairwise_sum(per_time) / static_cast<double>(n);
  return std::vector<double>(n, global);
}

inline double recording_interval(const TrajectoryEnsemble& ens) {
  if (ens.n_times() < 2) throw Error(ErrorKind::horizon, "ensemble needs at least two recorded times");
  return ens.times[1] - ens.times[0];
}

inline std::size_t lag_count(const TrajectoryEnsemble& ens, double max_lag) {
  const double h = recording_interval(ens);
  const auto lags = static_cast<std::size_t>(std::llround(max_lag / h));
  if (!(max_lag >= 0.0) || lags + 1 >= ens.n_times()) {
    throw Error(ErrorKind::horizon, "max_lag must be shorter than the recorded horizon");
  }
  return lags;
}

inline Autocorrelation assemble(const std::vector<double>& per_path, std::size_t n_paths, std::size_t lags,
                                double h) {
  Autocorrelation out;
  out.n_paths = n_paths;
  std::vector<double> column(n_paths);
  for (std::size_t j = 0; j <= lags; ++j) {
    for (std::size_t i = 0; i < n_paths; ++i) column[i] = per_path[i * (lags + 1) + j];
    const Estimate e = mean_estimate(column);
    out.tau.push_back(h * static_cast<double>(j));
    out.c.push_back(e.value);
    out.std_error.push_back(e.std_error);
  }
  return out;
}

inline TwoPointFunction two_point_function(const TrajectoryEnsemble& ens, const std::vector<std::size_t>& paths,
                                           std::size_t lags) {
  const std::size_t n = ens.n_times();
  const double h = recording_interval(ens);
  TwoPointFunction f;
  f.t = ens.times;
  for (std::size_t j = 0; j <= lags; ++j) f.tau.push_back(h * static_cast<double>(j));
  f.values.assign(n * (lags + 1), std::nan(""));
  std::vector<double> prod(paths.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j <= lags && k + j < n; ++j) {
      for (std::size_t i = 0; i < paths.size(); ++i) prod[i] = ens.at(paths[i], k) * ens.at(paths[i], k + j);
      f.values[k * (lags + 1) + j] = pairwise_sum(prod) / static_cast<double>(paths.size());
    }
  }
  return f;
}

struct WelchPlan {
  std::size_t length;
  std::size_t step;
  std::size_t per_path;
  std::vector<double> window;
  double window_power;  // sum of w^2
};

inline WelchPlan welch_plan(const TrajectoryEnsemble& ens, std::size_t length, std::size_t overlap,
                            std::size_t n_paths) {
  const std::size_t n = ens.n_times();
  if (length < 8 || length > n || overlap >= length) {
    throw Error(ErrorKind::degenerate_segmentation, "need 8 <= segment_length <= n_times and overlap < segment_length");
  }
  WelchPlan plan;
  plan.length = length;
  plan.step = length - overlap;
  plan.per_path = (n - length) / plan.step + 1;
  if (plan.per_path * n_paths < 8) throw Error(ErrorKind::degenerate_segmentation, "fewer than 8 segments in total");
  plan.window.resize(length);
  plan.window_power = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    plan.window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(length - 1)));
    plan.window_power += plan.window[i] * plan.window[i];
  }
  return plan;
}

}  // namespace qam::detail
