#include "qam/stats.hpp"

#include <cmath>

#include "qam/error.hpp"

namespace qam {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 64;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Estimate mean_estimate(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return {};
  const double mean = pairwise_sum(values) / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

Estimate jackknife_mean(std::span<const double> values, std::size_t n_blocks) {
  const std::size_t n = values.size();
  if (n == 0) return {};
  if (n_blocks > n) n_blocks = n;
  if (n_blocks < 2) return {pairwise_sum(values) / static_cast<double>(n), 0.0};

  const double total = pairwise_sum(values);
  std::vector<double> block_sum(n_blocks);
  std::vector<std::size_t> block_count(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t lo = b * n / n_blocks;
    const std::size_t hi = (b + 1) * n / n_blocks;
    block_sum[b] = pairwise_sum(values.subspan(lo, hi - lo));
    block_count[b] = hi - lo;
  }
  std::vector<double> loo(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    loo[b] = (total - block_sum[b]) / static_cast<double>(n - block_count[b]);
  }
  const double loo_mean = pairwise_sum(loo) / static_cast<double>(n_blocks);
  double ss = 0.0;
  for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
  const double g = static_cast<double>(n_blocks);
  return {total / static_cast<double>(n), std::sqrt((g - 1.0) / g * ss)};
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3) throw Error(ErrorKind::invalid_argument, "linear fit needs >= 3 matched points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.slope_std_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  return fit;
}

}  // namespace qam
