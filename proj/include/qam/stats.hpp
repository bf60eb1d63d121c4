#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qam {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Pairwise (cascade) summation; result depends only on the order of the input.
double pairwise_sum(std::span<const double> values);

/// Sample mean with standard error sqrt(var / n).
Estimate mean_estimate(std::span<const double> values);

/// Delete-one-block jackknife for the mean of per-path values.
Estimate jackknife_mean(std::span<const double> values, std::size_t n_blocks = 32);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_std_error = 0.0;
};

/// Ordinary least squares y = a + b x with the textbook slope standard error.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace qam
