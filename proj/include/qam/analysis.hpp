#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qam/grid.hpp"
#include "qam/kinematics.hpp"

namespace qam {

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<double> density;  // counts / (n_inside * width); sums to one over the bins
  std::size_t n_inside = 0;
  std::size_t n_outside = 0;

  std::vector<double> centers() const;
};

Histogram histogram(std::span<const double> samples, std::span<const double> edges);

/// Density histogram of the still-valid paths at recorded time t.
Histogram empirical_density(const TrajectoryEnsemble& ensemble, double t, std::span<const double> edges);

/// Piecewise-linear interpolant of the normalized cumulative trapezoid integral of rho.
class GridCdf {
 public:
  GridCdf(const GridSpec& grid, std::span<const double> rho);
  double operator()(double x) const;

 private:
  GridSpec grid_;
  std::vector<double> cdf_;
};

double gaussian_cdf(double x, double mean, double variance);

using Cdf = std::function<double(double)>;

/// sup |F_n - F| for >= 100 samples.
double ks_distance(std::vector<double> samples, const Cdf& reference);
/// sup over bin edges of |cumulative histogram - F|.
double ks_distance(const Histogram& hist, const Cdf& reference);
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Asymptotic one-sample critical value c(alpha) / sqrt(n).
double ks_critical_value(std::size_t n, double alpha);

enum class Centering {
  global,    // subtract the mean over all paths and times
  per_time,  // subtract the cross-sectional mean at each time (mean-removed paths)
};

struct TwoPointFunction {
  std::vector<double> t;
  std::vector<double> tau;
  std::vector<double> values;  // E[x(t) x(t + tau)], row-major t x tau
};

struct Autocorrelation {
  std::vector<double> tau;
  std::vector<double> c;
  std::vector<double> std_error;
  std::size_t n_paths = 0;
  bool time_resolved = false;  // set when the ensemble is not stationary
  TwoPointFunction two_point;
};

/// Stationary C(tau) averaged over paths and time origins (FFT per path). For
/// non-stationary ensembles with global centering the time-resolved two-point
/// function is returned instead.
Autocorrelation autocorrelation(const TrajectoryEnsemble& ensemble, double max_lag, Centering centering);

struct SpectrumEstimate {
  std::vector<double> freq;  // cycles per unit time
  std::vector<double> psd;   // one-sided
  std::size_t segments = 0;
  std::size_t segment_length = 0;
  std::size_t overlap = 0;
  std::string window = "hann";
  double variance = 0.0;     // sample variance of the analysed signal

  double integrated() const;  // sum psd * df
};

/// Welch estimate: Hann window, mean removed, averaged over all segments of all paths.
SpectrumEstimate power_spectral_density(const TrajectoryEnsemble& ensemble, std::size_t segment_length,
                                        std::size_t overlap);

struct LorentzianFit {
  double corner_omega = 0.0;  // angular corner frequency
  double amplitude = 0.0;     // psd at zero frequency
};

/// Weighted least squares of 1/S = a + b Omega^2 over 0 < Omega <= omega_max.
LorentzianFit fit_lorentzian_corner(const SpectrumEstimate& spectrum, double omega_max);

/// One-sided spectrum from the autocorrelation by direct cosine transform.
std::vector<double> psd_from_autocorrelation(const Autocorrelation& corr, std::span<const double> freq);

struct Region {
  enum class Kind { interval, above, below };
  Kind kind = Kind::interval;
  double lo = 0.0;
  double hi = 0.0;

  static Region interval(double a, double b) { return {Kind::interval, a, b}; }
  static Region above(double c) { return {Kind::above, c, 0.0}; }
  static Region below(double c) { return {Kind::below, 0.0, c}; }
  bool contains(double x) const;
};

enum class PassageSense { enter, exit, traverse };
enum class PassageStatus { qualified, censored, never, ineligible };

std::string to_string(PassageStatus status);

struct PassageRecord {
  std::size_t path = 0;
  double time = 0.0;  // since the first recorded time; meaningful when qualified
  PassageStatus status = PassageStatus::never;
};

struct PassageReport {
  std::vector<PassageRecord> records;
  std::size_t n_qualified = 0;
  std::size_t n_censored = 0;
  std::size_t n_never = 0;
  std::size_t n_ineligible = 0;
  double mean = 0.0;
  double median = 0.0;
  Histogram histogram;

  bool empty() const { return n_qualified == 0; }  // no path ever qualified
  double censored_fraction() const;
  std::vector<double> qualified_times() const;
};

/// First time each path meets the criterion, with crossing times linearly interpolated
/// between recorded samples. traverse on an interval means: start on one side, first
/// entry into the far side; paths starting inside are ineligible. exit from a path that
/// starts outside means the first exit after its first entry. Paths absorbed before
/// qualifying are censored.
PassageReport first_passage_times(const TrajectoryEnsemble& ensemble, const Region& region, PassageSense sense,
                                  std::size_t histogram_bins = 40);

namespace reference {

/// Direct O(n * lags) autocorrelation with the same contract as the FFT kernel.
Autocorrelation autocorrelation(const TrajectoryEnsemble& ensemble, double max_lag, Centering centering);

/// Welch estimate with a direct DFT per segment.
SpectrumEstimate power_spectral_density(const TrajectoryEnsemble& ensemble, std::size_t segment_length,
                                        std::size_t overlap);

}  // namespace reference

}  // namespace qam
