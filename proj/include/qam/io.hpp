#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qam/analysis.hpp"
#include "qam/kinematics.hpp"
#include "qam/madelung.hpp"
#include "qam/stationary.hpp"
#include "qam/variational.hpp"

namespace qam::io {

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// CSV renderers. Every file starts with a header row.
std::string fields_csv(const MadelungFields& fields, std::size_t point_stride = 1);
std::string ensemble_csv(const TrajectoryEnsemble& ensemble, std::size_t max_paths);
std::string density_csv(const Histogram& histogram);
std::string autocorrelation_csv(const Autocorrelation& corr);
std::string psd_csv(const SpectrumEstimate& spectrum);
std::string fpt_csv(const PassageReport& report);
std::string energy_csv(const EnergySeries& series);
std::string stationary_csv(const StationarySolution& solution);
std::string stationary_json(const StationarySolution& solution);

struct ActionRow {
  std::string functional;
  Estimate estimate;
  std::size_t n_paths = 0;
  double dt_sde = 0.0;
  std::string scenario;
};
std::string action_csv(const std::vector<ActionRow>& rows);

/// Binary ensemble table: "QAMTRAJ1", u64 n_paths, n_times, seed, flags, f64 dt_sde, then
/// f64 times[n_times], f64 positions[n_paths * n_times], i64 absorbed_at[n_paths].
/// All little-endian. flags: bit 0 backward, bit 1 stationary.
std::string ensemble_binary(const TrajectoryEnsemble& ensemble);
TrajectoryEnsemble read_ensemble_binary(std::string_view bytes);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static SVG line plot with axes and one polyline per series.
std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace qam::io
