#pragma once

#include <stdexcept>
#include <string>

namespace qam {

enum class ErrorKind {
  invalid_argument,
  inverted_bounds,
  grid_truncation,
  boundary_leakage,
  stability_guard,
  insufficient_time_slices,
  field_coverage,
  not_normalized,
  horizon,
  too_few_samples,
  no_bracket,
  node_encountered,
  degenerate_segmentation,
  io,
  config,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace qam
