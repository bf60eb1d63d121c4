#include "qam/grid.hpp"

#include <string>

#include "qam/error.hpp"

namespace qam {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::inverted_bounds: return "inverted bounds";
    case ErrorKind::grid_truncation: return "grid truncation";
    case ErrorKind::boundary_leakage: return "boundary leakage";
    case ErrorKind::stability_guard: return "stability guard";
    case ErrorKind::insufficient_time_slices: return "insufficient time slices";
    case ErrorKind::field_coverage: return "field coverage";
    case ErrorKind::not_normalized: return "not normalized";
    case ErrorKind::horizon: return "outside horizon";
    case ErrorKind::too_few_samples: return "too few samples";
    case ErrorKind::no_bracket: return "no bracket";
    case ErrorKind::node_encountered: return "node encountered";
    case ErrorKind::degenerate_segmentation: return "degenerate segmentation";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
  }
  return "error";
}

std::vector<double> GridSpec::nodes() const {
  std::vector<double> xs(n_points);
  for (std::size_t i = 0; i < n_points; ++i) xs[i] = x(i);
  return xs;
}

GridSpec build_grid(double x_min, double x_max, std::size_t n_points, double dt_pde) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw Error(ErrorKind::invalid_argument, "grid bounds must be finite");
  }
  if (!(x_max > x_min)) {
    throw Error(ErrorKind::inverted_bounds, "x_max must exceed x_min");
  }
  if (n_points < 16) {
    throw Error(ErrorKind::invalid_argument,
                "n_points must be >= 16, got " + std::to_string(n_points));
  }
  if (!(dt_pde > 0.0) || !std::isfinite(dt_pde)) {
    throw Error(ErrorKind::invalid_argument, "dt_pde must be positive");
  }
  GridSpec grid;
  grid.x_min = x_min;
  grid.x_max = x_max;
  grid.n_points = n_points;
  grid.dx = (x_max - x_min) / static_cast<double>(n_points - 1);
  grid.dt_pde = dt_pde;
  return grid;
}

void validate(const PhysicalParams& params) {
  if (!(params.mass > 0.0) || !std::isfinite(params.mass)) {
    throw Error(ErrorKind::invalid_argument, "mass must be > 0");
  }
  if (!(params.hbar > 0.0) || !std::isfinite(params.hbar)) {
    throw Error(ErrorKind::invalid_argument, "hbar must be > 0");
  }
}

double trapezoid(const GridSpec& grid, std::span<const double> values) {
  if (values.size() != grid.n_points) {
    throw Error(ErrorKind::invalid_argument, "value count does not match grid");
  }
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  return sum * grid.dx;
}

std::vector<double> cumulative_trapezoid(const GridSpec& grid, std::span<const double> values) {
  if (values.size() != grid.n_points) {
    throw Error(ErrorKind::invalid_argument, "value count does not match grid");
  }
  std::vector<double> out(values.size(), 0.0);
  for (std::size_t i = 1; i < values.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * grid.dx * (values[i - 1] + values[i]);
  }
  return out;
}

}  // namespace qam
