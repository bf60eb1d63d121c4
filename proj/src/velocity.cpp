#include "qam/velocity.hpp"

#include <algorithm>
#include <cmath>

#include "qam/error.hpp"

namespace qam {

VelocityPair interpolate_velocity(const MadelungFields& fields, double x, double t) {
  const GridSpec& g = fields.grid;
  const std::size_t n = g.n_points;

  const double xc = std::clamp(x, g.x_min, g.x_max);
  const double s = (xc - g.x_min) / g.dx;
  std::size_t i = static_cast<std::size_t>(s);
  if (i >= n - 1) i = n - 2;
  const double wx = s - static_cast<double>(i);

  auto at_slice = [&](std::size_t k) {
    const std::size_t a = fields.index(k, i);
    return VelocityPair{fields.drift[a] + wx * (fields.drift[a + 1] - fields.drift[a]),
                        fields.osmotic[a] + wx * (fields.osmotic[a + 1] - fields.osmotic[a])};
  };

  const auto& ts = fields.times;
  if (ts.size() == 1) return at_slice(0);
  if (!(t >= ts.front() && t <= ts.back())) {
    throw Error(ErrorKind::field_coverage, "time " + std::to_string(t) + " outside stored field range");
  }
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t k = it == ts.end() ? ts.size() - 2 : static_cast<std::size_t>(it - ts.begin()) - 1;
  const double wt = (t - ts[k]) / (ts[k + 1] - ts[k]);
  const VelocityPair a = at_slice(k);
  const VelocityPair b = at_slice(k + 1);
  return {a.v + wt * (b.v - a.v), a.u + wt * (b.u - a.u)};
}

GridVelocityField::GridVelocityField(std::shared_ptr<const MadelungFields> fields) : fields_(std::move(fields)) {
  if (!fields_ || fields_->n_times() == 0) {
    throw Error(ErrorKind::invalid_argument, "velocity field needs at least one time slice");
  }
}

double GridVelocityField::t_min() const {
  return stationary() ? -std::numeric_limits<double>::infinity() : fields_->times.front();
}

double GridVelocityField::t_max() const {
  return stationary() ? std::numeric_limits<double>::infinity() : fields_->times.back();
}

CoherentVelocityField::CoherentVelocityField(const CoherentStateSpec& spec, double x_min, double x_max)
    : spec_(spec), x_min_(x_min), x_max_(x_max) {
  validate(spec_);
  if (!(x_max > x_min)) throw Error(ErrorKind::inverted_bounds, "x_max must exceed x_min");
}

VelocityPair CoherentVelocityField::at(double x, double t) const {
  const CoherentVelocity c = coherent_velocity_fields(spec_, t);
  return {c.v(x), c.u(x)};
}

VelocityPair PerturbedVelocityField::at(double x, double t) const {
  VelocityPair p = base_.at(x, t);
  if (perturbation_.amplitude == 0.0 || !perturbation_.shape) return p;
  const double delta = perturbation_.amplitude * perturbation_.shape(x);
  if (perturbation_.target == PerturbationTarget::drift) {
    p.v += delta;
  } else {
    p.u += delta;
  }
  return p;
}

}  // namespace qam
