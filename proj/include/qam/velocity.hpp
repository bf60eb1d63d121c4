#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>

#include "qam/coherent.hpp"
#include "qam/madelung.hpp"

namespace qam {

struct VelocityPair {
  double v = 0.0;  // drift (current) velocity
  double u = 0.0;  // osmotic velocity
};

/// Bilinear (linear in x, linear in t) interpolation of the stored drift and osmotic
/// fields. x is clamped to the grid; t outside the stored range throws field_coverage.
/// A single stored slice is treated as time independent.
VelocityPair interpolate_velocity(const MadelungFields& fields, double x, double t);

/// Source of (v, u) for the trajectory samplers. Implementations are immutable and
/// safe to share across worker threads.
class VelocityField {
 public:
  virtual ~VelocityField() = default;

  virtual VelocityPair at(double x, double t) const = 0;

  virtual double x_min() const = 0;
  virtual double x_max() const = 0;
  virtual double t_min() const { return -std::numeric_limits<double>::infinity(); }
  virtual double t_max() const { return std::numeric_limits<double>::infinity(); }
  virtual bool stationary() const { return false; }
  /// Time step of the PDE that produced the field, if any.
  virtual std::optional<double> pde_time_step() const { return std::nullopt; }
};

class GridVelocityField final : public VelocityField {
 public:
  explicit GridVelocityField(std::shared_ptr<const MadelungFields> fields);

  VelocityPair at(double x, double t) const override { return interpolate_velocity(*fields_, x, t); }
  double x_min() const override { return fields_->grid.x_min; }
  double x_max() const override { return fields_->grid.x_max; }
  double t_min() const override;
  double t_max() const override;
  bool stationary() const override { return fields_->n_times() == 1; }
  // A single slice is never interpolated in time, so it imposes no step bound.
  std::optional<double> pde_time_step() const override {
    return stationary() ? std::nullopt : std::optional<double>(fields_->grid.dt_pde);
  }

  const MadelungFields& fields() const { return *fields_; }

 private:
  std::shared_ptr<const MadelungFields> fields_;
};

/// Closed-form coherent-state fields, v = p_cl(t)/m, u = -omega (x - x_cl(t)).
class CoherentVelocityField final : public VelocityField {
 public:
  CoherentVelocityField(const CoherentStateSpec& spec, double x_min, double x_max);

  VelocityPair at(double x, double t) const override;
  double x_min() const override { return x_min_; }
  double x_max() const override { return x_max_; }
  bool stationary() const override { return spec_.n_mean == 0.0; }

 private:
  CoherentStateSpec spec_;
  double x_min_;
  double x_max_;
};

class FunctionVelocityField final : public VelocityField {
 public:
  using Fn = std::function<VelocityPair(double, double)>;

  FunctionVelocityField(Fn fn, double x_min, double x_max, bool stationary)
      : fn_(std::move(fn)), x_min_(x_min), x_max_(x_max), stationary_(stationary) {}

  VelocityPair at(double x, double t) const override { return fn_(x, t); }
  double x_min() const override { return x_min_; }
  double x_max() const override { return x_max_; }
  bool stationary() const override { return stationary_; }

 private:
  Fn fn_;
  double x_min_;
  double x_max_;
  bool stationary_;
};

enum class PerturbationTarget { drift, osmotic };

struct Perturbation {
  PerturbationTarget target = PerturbationTarget::drift;
  std::function<double(double)> shape;
  double amplitude = 0.0;
};

/// Base field with amplitude * shape(x) added to v or u.
class PerturbedVelocityField final : public VelocityField {
 public:
  PerturbedVelocityField(const VelocityField& base, Perturbation perturbation)
      : base_(base), perturbation_(std::move(perturbation)) {}

  VelocityPair at(double x, double t) const override;
  double x_min() const override { return base_.x_min(); }
  double x_max() const override { return base_.x_max(); }
  double t_min() const override { return base_.t_min(); }
  double t_max() const override { return base_.t_max(); }
  bool stationary() const override { return base_.stationary(); }
  std::optional<double> pde_time_step() const override { return base_.pde_time_step(); }

 private:
  const VelocityField& base_;
  Perturbation perturbation_;
};

}  // namespace qam
