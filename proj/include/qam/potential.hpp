#pragma once

#include <string>
#include <variant>

namespace qam {

struct Harmonic {
  double omega = 1.0;
  double mass = 1.0;
};

// V = a x^4 - b x^2. b = 0 gives the pure quartic, b > 0 a symmetric double well.
struct DoubleWell {
  double a = 0.25;
  double b = 0.0;
};

// Eckart-like barrier V0 / cosh^2((x - center) / width).
struct Barrier {
  double height = 1.0;
  double width = 1.0;
  double center = 0.0;
};

struct Free {};

class Potential {
 public:
  using Variant = std::variant<Harmonic, DoubleWell, Barrier, Free>;

  Potential() : shape_(Free{}) {}
  Potential(Variant shape);  // NOLINT(google-explicit-constructor)

  static Potential harmonic(double omega, double mass) { return Potential(Harmonic{omega, mass}); }
  static Potential double_well(double a, double b) { return Potential(DoubleWell{a, b}); }
  static Potential barrier(double height, double width, double center) {
    return Potential(Barrier{height, width, center});
  }
  static Potential free() { return Potential(Free{}); }

  double value(double x) const;
  /// Analytic F = -dV/dx.
  double force(double x) const;

  const Variant& shape() const { return shape_; }
  std::string name() const;

 private:
  Variant shape_;
};

}  // namespace qam
