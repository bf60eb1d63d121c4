#include "qam/potential.hpp"

#include <cmath>

namespace qam {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

Potential::Potential(Variant shape) : shape_(shape) {}

double Potential::value(double x) const {
  return std::visit(
      overloaded{
          [x](const Harmonic& h) { return 0.5 * h.mass * h.omega * h.omega * x * x; },
          [x](const DoubleWell& d) { return d.a * x * x * x * x - d.b * x * x; },
          [x](const Barrier& b) {
            const double c = std::cosh((x - b.center) / b.width);
            return b.height / (c * c);
          },
          [](const Free&) { return 0.0; },
      },
      shape_);
}

double Potential::force(double x) const {
  return std::visit(
      overloaded{
          [x](const Harmonic& h) { return -h.mass * h.omega * h.omega * x; },
          [x](const DoubleWell& d) { return -4.0 * d.a * x * x * x + 2.0 * d.b * x; },
          [x](const Barrier& b) {
            // d/dx sech^2(z) = -2 sech^2(z) tanh(z) / w
            const double z = (x - b.center) / b.width;
            const double c = std::cosh(z);
            return 2.0 * b.height * std::tanh(z) / (c * c * b.width);
          },
          [](const Free&) { return 0.0; },
      },
      shape_);
}

std::string Potential::name() const {
  return std::visit(overloaded{
                        [](const Harmonic&) { return std::string("harmonic"); },
                        [](const DoubleWell&) { return std::string("double_well"); },
                        [](const Barrier&) { return std::string("barrier"); },
                        [](const Free&) { return std::string("free"); },
                    },
                    shape_);
}

}  // namespace qam
