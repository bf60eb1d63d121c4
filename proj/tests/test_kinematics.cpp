#include <cmath>
#include <memory>
#include <numbers>

#include "doctest.h"

#include "qam/coherent.hpp"
#include "qam/error.hpp"
#include "qam/kinematics.hpp"
#include "qam/madelung.hpp"
#include "qam/parallel.hpp"
#include "qam/stats.hpp"
#include "qam/velocity.hpp"

using namespace qam;

namespace {

std::vector<double> ground_density(const GridSpec& g) {
  std::vector<double> rho(g.n_points);
  for (std::size_t i = 0; i < g.n_points; ++i) rho[i] = std::exp(-g.x(i) * g.x(i)) / std::sqrt(std::numbers::pi);
  return rho;
}

FunctionVelocityField ground_field(double lo = -8, double hi = 8) {
  return FunctionVelocityField([](double x, double) { return VelocityPair{0.0, -x}; }, lo, hi, true);
}

SdeConfig config(std::size_t n, double t_end, double dt, std::uint64_t seed = 11,
                 Direction d = Direction::forward) {
  SdeConfig c;
  c.n_paths = n;
  c.t_end = t_end;
  c.dt_sde = dt;
  c.seed = seed;
  c.direction = d;
  c.record_every = 1;
  return c;
}

double variance(const std::vector<double>& xs) {
  double m = 0, v = 0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  for (double x : xs) v += (x - m) * (x - m);
  return v / static_cast<double>(xs.size() - 1);
}

}  // namespace

TEST_CASE("initial positions follow the density") {
  const GridSpec g = build_grid(-8, 8, 1601, 1e-3);
  const auto xs = sample_initial_positions(g, ground_density(g), 100000, 5);
  const double se = std::sqrt(2.0) * 0.5 / std::sqrt(1e5);
  CHECK(std::abs(variance(xs) - 0.5) < 3 * se);
  CHECK(xs == sample_initial_positions(g, ground_density(g), 100000, 5));
  CHECK(xs != sample_initial_positions(g, ground_density(g), 100000, 6));

  std::vector<double> hot(g.n_points, 0.0);
  hot[700] = 1.0 / g.dx;
  for (double x : sample_initial_positions(g, hot, 1000, 1)) {
    CHECK(x >= g.x(699));
    CHECK(x <= g.x(701));
  }
  auto doubled = ground_density(g);
  for (double& r : doubled) r *= 2;
  CHECK_THROWS_AS(sample_initial_positions(g, doubled, 10, 1), Error);
}

TEST_CASE("bilinear interpolation of grid fields") {
  const GridSpec g = build_grid(-5, 5, 101, 0.1);
  MadelungFields f;
  f.grid = g;
  f.times = {0.0, 0.1, 0.2};
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < g.n_points; ++i) {
      f.drift.push_back(0.3 * g.x(i) + f.times[k]);
      f.osmotic.push_back(-g.x(i));
    }
  }
  for (double x : {-4.97, -1.234, 0.0, 0.05, 3.3333}) {
    for (double t : {0.0, 0.05, 0.137, 0.2}) {
      const auto vp = interpolate_velocity(f, x, t);
      CHECK(vp.u == doctest::Approx(-x).epsilon(1e-13));
      CHECK(vp.v == doctest::Approx(0.3 * x + t).epsilon(1e-13));
    }
  }
  CHECK(interpolate_velocity(f, g.x(37), 0.1).v == f.drift[f.index(1, 37)]);
  CHECK_THROWS_AS(interpolate_velocity(f, 0.0, 0.25), Error);
  try {
    interpolate_velocity(f, 0.0, -0.01);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::field_coverage);
  }
}

TEST_CASE("interpolated coherent fields converge under refinement") {
  const CoherentStateSpec n3{1.0, 3.0, {}};
  auto midpoint_error = [&](std::size_t n) {
    const GridSpec g = build_grid(-10, 10, n, 1e-3);
    const double t = 0.7;
    const WaveField w = single_slice(g, t, coherent_wavefunction(n3, t, g));
    const MadelungFields f = madelung_decompose(w, {}, recommended_density_floor(w));
    const auto exact = coherent_velocity_fields(n3, t);
    double worst = 0;
    for (std::size_t i = 0; i + 1 < g.n_points; ++i) {
      const double x = g.x(i) + 0.5 * g.dx;
      if (std::abs(x - exact.x_cl) > 3.0) continue;
      const auto vp = interpolate_velocity(f, x, t);
      worst = std::max({worst, std::abs(vp.v - exact.v(x)), std::abs(vp.u - exact.u(x))});
    }
    return worst;
  };
  // The coherent fields are affine in x, so only round-off remains.
  CHECK(midpoint_error(401) < 1e-10);
  CHECK(midpoint_error(801) < 1e-10);
}

TEST_CASE("interpolated curved fields converge at second order") {
  // psi ~ exp(-x^4 / 4 + i sin x): u = -x^3, v = cos x.
  auto midpoint_error = [](std::size_t n) {
    const GridSpec g = build_grid(-3, 3, n, 1e-3);
    std::vector<Complex> psi(g.n_points);
    for (std::size_t i = 0; i < g.n_points; ++i) psi[i] = std::polar(std::exp(-std::pow(g.x(i), 4) / 4), std::sin(g.x(i)));
    const MadelungFields f = madelung_decompose(single_slice(g, 0, psi), {}, 1e-30);
    double worst = 0;
    for (std::size_t i = 0; i + 1 < g.n_points; ++i) {
      const double x = g.x(i) + 0.5 * g.dx;
      if (std::abs(x) > 2.0) continue;
      const auto vp = interpolate_velocity(f, x, 0.0);
      worst = std::max({worst, std::abs(vp.v - std::cos(x)), std::abs(vp.u + x * x * x)});
    }
    return worst;
  };
  const double coarse = midpoint_error(121), fine = midpoint_error(241);
  CHECK(coarse < 0.05 * 0.05 * 10);
  CHECK(coarse / fine >= 3.5);
}

TEST_CASE("sampling is deterministic and independent of the worker count") {
  const GridSpec g = build_grid(-8, 8, 801, 1e-3);
  const auto field = ground_field();
  SdeConfig c = config(257, 1.0, 0.01);
  c.record_every = 5;
  set_threads(1);
  const TrajectoryEnsemble a = sample_forward(field, {}, c, g, ground_density(g));
  set_threads(4);
  const TrajectoryEnsemble b = sample_forward(field, {}, c, g, ground_density(g));
  const auto x0 = sample_initial_positions(g, ground_density(g), c.n_paths, c.seed);
  const TrajectoryEnsemble s = reference::sample_from_positions(field, {}, c, x0);
  set_threads(1);
  CHECK(a.positions == b.positions);
  CHECK(a.positions == s.positions);
  CHECK(a.times.size() == 21);
  CHECK(a.stream_ids[3] == 3);
  c.direction = Direction::backward;
  const TrajectoryEnsemble back = sample_backward(field, {}, c, g, ground_density(g));
  CHECK(back.stream_ids[3] == (3 | (std::uint64_t{1} << 63)));
  CHECK(back.positions != a.positions);
}

TEST_CASE("zero-noise limit follows the drift ODE both ways") {
  const PhysicalParams tiny{1.0, 1e-30};
  const auto field = ground_field();
  SdeConfig c = config(3, 2.0, 1e-3);
  const std::vector<double> x0 = {-1.0, 0.5, 2.0};
  const TrajectoryEnsemble e = sample_from_positions(field, tiny, c, x0);
  for (std::size_t p = 0; p < 3; ++p) {
    CHECK(e.at(p, e.n_times() - 1) == doctest::Approx(x0[p] * std::pow(1.0 - 1e-3, 2000)).epsilon(1e-12));
    CHECK(std::abs(e.at(p, e.n_times() - 1) - x0[p] * std::exp(-2.0)) < 1e-3);
  }

  const FunctionVelocityField ballistic([](double, double) { return VelocityPair{0.75, 0.0}; }, -10, 10, true);
  const TrajectoryEnsemble f = sample_from_positions(ballistic, tiny, c, x0);
  std::vector<double> ends;
  for (std::size_t p = 0; p < 3; ++p) ends.push_back(f.at(p, f.n_times() - 1));
  c.direction = Direction::backward;
  const TrajectoryEnsemble b = sample_from_positions(ballistic, tiny, c, ends);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t k = 0; k < f.n_times(); k += 100) CHECK(b.at(p, k) == doctest::Approx(f.at(p, k)).epsilon(1e-12));
  }
}

TEST_CASE("field coverage and step constraints") {
  auto fields = std::make_shared<MadelungFields>();
  fields->grid = build_grid(-5, 5, 101, 0.01);
  fields->times = {0.0, 0.01, 0.02};
  fields->drift.assign(303, 0.0);
  fields->osmotic.assign(303, 0.0);
  const GridVelocityField field(fields);
  const std::vector<double> x0(4, 0.0);
  SdeConfig c = config(4, 0.03, 0.005);
  try {
    sample_from_positions(field, {}, c, x0);
    FAIL("expected field coverage error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::field_coverage);
  }
  c = config(4, 0.02, 0.02);
  CHECK_THROWS_AS(sample_from_positions(field, {}, c, x0), Error);
  c.record_every = 3;
  c.dt_sde = 0.005;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("reflecting and absorbing walls") {
  const FunctionVelocityField push([](double, double) { return VelocityPair{5.0, 0.0}; }, -1, 1, true);
  SdeConfig c = config(200, 2.0, 1e-3);
  const std::vector<double> x0(200, 0.0);
  const TrajectoryEnsemble r = sample_from_positions(push, {}, c, x0);
  for (double x : r.positions) {
    CHECK(x >= -1.0);
    CHECK(x <= 1.0);
  }
  c.boundary = BoundaryPolicy::absorb;
  const TrajectoryEnsemble a = sample_from_positions(push, {}, c, x0);
  for (std::size_t p = 0; p < a.n_paths; ++p) {
    REQUIRE(a.absorbed_at[p] > 0);
    CHECK_FALSE(a.valid(p, a.n_times() - 1));
    CHECK(a.valid(p, static_cast<std::size_t>(a.absorbed_at[p]) - 1));
  }
  CHECK(a.marginal(a.n_times() - 1).empty());
}

TEST_CASE("mean derivatives of the harmonic ground state") {
  const GridSpec g = build_grid(-8, 8, 801, 1e-3);
  const auto field = ground_field();
  SdeConfig c = config(20000, 2.0, 1e-3, 21);
  c.record_every = 10;
  const TrajectoryEnsemble f = sample_forward(field, {}, c, g, ground_density(g));
  const auto edges = uniform_edges(-2, 2, 16);
  const BinnedEstimate df = mean_derivative(f, 1.0, 0.01, edges, Direction::forward);
  const BinnedEstimate db = mean_derivative(f, 1.0, 0.01, edges, Direction::backward);
  for (std::size_t b = 0; b < df.mean.size(); ++b) {
    if (df.flagged[b]) continue;
    CHECK(std::abs(df.mean[b] + df.x_mean[b]) < 4 * df.std_error[b]);
    CHECK(std::abs(db.mean[b] - db.x_mean[b]) < 4 * db.std_error[b]);
  }
  CHECK_THROWS_AS(mean_derivative(f, 2.0, 0.01, edges, Direction::forward), Error);
  CHECK_THROWS_AS(mean_derivative(f, 1.0, 0.0005, edges, Direction::forward), Error);
}

TEST_CASE("mean derivatives without noise equal the drift") {
  const FunctionVelocityField drift([](double x, double) { return VelocityPair{0.5, 0.0 * x}; }, -10, 10, true);
  SdeConfig c = config(100, 1.0, 0.01);
  std::vector<double> x0;
  for (int i = 0; i < 100; ++i) x0.push_back(-2.0 + 0.04 * i);
  const TrajectoryEnsemble e = sample_from_positions(drift, {1.0, 1e-40}, c, x0);
  const auto edges = uniform_edges(-3, 3, 6);
  const auto df = mean_derivative(e, 0.5, 0.1, edges, Direction::forward, 1);
  const auto db = mean_derivative(e, 0.5, 0.1, edges, Direction::backward, 1);
  for (std::size_t b = 0; b < df.mean.size(); ++b) {
    if (df.count[b] == 0) continue;
    CHECK(df.mean[b] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(db.mean[b] == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("Nelson-Newton residual vanishes for a free Gaussian packet") {
  // Free packet of initial width s0: sigma_t^2 = s0^2 + (t / 2 s0)^2 (hbar = m = 1).
  const double s0 = 1.0;
  auto var = [&](double t) { return s0 * s0 + t * t / (4 * s0 * s0); };
  const FunctionVelocityField packet(
      [&](double x, double t) {
        return VelocityPair{x * (t / (4 * s0 * s0)) / var(t), -0.5 * x / var(t)};
      },
      -30, 30, false);
  const GridSpec g = build_grid(-30, 30, 3001, 1e-3);
  std::vector<double> rho0(g.n_points), rho_t(g.n_points);
  const double T = 2.0;
  for (std::size_t i = 0; i < g.n_points; ++i) {
    const double x = g.x(i);
    rho0[i] = std::exp(-x * x / (2 * var(0))) / std::sqrt(2 * std::numbers::pi * var(0));
    rho_t[i] = std::exp(-x * x / (2 * var(T))) / std::sqrt(2 * std::numbers::pi * var(T));
  }
  SdeConfig c = config(20000, T, 1e-3, 3);
  c.record_every = 10;
  const TrajectoryEnsemble f = sample_forward(packet, {}, c, g, rho0);
  c.direction = Direction::backward;
  const TrajectoryEnsemble b = sample_backward(packet, {}, c, g, rho_t);
  const auto edges = uniform_edges(-2, 2, 10);
  const NewtonEstimate n = nelson_newton_residual(f, b, packet, {}, Potential::free(), 1.0, 0.01, edges);
  std::size_t used = 0;
  for (std::size_t k = 0; k < n.residual.size(); ++k) {
    if (!n.trusted[k]) continue;
    ++used;
    CHECK(std::abs(n.residual[k]) < 4 * n.residual_std_error[k]);
  }
  CHECK(used >= 8);
}

TEST_CASE("weak order one for the ground-state second moment") {
  // Stationary Euler-Maruyama variance of dx = -x dt + dW is 1 / (2 - dt).
  const auto field = ground_field(-20, 20);
  const std::vector<double> x0(100000, 0.0);
  auto second_moment_error = [&](double dt) {
    SdeConfig c = config(100000, 8.0, dt, 99);
    c.record_every = static_cast<std::size_t>(std::llround(8.0 / dt));
    const TrajectoryEnsemble e = sample_from_positions(field, {}, c, x0);
    double m2 = 0;
    for (double x : e.marginal(1)) m2 += x * x;
    return m2 / 1e5 - 0.5;
  };
  const double e1 = second_moment_error(0.2), e2 = second_moment_error(0.1);
  CHECK(e1 / e2 > 1.4);
  CHECK(e1 / e2 < 2.8);
}
