#include <chrono>
#include <cmath>

#include "doctest.h"
#include "heislab/density.hpp"
#include "heislab/error.hpp"
#include "heislab/quadrature.hpp"

using namespace heislab;

namespace {

// int_0^1 -log(rho) (1 - rho^2)^3 rho^3 drho, term by term.
constexpr double kPolyLogMoment = 1.0 / 16 - 3.0 / 36 + 3.0 / 64 - 1.0 / 100;
// int_0^1 (1 - rho^2)^3 rho^3 drho
constexpr double kPolyMoment = 1.0 / 4 - 3.0 / 6 + 3.0 / 8 - 1.0 / 10;

QuadratureScheme scheme(SchemeKind k, std::int64_t n = 200000) { return {k, n, 11, 0.01}; }

}  // namespace

TEST_CASE("unit ball volume under every scheme") {
  const auto one = [](const Point&) { return 1.0; };
  for (auto k : {SchemeKind::monte_carlo, SchemeKind::stratified_mc, SchemeKind::tensor_grid}) {
    CAPTURE(to_string(k));
    const auto r = integrate_ball(one, Ball(kIdentity, 1.0), scheme(k));
    CHECK(r.value == doctest::Approx(kPi * kPi / 2).epsilon(0.01));
  }
  const auto mc = integrate_ball(one, Ball(kIdentity, 1.0), scheme(SchemeKind::monte_carlo));
  CHECK(mc.acceptance_rate == doctest::Approx(kPi * kPi / 16).epsilon(0.02));
  const auto big = integrate_ball(one, Ball(Point{1, -1, 2}, 2.0), scheme(SchemeKind::tensor_grid, 8000));
  CHECK(big.value == doctest::Approx(16 * kPi * kPi / 2).epsilon(1e-9));
}

TEST_CASE("radial moment of the gauge") {
  const auto g = [](const Point& p) { return koranyi_gauge(p); };
  const auto r = integrate_ball(g, Ball(kIdentity, 1.0), scheme(SchemeKind::tensor_grid, 8000));
  CHECK(r.value == doctest::Approx(2 * kPi * kPi / 5).epsilon(1e-8));
  CHECK(integrate_radial([](double rho) { return rho; }, 1.0) == doctest::Approx(2 * kPi * kPi / 5).epsilon(1e-12));
  const auto s = integrate_ball(g, Ball(kIdentity, 1.0), scheme(SchemeKind::stratified_mc));
  CHECK(std::abs(s.value - 2 * kPi * kPi / 5) < 4 * s.std_error + 1e-3);
}

TEST_CASE("polynomial in x, y, t over a translated ball") {
  // int_B(c, r) x^2 over the ball equals the left-translation invariant
  // second moment plus the center shift; checked against a fine tensor rule.
  const Ball b(Point{0.3, -0.2, 0.1}, 0.7);
  const auto f = [](const Point& p) { return p.x * p.x + p.t; };
  const auto ref = integrate_ball(f, b, scheme(SchemeKind::tensor_grid, 64000));
  const auto mc = integrate_ball(f, b, scheme(SchemeKind::stratified_mc, 400000));
  CHECK(std::abs(mc.value - ref.value) < 4 * mc.std_error);
}

TEST_CASE("sphere rule and Gauss-Legendre") {
  const auto& s = sphere_rule(16, 32);
  double sum = 0;
  for (double w : s.weights) sum += w;
  CHECK(sum == doctest::Approx(2 * kPi * kPi).epsilon(1e-12));
  for (const auto& d : s.directions) CHECK(koranyi_gauge(d) == doctest::Approx(1.0).epsilon(1e-12));
  const auto& g = gauss_legendre(7);
  double x6 = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) x6 += g.weights[i] * std::pow(g.nodes[i], 12);
  CHECK(x6 == doctest::Approx(2.0 / 13).epsilon(1e-12));
}

TEST_CASE("bump profiles integrate to their mass") {
  CHECK(profile_normalization(Profile::poly_bump) == doctest::Approx(2 * kPi * kPi * kPolyMoment).epsilon(1e-10));
  for (auto prof : {Profile::poly_bump, Profile::gaussian_like}) {
    const Bump b{Point{0.5, 0.1, -0.2}, prof, 0.6, -1.7};
    const auto r = integrate_ball([&](const Point& y) { return b.density(y); }, Ball(b.center, b.width),
                                  scheme(SchemeKind::tensor_grid, 27000));
    CHECK(r.value == doctest::Approx(-1.7).epsilon(1e-6));
  }
}

TEST_CASE("log kernel at the bump center has a closed form") {
  const double w = 0.4, m = 1.3;
  const Bump b{Point{0.2, 0.3, -0.1}, Profile::poly_bump, w, m};
  const double expect = m * (std::log(1 / w) + kPolyLogMoment / kPolyMoment);
  Density d;
  d.bumps.push_back(b);
  const auto det = integrate_log_kernel(d, b.center, scheme(SchemeKind::tensor_grid, 8000));
  CHECK(det.value == doctest::Approx(expect).epsilon(1e-6));
  CHECK(detail::bump_log_moment(b, b.center, 24) == doctest::Approx(expect).epsilon(1e-6));
  const auto mc = integrate_log_kernel(d, b.center, scheme(SchemeKind::monte_carlo, 400000));
  CHECK(std::abs(mc.value - expect) < 4 * mc.std_error);
}

TEST_CASE("log kernel off center agrees with brute-force sampling") {
  const Bump b{Point{0, 0, 0}, Profile::gaussian_like, 0.8, 1.0};
  Density d;
  d.bumps.push_back(b);
  Rng rng(99);
  for (const Point x : {Point{0.3, 0.2, 0.1}, Point{0.9, 0, 0.3}, Point{2, 1, -1}}) {
    // Independent oracle: plain rejection sampling from the bounding box.
    const int n = 400000;
    double s = 0, s2 = 0;
    const double r = b.width, vol = 4 * r * r * 2 * r * r;
    for (int i = 0; i < n; ++i) {
      const Point y{rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r * r, r * r)};
      const double f = b.density(y) == 0.0 ? 0.0 : -std::log(koranyi_dist(x, y)) * b.density(y) * vol;
      s += f;
      s2 += f * f;
    }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    const auto det = integrate_log_kernel(d, x, scheme(SchemeKind::tensor_grid, 8000));
    CAPTURE(x);
    CHECK(std::abs(det.value - mean) < 4 * se + 1e-4);
  }
}

TEST_CASE("atoms contribute exactly and atoms at x raise") {
  Density d;
  d.atoms.push_back({Point{1, 0, 0}, 0.5});
  const auto r = integrate_log_kernel(d, Point{0, 0, 16}, scheme(SchemeKind::tensor_grid, 8000));
  CHECK(r.value == doctest::Approx(-0.5 * std::log(koranyi_dist(Point{1, 0, 0}, Point{0, 0, 16}))));
  CHECK_THROWS_AS(integrate_log_kernel(d, Point{1, 0, 0}, scheme(SchemeKind::tensor_grid, 8000)), NumericalError);
}

TEST_CASE("non-finite integrands are reported") {
  const auto bad = [](const Point& p) { return p.x > 0 ? std::nan("") : 1.0; };
  CHECK_THROWS_AS(integrate_ball(bad, Ball(kIdentity, 1.0), scheme(SchemeKind::tensor_grid, 8000)), NumericalError);
  CHECK_THROWS_AS(scheme(SchemeKind::monte_carlo, 10).validate(), DomainError);
}

TEST_CASE("volume at the default budget is fast") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = integrate_ball([](const Point&) { return 1.0; }, Ball(kIdentity, 1.0), QuadratureScheme{});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(r.value == doctest::Approx(kUnitBallVolume).epsilon(0.01));
  CHECK(secs < 5.0);
}
