#include <cmath>

#include "doctest.h"
#include "heislab/error.hpp"
#include "heislab/potential.hpp"
#include "heislab/random.hpp"

using namespace heislab;

namespace {

Density two_bumps() {
  Density d;
  d.bumps.push_back({Point{0.4, -0.2, 0.3}, Profile::poly_bump, 0.6, 0.7});
  d.bumps.push_back({Point{-0.5, 0.6, -0.4}, Profile::gaussian_like, 0.45, -0.9});
  d.atoms.push_back({Point{1.1, 0.2, 0.5}, 0.25});
  d.c1_prime = 1.3;
  return d;
}

Point probe(Rng& rng) { return {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-2, 2)}; }

QuadratureScheme mc(std::uint64_t seed, std::int64_t n = 100000) {
  return {SchemeKind::stratified_mc, n, seed, 0.01};
}

}  // namespace

TEST_CASE("zero density gives zero potential") {
  const PotentialField u(Density{});
  CHECK(u.value(Point{1, 2, 3}) == 0.0);
  CHECK(eval_u(u, Point{0.1, 0, 0}).value == 0.0);
}

TEST_CASE("single off-origin atom") {
  Density d;
  d.atoms.push_back({Point{0, 1, 0.5}, 0.8});
  d.c1_prime = 2.0;
  const PotentialField u(d);
  const Point x{0.3, -0.4, 1.0};
  const Point y0 = d.atoms[0].location;
  CHECK(u.value(x) == doctest::Approx(0.4 * std::log(koranyi_gauge(y0) / koranyi_dist(x, y0))));
  CHECK_THROWS_AS(u.value(y0), NumericalError);
  Density bad;
  bad.atoms.push_back({kIdentity, 1.0});
  CHECK_THROWS_AS(PotentialField{bad}, DomainError);
}

TEST_CASE("far from a bump the potential is the point-mass value") {
  for (double w : {0.2, 0.1, 0.05}) {
    Density d;
    d.bumps.push_back({Point{0.5, 0.5, 0.2}, Profile::poly_bump, w, 1.0});
    const PotentialField u(d);
    const Point x{3, -2, 5};
    const double point_mass = std::log(koranyi_gauge(d.bumps[0].center) / koranyi_dist(x, d.bumps[0].center));
    CHECK(std::abs(u.value(x) - point_mass) < w * w);
  }
}

TEST_CASE("tabulated values agree with sampled values") {
  const Density d = two_bumps();
  const PotentialField u(d);
  Rng rng(21);
  for (int i = 0; i < 10; ++i) {
    const Point x = probe(rng);
    const IntegralResult r = eval_u(u.with_scheme(mc(100 + i)), x);
    CAPTURE(x);
    CHECK(std::abs(r.value - u.value(x)) < 4 * r.std_error + 1e-3);
  }
}

TEST_CASE("linearity in the density") {
  const Density d = two_bumps();
  const PotentialField u(d), up = u.positive_part(), um = u.negative_part();
  Rng rng(22);
  for (int i = 0; i < 20; ++i) {
    const Point x = probe(rng);
    CHECK(u.value(x) == doctest::Approx(up.value(x) + um.value(x)).epsilon(1e-10));
    CHECK(PotentialField(d.scaled(-2.0)).value(x) == doctest::Approx(-2.0 * u.value(x)).epsilon(1e-10));
  }
}

TEST_CASE("dilation covariance") {
  const Density d = two_bumps();
  const PotentialField u(d);
  Rng rng(23);
  for (int i = 0; i < 20; ++i) {
    const double lam = std::exp(rng.uniform(-2, 2));
    const Point x = probe(rng);
    const PotentialField ul(d.dilated(lam));
    CHECK(ul.value(dilate(lam, x)) == doctest::Approx(u.value(x)).epsilon(1e-9));
    const IntegralResult a = eval_u(u.with_scheme(mc(200 + i)), x);
    const IntegralResult b = eval_u(ul.with_scheme(mc(300 + i)), dilate(lam, x));
    CHECK(std::abs(a.value - b.value) < 3 * std::hypot(a.std_error, b.std_error) + 1e-12);
  }
  const Normalized n = normalize_to_unit_separation(u, Point{0.1, 0, 0}, Point{0.3, 0.1, 0.05});
  CHECK(koranyi_dist(n.x, n.y) == doctest::Approx(2.0));
  CHECK(n.field.value(n.x) == doctest::Approx(u.value(Point{0.1, 0, 0})).epsilon(1e-9));
  CHECK_THROWS_AS(normalize_to_unit_separation(u, n.x, n.x), DomainError);
}

TEST_CASE("left translation changes u by a constant") {
  const Density d = two_bumps();
  const Point g{0.7, -0.3, 1.1};
  const PotentialField u(d), ut(d.translated(g));
  Rng rng(24);
  const Point x0 = probe(rng);
  const double c = ut.value(group_mul(g, x0)) - u.value(x0);
  for (int i = 0; i < 10; ++i) {
    const Point x = probe(rng);
    CHECK(ut.value(group_mul(g, x)) - u.value(x) == doctest::Approx(c).epsilon(1e-6));
  }
}

TEST_CASE("analytic gradient matches finite differences") {
  const PotentialField u(two_bumps());
  Rng rng(25);
  for (int i = 0; i < 10; ++i) {
    const Point x = probe(rng);
    const PotentialSample s = u.sample(x);
    const double h = 1e-6;
    const double gx = (u.value({x.x + h, x.y, x.t}) - u.value({x.x - h, x.y, x.t})) / (2 * h);
    const double gy = (u.value({x.x, x.y + h, x.t}) - u.value({x.x, x.y - h, x.t})) / (2 * h);
    const double gt = (u.value({x.x, x.y, x.t + h}) - u.value({x.x, x.y, x.t - h})) / (2 * h);
    CAPTURE(x);
    CHECK(s.grad[0] == doctest::Approx(gx).epsilon(1e-4).scale(1));
    CHECK(s.grad[1] == doctest::Approx(gy).epsilon(1e-4).scale(1));
    CHECK(s.grad[2] == doctest::Approx(gt).epsilon(1e-4).scale(1));
  }
}

TEST_CASE("zero total mass: u tends to the log|y| moment at large gauge") {
  Density d;
  d.bumps.push_back({Point{0.3, 0, 0}, Profile::poly_bump, 0.5, 1.0});
  d.bumps.push_back({Point{-0.3, 0.2, 0.1}, Profile::poly_bump, 0.4, -1.0});
  const PotentialField u(d);
  const double limit = cbar(u.with_scheme({SchemeKind::tensor_grid, 64000, 1, 0.01}), Ball(kIdentity, 10)).value;
  CHECK(std::abs(u.value(Point{5000, 0, 0}) - limit) < 1e-3);
  CHECK(std::abs(u.value(Point{0, 0, 5000 * 5000}) - limit) < 1e-5);
  CHECK(std::abs(u.value(Point{500, 0, 0}) - limit) < std::abs(u.value(Point{50, 0, 0}) - limit));
}

TEST_CASE("near/far split, u_hat1 and cbar identities") {
  const Density d = two_bumps();
  const PotentialField u(d, mc(5, 60000));
  const Ball b10(Point{0.2, 0.1, 0}, 0.9);
  Rng rng(26);
  for (int i = 0; i < 6; ++i) {
    const Point x = probe(rng);
    const NearFar nf = split_near_far(u, b10, x);
    const double total = PotentialField(d).value(x);
    CHECK(std::abs(nf.u1.value + nf.u2.value - total) < 3 * std::hypot(nf.u1.std_error, nf.u2.std_error) + 2e-3);
    const IntegralResult h = eval_u_hat1(u, b10, x), c = cbar(u, b10);
    CHECK(std::abs(h.value + c.value - nf.u1.value) <
          3 * std::sqrt(h.std_error * h.std_error + c.std_error * c.std_error + nf.u1.std_error * nf.u1.std_error) + 2e-3);
  }
}

TEST_CASE("support entirely inside or outside the split ball") {
  Density d;
  d.bumps.push_back({Point{0.1, 0, 0}, Profile::poly_bump, 0.2, 0.5});
  const PotentialField u(d);
  const NearFar inside = split_near_far(u, Ball(kIdentity, 2.0), Point{0.5, 0.5, 0});
  CHECK(inside.u2.value == 0.0);
  const NearFar outside = split_near_far(u, Ball(Point{5, 5, 0}, 1.0), Point{0.5, 0.5, 0});
  CHECK(outside.u1.value == 0.0);
}

TEST_CASE("cbar of atoms on the unit sphere and at gauge e") {
  Density d;
  d.atoms.push_back({Point{1, 0, 0}, 0.6});
  CHECK(cbar(PotentialField(d), Ball(kIdentity, 3.0)).value == doctest::Approx(0.0).scale(1));
  Density e;
  e.atoms.push_back({Point{std::exp(1.0), 0, 0}, 0.6});
  // Signed-mass convention: cbar = (1/c1') int_{B10} log|y| f(y) dy.
  CHECK(cbar(PotentialField(e), Ball(kIdentity, 3.0)).value == doctest::Approx(0.6));
  Density z;
  z.atoms.push_back({Point{0, 0, 0.5}, 0.2});
  z.atoms.push_back({Point{1, 1, 0}, 0.1});
  CHECK(cbar(PotentialField(z), Ball(kIdentity, 0.1)).value == 0.0);
}

TEST_CASE("far-measure oscillation bound on 2B") {
  Rng rng(27);
  for (int s = 0; s < 3; ++s) {
    Density d;
    for (int k = 0; k < 3; ++k) {
      d.bumps.push_back({Point{rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-30, 30)}, Profile::poly_bump,
                         rng.uniform(0.2, 1.0), -rng.uniform(0.1, 0.5)});
    }
    const PotentialField u(d);
    const Ball b(Point{0.1, 0.2, 0}, 0.5);
    double beta_out = 0.0;
    for (const auto& bp : d.bumps) {
      if (koranyi_dist(bp.center, b.center()) >= 10 * b.radius() + bp.width) beta_out += -bp.mass;
    }
    for (int i = 0; i < 20; ++i) {
      const double rho = 2 * b.radius() * std::sqrt(std::sqrt(rng.uniform())) * 0.999;
      const Point z = group_mul(b.center(), dilate(rho, polar_point(1.0, rng.uniform(-1.5, 1.5), rng.uniform(0, 6.28))));
      const IntegralResult o = u2_oscillation(u, b, z);
      CHECK(o.value <= beta_out / (4 * d.c1_prime) + 3 * o.std_error + 1e-12 + (beta_out == 0.0 ? 0.25 * 1.5 : 0.0));
    }
    CHECK(u2_oscillation(u, b, b.center()).value == doctest::Approx(0.0).scale(1));
  }
  const PotentialField u(two_bumps());
  CHECK_THROWS_AS(u2_oscillation(u, Ball(kIdentity, 0.1), Point{1, 0, 0}), DomainError);
}

TEST_CASE("single far atom oscillation") {
  Density d;
  const Point y0{100, 0, 0};
  d.atoms.push_back({y0, -0.5});
  const PotentialField u(d);
  const Ball b(kIdentity, 1.0);
  const Point z{1.2, 0.3, 0.2};
  const double expect = 0.5 * std::abs(std::log(koranyi_dist(z, y0) / koranyi_dist(kIdentity, y0)));
  CHECK(u2_oscillation(u, b, z).value == doctest::Approx(expect).epsilon(1e-9));
}
