#include <cmath>

#include "doctest.h"
#include "heislab/error.hpp"
#include "heislab/weights.hpp"

using namespace heislab;

namespace {

Density mixed() {
  Density d;
  d.bumps.push_back({Point{0.2, 0.1, 0}, Profile::poly_bump, 0.7, 0.4});
  d.bumps.push_back({Point{-0.6, 0.3, 0.4}, Profile::gaussian_like, 0.5, -0.6});
  return d;
}

FamilySpec spec(FamilyPolicy p, int count) {
  FamilySpec s;
  s.policy = p;
  s.count = count;
  s.radii = 2;
  s.region_radius = 1.5;
  s.r_min = 0.1;
  s.r_max = 1.0;
  s.seed = 17;
  return s;
}

}  // namespace

TEST_CASE("flat weight: A_p, doubling and reverse Hoelder are exact") {
  const WeightField w = WeightField::flat();
  const BallFamily f = make_family(spec(FamilyPolicy::random_in_region, 10));
  for (double p : {1.2, 2.0, 4.0}) CHECK(ap_constant(w, f, p).value == doctest::Approx(1.0).epsilon(0.02));
  CHECK(doubling_constant(w, f).value == doctest::Approx(16.0).epsilon(0.03));
  CHECK(reverse_holder_probe(w, f, 1.0).value == 1.0);
  CHECK(reverse_holder_probe(w, f, 3.0).value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("power weights e^{4u} and their clamp") {
  const WeightField w(PotentialField(mixed()), 4.0);
  const Point x{0.1, 0.2, 0.3};
  CHECK(w.value(x) == doctest::Approx(std::exp(4.0 * w.potential().value(x))));
  CHECK(w.power(x, 0.5) == doctest::Approx(std::sqrt(w.value(x))));
  std::array<double, 3> g{};
  const double v = w.value_and_gradient(x, g);
  const double h = 1e-6;
  CHECK(v == doctest::Approx(w.value(x)));
  CHECK(g[0] == doctest::Approx((w.value({x.x + h, x.y, x.t}) - w.value({x.x - h, x.y, x.t})) / (2 * h)).epsilon(1e-4));
  bool clamped = false;
  const WeightField huge(PotentialField(mixed()), 1e5);
  CHECK(std::isfinite(huge.value(Point{0.2, 0.1, 0}, &clamped)));
  CHECK(clamped);
}

TEST_CASE("Jensen: A_p products are at least 1 and decrease in p") {
  const WeightField w(PotentialField(mixed()), 4.0);
  const BallFamily f = make_family(spec(FamilyPolicy::random_in_region, 12));
  double prev = INFINITY;
  for (double p : {1.5, 2.0, 3.0, 6.0}) {
    const FamilyEstimate e = ap_constant(w, f, p);
    for (double v : e.per_ball) CHECK(v >= 1.0 - 1e-9);
    CHECK(e.value <= prev * (1 + 1e-12));
    prev = e.value;
  }
  CHECK_THROWS_AS(ap_constant(w, f, 1.0), DomainError);
}

TEST_CASE("reverse Hoelder is nondecreasing in r") {
  const WeightField w(PotentialField(mixed()), 4.0);
  const BallFamily f = make_family(spec(FamilyPolicy::grid_centers, 3));
  double prev = 0.0;
  for (double r : {1.0, 1.5, 2.0, 4.0}) {
    const double v = reverse_holder_probe(w, f, r).value;
    CHECK(v >= prev * (1 - 1e-12));
    prev = v;
  }
  CHECK_THROWS_AS(reverse_holder_probe(w, f, 0.5), DomainError);
}

TEST_CASE("doubling of a weight exceeds 1 and is finite") {
  const WeightField w(PotentialField(mixed()), 4.0);
  const FamilyEstimate d = doubling_constant(w, make_family(spec(FamilyPolicy::random_in_region, 8)));
  CHECK(d.value > 1.0);
  CHECK(std::isfinite(d.value));
}

TEST_CASE("A1 ratio") {
  const BallFamily f = make_family(spec(FamilyPolicy::grid_centers, 2));
  const std::vector<Point> probes{f.balls[0].center(), f.balls[1].center()};
  CHECK(a1_ratio(WeightField::flat(), f, probes).value == doctest::Approx(1.0).epsilon(1e-9));
  const WeightField w(PotentialField(mixed()), 4.0);
  CHECK(a1_ratio(w, f, probes).value > 0.0);
  CHECK_THROWS_AS(a1_ratio(w, f, {Point{100, 100, 0}}), DomainError);
}

TEST_CASE("family builders") {
  const BallFamily g = make_family(spec(FamilyPolicy::grid_centers, 3));
  CHECK(g.balls.size() > 0);
  CHECK(g.balls.size() % 2 == 0);
  for (const Ball& b : g.balls) {
    CHECK(b.radius() >= 0.1 - 1e-12);
    CHECK(b.radius() <= 1.0 + 1e-12);
    CHECK(koranyi_dist(b.center(), kIdentity) < 1.5);
  }
  const BallFamily r = make_family(spec(FamilyPolicy::random_in_region, 7));
  CHECK(r.balls.size() == 7);
  const BallFamily r2 = make_family(spec(FamilyPolicy::random_in_region, 7));
  CHECK(r.balls[3].center() == r2.balls[3].center());
  const BallFamily n = make_family(spec(FamilyPolicy::nested_pairs, 9));
  CHECK(n.pairs.size() == 9);
  for (const auto& [i, j] : n.pairs) {
    CHECK(koranyi_dist(i.center(), j.center()) + i.radius() <= j.radius() * (1 + 1e-12));
  }
  FamilySpec bad = spec(FamilyPolicy::random_in_region, 5);
  bad.r_min = 2.0;
  CHECK_THROWS_AS(make_family(bad), DomainError);
  CHECK(family_policy_from_string(to_string(FamilyPolicy::nested_pairs)) == FamilyPolicy::nested_pairs);
  CHECK_THROWS_AS(family_policy_from_string("spiral"), DomainError);
}

TEST_CASE("alpha, beta and epsilon") {
  const AlphaBeta ab = alpha_beta(mixed());
  CHECK(ab.alpha == doctest::Approx(0.4));
  CHECK(ab.beta == doctest::Approx(0.6));
  CHECK(epsilon_from_p(3.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(epsilon_from_p(1.0), DomainError);
}

TEST_CASE("estimates are deterministic and independent of worker count") {
  const WeightField w(PotentialField(mixed()), 4.0);
  const BallFamily f = make_family(spec(FamilyPolicy::random_in_region, 9));
  EstimatorOptions one, many;
  one.workers = 1;
  many.workers = 4;
  one.scheme = many.scheme = QuadratureScheme{SchemeKind::stratified_mc, 5000, 3, 0.01};
  const FamilyEstimate a = ap_constant(w, f, 2.0, one), b = ap_constant(w, f, 2.0, many);
  CHECK(a.value == b.value);
  CHECK(a.per_ball == b.per_ball);
}
