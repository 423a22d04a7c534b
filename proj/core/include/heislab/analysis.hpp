#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "heislab/density.hpp"
#include "heislab/heisenberg.hpp"
#include "heislab/paths.hpp"
#include "heislab/potential.hpp"
#include "heislab/quadrature.hpp"
#include "heislab/weights.hpp"

namespace heislab {

// Strong A-infinity comparability of delta_omega (ball integral) and d_omega
// (path infimum).

struct PairSpec {
  std::string id = "pairs";
  int count = 50;
  Point region_center = kIdentity;
  double region_radius = 1.0;
  // Gauge separations are log-uniform in [sep_min, sep_max].
  double sep_min = 0.1;
  double sep_max = 10.0;
  std::uint64_t seed = 2;

  void validate() const;
};

// p uniform in the region ball, q = p . dilate(s, unit direction).
std::vector<std::pair<Point, Point>> make_pairs(const PairSpec& spec);

struct PairSample {
  Point p, q;          // as sampled
  double lambda = 1.0;  // normalization factor 2 / d(p, q)
  double delta = 0.0;   // delta_omega after normalization
  double delta_se = 0.0;
  double d = 0.0;  // d_omega after normalization
  double endpoint_miss = 0.0;
  double outside_fraction = 0.0;
  bool ok = false;
  std::string failure;
};

struct ComparabilityReport {
  std::vector<PairSample> pairs;
  double sup_delta_over_d = 0.0;
  double sup_d_over_delta = 0.0;
  double min_delta_over_d = 0.0;
  int failures = 0;
  double alpha = 0.0, beta = 0.0, c1_prime = 1.0;
  std::uint64_t pair_seed = 0, optimizer_seed = 0;
};

struct ScanOptions {
  PathOptimizerConfig optimizer;
  QuadratureScheme scheme = default_weight_scheme();
  int workers = 0;  // pairs in parallel
};

// Each pair is normalized to separation 2 (density pushed forward by the
// dilation) before both quasidistances are measured. Failed optimizations are
// recorded and excluded from the suprema.
ComparabilityReport strong_ainfty_scan(const WeightField& w,
                                       const std::vector<std::pair<Point, Point>>& pairs,
                                       const ScanOptions& opt = {});

// Cartan singular set: balls outside of which mu(B(x, r)) <= r beta / eps for
// all tested radii.

struct CartanOptions {
  // Candidate lattice pitch in units of eps (horizontal directions; the t pitch
  // is scaled by the size of the candidate patch).
  double pitch = 0.1;
  // Radii eps 2^{-j}, j = 0 .. dyadic_levels - 1.
  int dyadic_levels = 8;
  // Relative padding of emitted radii.
  double pad = 1e-9;
  // Nodes per ball in the mass integrals (tensor rule).
  std::int64_t mass_budget = 2048;
  // Upper bound on candidate points before the construction refuses.
  std::int64_t max_candidates = 2'000'000;
  int workers = 0;
};

struct SingularSet {
  std::vector<Ball> balls;
  double epsilon = 0.0;
  double beta = 0.0;  // total mass used in the bound
  // Candidate points scanned and how many violated the bound.
  std::int64_t candidates = 0;
  std::int64_t violating = 0;
  // Largest mu(B(x,r)) / (r beta / eps) over candidates left outside the cover.
  double max_outside_ratio = 0.0;

  double total_diameter() const;
  bool contains(const Point& p) const;
};

// |mu|(B) restricted to `region` (if given), atoms counted when strictly
// inside.
double abs_mass_in_ball(const Density& mu, const Ball& b, const std::optional<Ball>& region,
                        std::int64_t budget = 2048);

// Greedy Vitali-type construction over a candidate lattice around the mass
// concentrations of |mu| restricted to `region`. beta defaults to the total
// variation of mu inside the region. Throws DomainError unless
// 0 < eps <= 1/20 and NumericalError if the 10 eps budget is exceeded.
SingularSet cartan_singular_set(const Density& mu, const std::optional<Ball>& region, double epsilon,
                                const CartanOptions& opt = {},
                                std::optional<double> beta = std::nullopt);

// The dyadic series constant: c1' C0 = 10 sum_{j >= -1} (max(|j|, |j+1|) log 2
// + log 10) 2^{-j}, summed until the terms drop below 1e-17.
double c0_series(double c1_prime);
// Closed form 10 (6 log 2 + 4 log 10) / c1'.
double c0_closed_form(double c1_prime);

struct BoundProbe {
  Point x;
  double u_hat1 = 0.0;
  double std_error = 0.0;
  bool ok = false;
};

struct BoundReport {
  double c0 = 0.0;
  double bound = 0.0;  // C0 beta / eps
  double max_abs = 0.0;
  double max_ratio = 0.0;  // max |u_hat1| / bound
  int violations = 0;
  std::vector<BoundProbe> probes;
};

// Probes uniform in b10 and outside every ball of `e`.
std::vector<Point> sample_nonsingular_probes(const Ball& b10, const SingularSet& e, int count,
                                             std::uint64_t seed);

// Checks |u_hat1(x)| <= C0 beta / eps + 3 std_error at each probe. Throws
// DomainError for a probe outside b10 or inside the cover.
BoundReport u_hat1_bound_check(const PotentialField& u, const Ball& b10, const SingularSet& e,
                               double epsilon, const std::vector<Point>& probes, int workers = 0);

// Arclength outside a cover.

struct ProjectionReport {
  double length = 0.0;          // horizontal length of the path
  double outside_length = 0.0;  // length outside the union of balls
  // Measure of the projection of the outside part onto the contact line
  // through the endpoints.
  double projected_outside = 0.0;
};

// Intervals of s in [0, len] where the horizontal line s -> a . (s cos th,
// s sin th, 0) lies strictly inside b; exact up to quartic root finding.
std::vector<std::pair<double, double>> line_ball_intervals(const Point& a, double theta, double len,
                                                           const Ball& b);

ProjectionReport projection_length(const HorizontalPath& path, const SingularSet& e);

// The straight horizontal segment from p in the planar direction theta with
// the given length, as a path with `segments` controls.
HorizontalPath straight_segment(const Point& p, double theta, double length, int segments = 1);

// Two-weight balance, Sobolev-Poincare, power-mean probe.

struct BalanceReport {
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  std::size_t argmax = 0;
  std::vector<double> ratios;
  bool clamped = false;
};

// max over nested pairs (I, J) of
//   (r_I / r_J) (mu(I) / mu(J))^{1/q} / (nu(I) / nu(J))^{1/p}.
// Throws DomainError for an empty family or unless 1 <= p < q.
BalanceReport balance_check(const WeightField& mu, const WeightField& nu, const BallFamily& f,
                            double p, double q, const EstimatorOptions& opt = {});

// q = 4p / (4 - p); throws DomainError unless 1 <= p < 4.
double sobolev_exponent(double p);

struct TestFunction {
  std::string name;
  std::function<double(const Point&)> f;
  // Analytic (X1 f, X2 f); central frame differences are used when empty.
  std::function<HorizontalVector(const Point&)> grad_b;
};

// Built-in test functions: "x", "y", "t", "gauge", "wave", "const".
TestFunction builtin_test_function(const std::string& name);

// (X1 f, X2 f) at p by central differences along the frame flows, step h.
HorizontalVector horizontal_gradient_fd(const std::function<double(const Point&)>& f, const Point& p,
                                        double h);

struct SobolevResult {
  double lhs = 0.0;
  double rhs_without_c = 0.0;  // (avg_nu |grad_b f|^p)^{1/p}
  double ratio = 0.0;          // lhs / (r * rhs_without_c)
  double mean = 0.0;           // f_B with respect to mu
  double q = 0.0;
};

// mu = e^{4u} dx, nu = e^{(4-p)u} dx, q = 4p/(4-p).
SobolevResult sobolev_poincare_ratio(const TestFunction& f, const Ball& b, const PotentialField& u,
                                     double p, const QuadratureScheme& scheme = default_weight_scheme());

struct PowerMeanProbe {
  double forward_max = 0.0;   // max M_s / M_1
  double backward_max = 0.0;  // max M_1 / M_s
  bool clamped = false;
};

// M_1 = avg_B omega, M_s = (avg_B omega^s)^{1/s}. Throws DomainError unless
// 0 < s < 1.
PowerMeanProbe stromberg_wheeden_probe(const WeightField& w, double s, const BallFamily& f,
                                       const EstimatorOptions& opt = {});

}  // namespace heislab
