#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "heislab/density.hpp"
#include "heislab/heisenberg.hpp"
#include "heislab/random.hpp"

namespace heislab {

enum class SchemeKind { monte_carlo, stratified_mc, tensor_grid };

std::string_view to_string(SchemeKind k);
SchemeKind scheme_kind_from_string(std::string_view name);

struct QuadratureScheme {
  SchemeKind kind = SchemeKind::monte_carlo;
  std::int64_t sample_budget = 200000;
  std::uint64_t seed = 0x5eedULL;
  double target_rel_error = 0.01;

  // Throws DomainError unless sample_budget >= 100 and target_rel_error is in
  // (0, 0.5).
  void validate() const;

  bool deterministic() const { return kind == SchemeKind::tensor_grid; }
  QuadratureScheme with_seed(std::uint64_t s) const {
    QuadratureScheme q = *this;
    q.seed = s;
    return q;
  }
  QuadratureScheme with_budget(std::int64_t n) const {
    QuadratureScheme q = *this;
    q.sample_budget = n;
    return q;
  }
};

struct IntegralResult {
  double value = 0.0;
  // Standard error of the estimator; 0 for deterministic rules.
  double std_error = 0.0;
  std::int64_t samples_used = 0;
  // Fraction of bounding-box draws accepted (rejection sampling only).
  double acceptance_rate = 1.0;
};

using PointFunction = std::function<double(const Point&)>;

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int n);

// Koranyi polar coordinates about the identity:
//   z = (rho sqrt(cos psi) cos theta, rho sqrt(cos psi) sin theta, rho^2 sin psi)
// with gauge(z) = rho and dz = rho^3 drho dpsi dtheta, psi in [-pi/2, pi/2].
Point polar_point(double rho, double psi, double theta);

// Product rule over the unit sphere in (psi, theta), built for integrands that
// are smooth in z: psi uses a polynomial substitution that removes the
// sqrt(cos psi) endpoint behaviour, theta the periodic trapezoid rule.
struct SphereRule {
  std::vector<double> psi;
  std::vector<double> theta;
  // weights[i * theta.size() + j]; they sum to 2 pi^2 (the sphere measure).
  std::vector<double> weights;
  // Unit-gauge directions matching `weights`.
  std::vector<Point> directions;
};
const SphereRule& sphere_rule(int n_psi, int n_theta);

// Estimates int_B f dx dy dt. Monte Carlo samples by rejection from the box
// [-r,r]^2 x [-r^2,r^2] translated to the center; stratified sampling works in
// the polar cube (rho^4, psi, theta); tensor_grid is a Gauss product rule in
// polar coordinates with about sample_budget nodes. Non-finite integrand values
// raise NumericalError naming the sample point.
IntegralResult integrate_ball(const PointFunction& f, const Ball& ball,
                              const QuadratureScheme& scheme);

// Batched form over several integrands sharing the same sample points.
std::vector<IntegralResult> integrate_ball_multi(
    const std::function<void(const Point&, double* out)>& f, int count, const Ball& ball,
    const QuadratureScheme& scheme);

// 2 pi^2 int_0^r_max g(rho) rho^3 drho by adaptive Gauss-Kronrod. Throws
// NumericalError when the integral does not converge to a finite value.
double integrate_radial(const std::function<double(double)>& g, double r_max);

// int log(1/d(x,y)) f(y) dy. Deterministic schemes use dyadic annuli centered at
// x, truncated at radius 1e-6 times the support radius (the omitted core is
// bounded analytically and folded into std_error); random schemes sample each
// bump from its own profile. Atoms contribute exactly; an atom located at x
// raises NumericalError.
IntegralResult integrate_log_kernel(const Density& f, const Point& x,
                                    const QuadratureScheme& scheme);

// Same kernel restricted to a region (indicator), used by the near/far split.
// `inside` selects the part of the measure that is integrated.
IntegralResult integrate_log_kernel_restricted(const Density& f, const Point& x,
                                               const std::function<bool(const Point&)>& inside,
                                               const QuadratureScheme& scheme);

namespace detail {

// Deterministic int log(1/d(x,y)) phi_b(y) dy for a single bump, optionally
// restricted. n_angular controls the sphere resolution.
double bump_log_moment(const Bump& bump, const Point& x, int n_angular,
                       const std::function<bool(const Point&)>* inside = nullptr,
                       double core_fraction = 1e-6);

// Draws y from the probability measure phi(d(c,y)/w) dy / (w^4 N).
Point sample_bump(const Bump& bump, Rng& rng);

}  // namespace detail

}  // namespace heislab
