#pragma once

#include <array>
#include <vector>

#include "heislab/density.hpp"
#include "heislab/heisenberg.hpp"
#include "heislab/quadrature.hpp"

namespace heislab {

// Deterministic evaluation through tabulated bump kernels.
inline QuadratureScheme default_potential_scheme() {
  return {SchemeKind::tensor_grid, 8000, 0x5eedULL, 0.01};
}

struct PotentialSample {
  double value = 0.0;
  std::array<double, 3> grad{0.0, 0.0, 0.0};  // Euclidean gradient in (x, y, t)
};

// The normal potential
//   u(x) = (1/c1') int log(|y| / d(x, y)) f(y) dy
// of a signed Density f. Immutable after construction.
class PotentialField {
 public:
  // Throws DomainError for invalid densities and for atoms at the identity, whose
  // log|y| term diverges.
  explicit PotentialField(Density source,
                          QuadratureScheme scheme = default_potential_scheme());

  const Density& source() const { return source_; }
  const QuadratureScheme& scheme() const { return scheme_; }
  double c1_prime() const { return source_.c1_prime; }

  // Deterministic value through the kernel tables. Throws NumericalError on top
  // of an atom.
  double value(const Point& x) const;
  PotentialSample sample(const Point& x) const;

  PotentialField with_scheme(const QuadratureScheme& s) const { return PotentialField(source_, s); }
  PotentialField positive_part() const { return PotentialField(source_.positive_part(), scheme_); }
  PotentialField negative_part() const { return PotentialField(source_.negative_part(), scheme_); }

 private:
  Density source_;
  QuadratureScheme scheme_;
  // Per bump: Phi at the image of the identity, i.e. the log|y| moment.
  std::vector<double> origin_terms_;
};

// u(x) with the field's scheme: tensor_grid uses the kernel tables (std_error 0);
// random schemes integrate the combined kernel log(|y|/d(x,y)) by sampling each
// bump from its own profile.
IntegralResult eval_u(const PotentialField& u, const Point& x);

struct NearFar {
  IntegralResult u1;  // integral over B10
  IntegralResult u2;  // integral over the complement of B10
};

// Splits u(x) into the contributions of the measure inside and outside B10.
NearFar split_near_far(const PotentialField& u, const Ball& b10, const Point& x);

// |u2(z) - u2(p0)| where p0 is the center of the working ball B and u2 is the
// potential of the measure outside 10B. Throws DomainError unless z lies in 2B.
IntegralResult u2_oscillation(const PotentialField& u, const Ball& b, const Point& z);

// (1/c1') int_{B10} log(1/d(x,y)) f(y) dy
IntegralResult eval_u_hat1(const PotentialField& u, const Ball& b10, const Point& x);

// (1/c1') int_{B10} log|y| f(y) dy. Throws NumericalError for an atom at the
// identity inside B10.
IntegralResult cbar(const PotentialField& u, const Ball& b10);

struct Normalized {
  PotentialField field;
  Point x;
  Point y;
  double lambda = 1.0;
};

// Dilates by lambda = 2/d(x,y): the density is pushed forward under
// dilate(lambda, .) (masses preserved), and the returned field satisfies
// field(dilate(lambda, p)) == u(p). Throws DomainError when x == y.
Normalized normalize_to_unit_separation(const PotentialField& u, const Point& x, const Point& y);

}  // namespace heislab
