#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "heislab/heisenberg.hpp"

namespace heislab {

// Radial profiles phi(s), s = d(center, y)/width, supported on s < 1.
enum class Profile {
  poly_bump,     // (1 - s^2)^3
  gaussian_like  // exp(1 - 1/(1 - s^2)), a C-infinity mollifier
};

std::string_view to_string(Profile p);
Profile profile_from_string(std::string_view name);

// phi(s) for s >= 0 (zero for s >= 1).
double profile_value(Profile p, double s);

// Integral of phi(|z|) over H^1, i.e. 2 pi^2 int_0^1 phi(rho) rho^3 drho.
double profile_normalization(Profile p);

// A signed bump of total mass `mass` supported on B(center, width):
//   f(y) = mass * phi(d(center, y)/width) / (width^4 * normalization).
struct Bump {
  Point center;
  Profile profile = Profile::poly_bump;
  double width = 1.0;
  double mass = 0.0;

  double density(const Point& y) const;
  double peak_density() const;
};

struct Atom {
  Point location;
  double mass = 0.0;
};

// The signed measure f(y) dy standing for Q'(y) e^{4u(y)} dy.
struct Density {
  std::vector<Bump> bumps;
  std::vector<Atom> atoms;
  double c1_prime = 1.0;
  // Claims alpha < c1', the hypothesis under which e^{4u} is expected to be A1.
  bool a1_admissible = false;

  bool empty() const { return bumps.empty() && atoms.empty(); }

  // Pointwise density of the absolutely continuous part.
  double density(const Point& y) const;

  double positive_mass() const;
  double negative_mass() const;
  double total_variation() const { return positive_mass() + negative_mass(); }

  // Throws DomainError on non-finite data, nonpositive widths or c1'.
  void validate() const;

  // Parts with positive / negative mass; the negative part keeps its sign so
  // that positive_part() + negative_part() == *this as measures.
  Density positive_part() const;
  Density negative_part() const;

  // Every mass multiplied by `factor` (same c1').
  Density scaled(double factor) const;

  // Push-forward under dilate(lambda, .): centers and atoms move, widths scale
  // by lambda, masses are preserved.
  Density dilated(double lambda) const;

  // Push-forward under left translation by g.
  Density translated(const Point& g) const;
};

}  // namespace heislab
