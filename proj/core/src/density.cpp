#include "heislab/density.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>

#include "heislab/error.hpp"

namespace heislab {

std::string_view to_string(Profile p) {
  switch (p) {
    case Profile::poly_bump:
      return "poly_bump";
    case Profile::gaussian_like:
      return "gaussian_like";
  }
  return "?";
}

Profile profile_from_string(std::string_view name) {
  if (name == "poly_bump") return Profile::poly_bump;
  if (name == "gaussian_like") return Profile::gaussian_like;
  throw DomainError("unknown bump profile '" + std::string(name) + "'");
}

double profile_value(Profile p, double s) {
  if (s >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  switch (p) {
    case Profile::poly_bump:
      return q * q * q;
    case Profile::gaussian_like:
      return std::exp(1.0 - 1.0 / q);
  }
  return 0.0;
}

namespace {

double compute_mollifier_normalization() {
  using boost::math::quadrature::gauss_kronrod;
  auto g = [](double rho) { return profile_value(Profile::gaussian_like, rho) * rho * rho * rho; };
  double err = 0.0;
  const double v = gauss_kronrod<double, 61>::integrate(g, 0.0, 1.0, 20, 1e-15, &err);
  return 2.0 * kPi * kPi * v;
}

}  // namespace

double profile_normalization(Profile p) {
  switch (p) {
    case Profile::poly_bump:
      // pi^2 int_0^1 (1-v)^3 v dv = pi^2 / 20
      return kPi * kPi / 20.0;
    case Profile::gaussian_like: {
      static const double n = compute_mollifier_normalization();
      return n;
    }
  }
  return 1.0;
}

double Bump::density(const Point& y) const {
  const double s = koranyi_dist(center, y) / width;
  if (s >= 1.0) return 0.0;
  const double w2 = width * width;
  return mass * profile_value(profile, s) / (w2 * w2 * profile_normalization(profile));
}

double Bump::peak_density() const {
  const double w2 = width * width;
  return std::abs(mass) / (w2 * w2 * profile_normalization(profile));
}

double Density::density(const Point& y) const {
  double f = 0.0;
  for (const auto& b : bumps) f += b.density(y);
  return f;
}

double Density::positive_mass() const {
  double m = 0.0;
  for (const auto& b : bumps) m += std::max(b.mass, 0.0);
  for (const auto& a : atoms) m += std::max(a.mass, 0.0);
  return m;
}

double Density::negative_mass() const {
  double m = 0.0;
  for (const auto& b : bumps) m += std::max(-b.mass, 0.0);
  for (const auto& a : atoms) m += std::max(-a.mass, 0.0);
  return m;
}

namespace {
bool finite_point(const Point& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.t);
}
}  // namespace

void Density::validate() const {
  if (!(c1_prime > 0.0) || !std::isfinite(c1_prime)) {
    throw DomainError("c1_prime must be positive and finite");
  }
  for (std::size_t i = 0; i < bumps.size(); ++i) {
    const auto& b = bumps[i];
    if (!finite_point(b.center) || !std::isfinite(b.mass)) {
      throw DomainError("bump " + std::to_string(i) + ": non-finite center or mass");
    }
    if (!(b.width > 0.0) || !std::isfinite(b.width)) {
      throw DomainError("bump " + std::to_string(i) + ": width must be positive");
    }
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!finite_point(atoms[i].location) || !std::isfinite(atoms[i].mass)) {
      throw DomainError("atom " + std::to_string(i) + ": non-finite location or mass");
    }
  }
}

Density Density::positive_part() const {
  Density d{{}, {}, c1_prime, a1_admissible};
  for (const auto& b : bumps)
    if (b.mass > 0.0) d.bumps.push_back(b);
  for (const auto& a : atoms)
    if (a.mass > 0.0) d.atoms.push_back(a);
  return d;
}

Density Density::negative_part() const {
  Density d{{}, {}, c1_prime, false};
  for (const auto& b : bumps)
    if (b.mass < 0.0) d.bumps.push_back(b);
  for (const auto& a : atoms)
    if (a.mass < 0.0) d.atoms.push_back(a);
  return d;
}

Density Density::scaled(double factor) const {
  Density d = *this;
  for (auto& b : d.bumps) b.mass *= factor;
  for (auto& a : d.atoms) a.mass *= factor;
  return d;
}

Density Density::dilated(double lambda) const {
  Density d = *this;
  for (auto& b : d.bumps) {
    b.center = dilate(lambda, b.center);
    b.width *= lambda;
  }
  for (auto& a : d.atoms) a.location = dilate(lambda, a.location);
  return d;
}

Density Density::translated(const Point& g) const {
  Density d = *this;
  for (auto& b : d.bumps) b.center = group_mul(g, b.center);
  for (auto& a : d.atoms) a.location = group_mul(g, a.location);
  return d;
}

}  // namespace heislab
