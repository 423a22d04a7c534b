#pragma once

// The first Heisenberg group H^1 = R^3 with the law
//   (x,y,t)(x',y',t') = (x+x', y+y', t+t'+2(yx'-xy')),
// whose left-invariant horizontal frame is X1 = dx + 2y dt, X2 = dy - 2x dt.
// Distances are measured with the Koranyi gauge ((x^2+y^2)^2+t^2)^(1/4); the
// Haar measure is Lebesgue measure dx dy dt and the homogeneous dimension is 4.

#include <array>
#include <cmath>
#include <iosfwd>

namespace heislab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr int kHomogeneousDimension = 4;

// Volume of the Koranyi unit ball, pi^2/2.
inline constexpr double kUnitBallVolume = kPi * kPi / 2.0;

struct Point {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

std::ostream& operator<<(std::ostream& os, const Point& p);

inline constexpr Point kIdentity{0.0, 0.0, 0.0};

// Coefficients (a, b) of a horizontal vector a X1 + b X2.
struct HorizontalVector {
  double a = 0.0;
  double b = 0.0;

  double norm() const { return std::hypot(a, b); }
  friend bool operator==(const HorizontalVector&, const HorizontalVector&) = default;
};

class Ball {
 public:
  Ball(Point center, double radius);

  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  double volume() const;

  // Strict membership: d(center, p) < radius.
  bool contains(const Point& p) const;

  // The ball with the same center and lambda times the radius.
  Ball scaled(double lambda) const;

 private:
  Point center_;
  double radius_;
};

Point group_mul(const Point& p, const Point& q);
Point inverse(const Point& p);

// Group dilation (x,y,t) -> (lambda x, lambda y, lambda^2 t). Throws DomainError
// for lambda <= 0.
Point dilate(double lambda, const Point& p);

double koranyi_gauge(const Point& p);

// d(p, q) = |p^{-1} q|. Left invariant, symmetric, and a genuine metric.
double koranyi_dist(const Point& p, const Point& q);

// p . dilate(1/2, p^{-1} q). d(m, p) = d(p, q)/2 exactly.
Point group_midpoint(const Point& p, const Point& q);

// Padding applied to ball_xy radii so both endpoints are strictly inside.
inline constexpr double kBallPad = 1e-9;

// Smallest gauge ball centered at group_midpoint(p, q) containing p and q,
// padded by kBallPad. Throws DomainError when p == q.
Ball ball_xy(const Point& p, const Point& q);

// Euclidean coordinate expressions of the frame at p.
struct Frame {
  std::array<double, 3> x1;
  std::array<double, 3> x2;
};
Frame horizontal_frame(const Point& p);

// Left translation of a horizontal displacement: the coordinate tangent vector
// a X1(p) + b X2(p).
std::array<double, 3> to_coordinates(const Point& p, const HorizontalVector& v);

}  // namespace heislab
