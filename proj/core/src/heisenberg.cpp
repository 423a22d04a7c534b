#include "heislab/heisenberg.hpp"

#include <algorithm>
#include <ostream>

#include "heislab/error.hpp"

namespace heislab {

std::ostream& operator<<(std::ostream& os, const Point& p) {
  return os << '(' << p.x << ", " << p.y << ", " << p.t << ')';
}

Ball::Ball(Point center, double radius) : center_(center), radius_(radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw DomainError("Ball radius must be positive and finite");
  }
}

double Ball::volume() const {
  const double r2 = radius_ * radius_;
  return kUnitBallVolume * r2 * r2;
}

bool Ball::contains(const Point& p) const { return koranyi_dist(center_, p) < radius_; }

Ball Ball::scaled(double lambda) const { return Ball(center_, lambda * radius_); }

Point group_mul(const Point& p, const Point& q) {
  return {p.x + q.x, p.y + q.y, p.t + q.t + 2.0 * (p.y * q.x - p.x * q.y)};
}

Point inverse(const Point& p) { return {-p.x, -p.y, -p.t}; }

Point dilate(double lambda, const Point& p) {
  if (!(lambda > 0.0)) {
    throw DomainError("dilation factor must be positive");
  }
  return {lambda * p.x, lambda * p.y, lambda * lambda * p.t};
}

double koranyi_gauge(const Point& p) {
  const double h = p.x * p.x + p.y * p.y;
  return std::sqrt(std::sqrt(h * h + p.t * p.t));
}

double koranyi_dist(const Point& p, const Point& q) {
  return koranyi_gauge(group_mul(inverse(p), q));
}

Point group_midpoint(const Point& p, const Point& q) {
  return group_mul(p, dilate(0.5, group_mul(inverse(p), q)));
}

Ball ball_xy(const Point& p, const Point& q) {
  if (p == q) {
    throw DomainError("ball_xy: endpoints coincide");
  }
  const Point m = group_midpoint(p, q);
  const double r = std::max(koranyi_dist(m, p), koranyi_dist(m, q));
  return Ball(m, r * (1.0 + kBallPad));
}

Frame horizontal_frame(const Point& p) {
  return {{1.0, 0.0, 2.0 * p.y}, {0.0, 1.0, -2.0 * p.x}};
}

std::array<double, 3> to_coordinates(const Point& p, const HorizontalVector& v) {
  return {v.a, v.b, 2.0 * (p.y * v.a - p.x * v.b)};
}

}  // namespace heislab
