#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "heislab/heisenberg.hpp"
#include "heislab/quadrature.hpp"
#include "heislab/weights.hpp"

namespace heislab {

// A contact curve on the parameter interval [0, 1] with piecewise-constant
// controls on N equal intervals: on each interval (x, y) moves with velocity
// (a, b) and t follows t' = 2(y a - x b).
struct HorizontalPath {
  Point start;
  std::vector<HorizontalVector> controls;

  int segments() const { return static_cast<int>(controls.size()); }
  // sum |v_i| / N
  double length() const;
  // Same curve run backwards, starting at the old endpoint.
  HorizontalPath reversed() const;
};

// N + 1 trajectory points, integrated exactly per segment.
std::vector<Point> reconstruct(const HorizontalPath& path);

// Point on segment i at its parameter midpoint, given the segment start.
Point segment_midpoint(const Point& start, const HorizontalVector& v, double h);

// sum_i omega^{1/4}(midpoint_i) |v_i| / N
double weighted_length(const HorizontalPath& path, const WeightField& w);

struct PathOptimizerConfig {
  int segments = 64;
  int restarts = 8;
  int max_iterations = 400;
  double step_tolerance = 1e-10;
  // Quadratic endpoint penalty per continuation stage (paired with multiplier
  // updates); must be strictly increasing.
  std::vector<double> penalty_schedule{1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  // Weight of the soft penalty for leaving ball_xy(p, q) in d_omega.
  double containment_weight = 1e3;
  std::uint64_t seed = 0x9a7eULL;
  int workers = 0;  // restarts in parallel; <= 0: default_workers()

  // Throws DomainError unless segments >= 8, restarts >= 1, and the schedule is
  // positive and strictly increasing.
  void validate() const;
};

struct PathResult {
  double length = 0.0;
  // koranyi_dist(endpoint of path, q)
  double endpoint_miss = 0.0;
  // Arclength fraction of the trajectory outside ball_xy(p, q); 0 for
  // cc_distance, which carries no containment constraint.
  double outside_fraction = 0.0;
  HorizontalPath path;
  int feasible_restarts = 0;
  // Length per restart; infinity for restarts that missed the endpoint.
  std::vector<double> restart_lengths;
};

// Endpoint tolerance relative to d(p, q).
inline constexpr double kEndpointTolerance = 1e-4;

// Shortest horizontal path found from p to q. Throws DomainError for p == q and
// OptimizationError when no restart meets the endpoint tolerance.
PathResult cc_distance(const Point& p, const Point& q, const PathOptimizerConfig& cfg = {});

// Minimal omega^{1/4}-length from p to q with a soft penalty for leaving
// ball_xy(p, q). Same errors as cc_distance.
PathResult d_omega(const Point& p, const Point& q, const WeightField& w,
                   const PathOptimizerConfig& cfg = {});

// (int_{ball_xy(p,q)} omega)^{1/4}. std_error is propagated from the ball
// integral.
IntegralResult delta_omega(const Point& p, const Point& q, const WeightField& w,
                           const QuadratureScheme& scheme = default_weight_scheme());

// Exact sub-Riemannian length of the flat geodesic from p to q, used to seed
// the optimizer and as an oracle.
double cc_distance_closed_form(const Point& p, const Point& q);

// CSV with header "index,s,x,y,t".
void write_path_csv(std::ostream& os, const HorizontalPath& path);

namespace detail {

// The augmented Lagrangian minimized by the optimizer for controls
// (a_0, b_0, a_1, ...) from p towards q, with multipliers lam and penalty mu.
// Fills grad with the adjoint gradient when non-null. w == nullptr is flat.
double path_objective(const Point& p, const Point& q, const WeightField* w, bool contain,
                      double containment_weight, const std::vector<double>& controls,
                      const std::array<double, 3>& lam, double mu, std::vector<double>* grad);

}  // namespace detail

}  // namespace heislab
