#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "heislab/density.hpp"
#include "heislab/heisenberg.hpp"
#include "heislab/potential.hpp"
#include "heislab/quadrature.hpp"

namespace heislab {

// |exponent * u| is clamped at this value before exponentiation.
inline constexpr double kLogClamp = 700.0;

// omega = exp(exponent * u). The exponent is 4 for e^{4u}, 4 - p for the
// Sobolev measure nu, and -4 eps for the auxiliary weight built from the
// negative part of the density.
class WeightField {
 public:
  WeightField(PotentialField u, double exponent);
  // omega == 1 (zero density).
  static WeightField flat();

  const PotentialField& potential() const { return u_; }
  double exponent() const { return exponent_; }

  // exponent * u(x), unclamped.
  double log_value(const Point& x) const;
  // omega(x)^s = exp(clamp(s * exponent * u(x))). `clamped` is set when the
  // clamp was active.
  double power(const Point& x, double s, bool* clamped = nullptr) const;
  double value(const Point& x, bool* clamped = nullptr) const { return power(x, 1.0, clamped); }
  // omega(x) and its Euclidean gradient.
  double value_and_gradient(const Point& x, std::array<double, 3>& grad) const;

 private:
  PotentialField u_;
  double exponent_;
};

enum class FamilyPolicy { grid_centers, random_in_region, nested_pairs };

std::string_view to_string(FamilyPolicy p);
FamilyPolicy family_policy_from_string(std::string_view name);

struct FamilySpec {
  std::string id = "family";
  FamilyPolicy policy = FamilyPolicy::random_in_region;
  // Centers are drawn from (or laid out over) this ball.
  Point region_center = kIdentity;
  double region_radius = 1.0;
  // grid_centers: points per axis; otherwise the number of balls or pairs.
  int count = 16;
  // grid_centers only: number of radii, geometric between r_min and r_max.
  int radii = 3;
  double r_min = 0.1;
  double r_max = 1.0;
  std::uint64_t seed = 1;

  // Throws DomainError for nonpositive sizes or an empty radius range.
  void validate() const;
};

// A finite family of balls standing in for "all balls".
struct BallFamily {
  std::string id;
  FamilyPolicy policy = FamilyPolicy::random_in_region;
  double r_min = 0.0;
  double r_max = 0.0;
  std::uint64_t seed = 0;
  std::vector<Ball> balls;
  // nested_pairs only: (I, J) with d(c_I, c_J) + r_I <= r_J, hence I inside J.
  std::vector<std::pair<Ball, Ball>> pairs;
};

BallFamily make_family(const FamilySpec& spec);

// Max over a family with the maximizing ball and a propagated standard error.
struct FamilyEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t argmax = 0;
  // Some exponent hit kLogClamp somewhere in the family.
  bool clamped = false;
  std::vector<double> per_ball;
  std::vector<double> per_ball_se;
};

// Quadrature used for ball averages of weights; nodes are evaluated through the
// tabulated potential, so tensor rules are cheap and accurate.
inline QuadratureScheme default_weight_scheme() {
  return {SchemeKind::tensor_grid, 27000, 0x5eedULL, 0.01};
}

struct EstimatorOptions {
  QuadratureScheme scheme = default_weight_scheme();
  int workers = 0;  // <= 0: default_workers()
};

// max_B avg_B(omega) * avg_B(omega^{-1/(p-1)})^{p-1}
FamilyEstimate ap_constant(const WeightField& w, const BallFamily& f, double p,
                           const EstimatorOptions& opt = {});

// max over probes x and balls B containing x of avg_B(omega) / omega(x). Throws
// DomainError when a probe lies in no ball.
FamilyEstimate a1_ratio(const WeightField& w, const BallFamily& f, const std::vector<Point>& probes,
                        const EstimatorOptions& opt = {});

// max_B omega(2B) / omega(B)
FamilyEstimate doubling_constant(const WeightField& w, const BallFamily& f,
                                 const EstimatorOptions& opt = {});

// max_B avg_B(omega^r)^{1/r} / avg_B(omega), r >= 1.
FamilyEstimate reverse_holder_probe(const WeightField& w, const BallFamily& f, double r,
                                    const EstimatorOptions& opt = {});

struct AlphaBeta {
  double alpha = 0.0;  // total positive mass
  double beta = 0.0;   // total negative mass, as a nonnegative number
};
AlphaBeta alpha_beta(const Density& f);

// eps = p'/p = 1/(p - 1). Throws DomainError unless p > 1.
double epsilon_from_p(double p);

namespace detail {
// avg_B omega^{s_k} for each exponent in `s`, sharing one set of nodes.
std::vector<IntegralResult> weight_power_averages(const WeightField& w, const Ball& b,
                                                  const std::vector<double>& s,
                                                  const QuadratureScheme& scheme, bool* clamped);
}

}  // namespace heislab
