#include "heislab/weights.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "heislab/error.hpp"
#include "heislab/parallel.hpp"
#include "heislab/random.hpp"

namespace heislab {

WeightField::WeightField(PotentialField u, double exponent) : u_(std::move(u)), exponent_(exponent) {
  if (!std::isfinite(exponent)) throw DomainError("WeightField: exponent must be finite");
}

WeightField WeightField::flat() { return WeightField(PotentialField(Density{}), 4.0); }

double WeightField::log_value(const Point& x) const {
  if (exponent_ == 0.0) return 0.0;
  return exponent_ * u_.value(x);
}

double WeightField::power(const Point& x, double s, bool* clamped) const {
  double e = s * log_value(x);
  if (std::abs(e) > kLogClamp) {
    if (clamped) *clamped = true;
    e = std::copysign(kLogClamp, e);
  }
  return std::exp(e);
}

double WeightField::value_and_gradient(const Point& x, std::array<double, 3>& grad) const {
  const PotentialSample s = u_.sample(x);
  double e = exponent_ * s.value;
  const bool hit = std::abs(e) > kLogClamp;
  if (hit) e = std::copysign(kLogClamp, e);
  const double v = std::exp(e);
  for (int k = 0; k < 3; ++k) grad[k] = hit ? 0.0 : v * exponent_ * s.grad[k];
  return v;
}

std::string_view to_string(FamilyPolicy p) {
  switch (p) {
    case FamilyPolicy::grid_centers: return "grid_centers";
    case FamilyPolicy::random_in_region: return "random_in_region";
    case FamilyPolicy::nested_pairs: return "nested_pairs";
  }
  return "?";
}

FamilyPolicy family_policy_from_string(std::string_view name) {
  if (name == "grid_centers") return FamilyPolicy::grid_centers;
  if (name == "random_in_region") return FamilyPolicy::random_in_region;
  if (name == "nested_pairs") return FamilyPolicy::nested_pairs;
  throw DomainError("unknown family policy '" + std::string(name) + "'");
}

void FamilySpec::validate() const {
  if (!(region_radius > 0.0) || !std::isfinite(region_radius)) {
    throw DomainError("family '" + id + "': region_radius must be positive");
  }
  if (count < 1) throw DomainError("family '" + id + "': count must be >= 1");
  if (policy == FamilyPolicy::grid_centers && radii < 1) {
    throw DomainError("family '" + id + "': radii must be >= 1");
  }
  if (!(r_min > 0.0) || !(r_max >= r_min) || !std::isfinite(r_max)) {
    throw DomainError("family '" + id + "': need 0 < r_min <= r_max");
  }
}

namespace {

Point random_in_ball(const Point& c, double radius, Rng& rng) {
  const double rho = radius * std::sqrt(std::sqrt(rng.uniform()));
  const double psi = rng.uniform(-0.5 * kPi, 0.5 * kPi);
  const double theta = rng.uniform(0.0, 2.0 * kPi);
  return group_mul(c, polar_point(rho, psi, theta));
}

double log_uniform(double lo, double hi, Rng& rng) {
  if (hi == lo) return lo;
  return lo * std::pow(hi / lo, rng.uniform());
}

}  // namespace

BallFamily make_family(const FamilySpec& spec) {
  spec.validate();
  BallFamily fam;
  fam.id = spec.id;
  fam.policy = spec.policy;
  fam.r_min = spec.r_min;
  fam.r_max = spec.r_max;
  fam.seed = spec.seed;
  Rng rng(mix_seed(spec.seed, 0x6661));
  const double R = spec.region_radius;
  switch (spec.policy) {
    case FamilyPolicy::grid_centers: {
      const int k = spec.count;
      std::vector<double> radii;
      for (int j = 0; j < spec.radii; ++j) {
        const double s = spec.radii == 1 ? 0.0 : static_cast<double>(j) / (spec.radii - 1);
        radii.push_back(spec.r_min * std::pow(spec.r_max / spec.r_min, s));
      }
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          for (int l = 0; l < k; ++l) {
            const Point off{R * (-1.0 + 2.0 * (i + 0.5) / k), R * (-1.0 + 2.0 * (j + 0.5) / k),
                            R * R * (-1.0 + 2.0 * (l + 0.5) / k)};
            if (koranyi_gauge(off) > R) continue;
            const Point c = group_mul(spec.region_center, off);
            for (double r : radii) fam.balls.emplace_back(c, r);
          }
        }
      }
      break;
    }
    case FamilyPolicy::random_in_region:
      for (int i = 0; i < spec.count; ++i) {
        const Point c = random_in_ball(spec.region_center, R, rng);
        fam.balls.emplace_back(c, log_uniform(spec.r_min, spec.r_max, rng));
      }
      break;
    case FamilyPolicy::nested_pairs:
      for (int i = 0; i < spec.count; ++i) {
        const Point cj = random_in_ball(spec.region_center, R, rng);
        const double rj = log_uniform(spec.r_min, spec.r_max, rng);
        const double ri = log_uniform(spec.r_min, rj, rng);
        // Shrink the offset slightly so rounding cannot break the inclusion.
        const Point ci = random_in_ball(cj, (rj - ri) * (1.0 - 1e-12), rng);
        Ball I(ci, ri), J(cj, rj);
        if (koranyi_dist(ci, cj) + ri > rj * (1.0 + 1e-12)) {
          throw NumericalError("make_family: nested pair construction lost inclusion");
        }
        fam.pairs.emplace_back(I, J);
        fam.balls.push_back(I);
        fam.balls.push_back(J);
      }
      break;
  }
  if (fam.balls.empty()) throw DomainError("family '" + spec.id + "' is empty");
  return fam;
}

namespace detail {

std::vector<IntegralResult> weight_power_averages(const WeightField& w, const Ball& b,
                                                  const std::vector<double>& s,
                                                  const QuadratureScheme& scheme, bool* clamped) {
  std::atomic<bool> hit{false};
  const int m = static_cast<int>(s.size());
  auto res = integrate_ball_multi(
      [&](const Point& x, double* out) {
        const double e = w.log_value(x);
        for (int k = 0; k < m; ++k) {
          double v = s[k] * e;
          if (std::abs(v) > kLogClamp) {
            hit.store(true, std::memory_order_relaxed);
            v = std::copysign(kLogClamp, v);
          }
          out[k] = std::exp(v);
        }
      },
      m, b, scheme);
  const double vol = b.volume();
  for (auto& r : res) {
    r.value /= vol;
    r.std_error /= vol;
  }
  if (clamped && hit.load()) *clamped = true;
  return res;
}

}  // namespace detail

namespace {

double rel(const IntegralResult& r) { return r.value != 0.0 ? r.std_error / std::abs(r.value) : 0.0; }

// Evaluates `per_ball(index, ball, scheme, clamped) -> (value, std_error)` over a
// family and reduces by maximum.
template <class F>
FamilyEstimate reduce_max(const std::vector<Ball>& balls, const EstimatorOptions& opt, F per_ball) {
  if (balls.empty()) throw DomainError("ball family is empty");
  opt.scheme.validate();
  const std::size_t n = balls.size();
  std::vector<double> vals(n), errs(n);
  std::vector<char> hits(n, 0);
  parallel_for(n, opt.workers, [&](std::size_t i) {
    const QuadratureScheme sc = opt.scheme.with_seed(mix_seed(opt.scheme.seed, i));
    bool hit = false;
    try {
      const auto [v, e] = per_ball(i, balls[i], sc, &hit);
      vals[i] = v;
      errs[i] = e;
    } catch (const NumericalError& ex) {
      std::ostringstream os;
      os << "quadrature failed on ball " << i << " (center " << balls[i].center() << ", radius "
         << balls[i].radius() << "): " << ex.what();
      throw NumericalError(os.str());
    }
    hits[i] = hit ? 1 : 0;
  });
  FamilyEstimate out;
  out.per_ball = vals;
  out.per_ball_se = errs;
  out.value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (vals[i] > out.value) {
      out.value = vals[i];
      out.std_error = errs[i];
      out.argmax = i;
    }
    out.clamped = out.clamped || hits[i];
  }
  return out;
}

}  // namespace

double epsilon_from_p(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("p must be a finite number > 1");
  return 1.0 / (p - 1.0);
}

FamilyEstimate ap_constant(const WeightField& w, const BallFamily& f, double p,
                           const EstimatorOptions& opt) {
  const double eps = epsilon_from_p(p);
  return reduce_max(f.balls, opt,
                    [&](std::size_t, const Ball& b, const QuadratureScheme& sc, bool* hit) {
                      const auto r = detail::weight_power_averages(w, b, {1.0, -eps}, sc, hit);
                      const double v = r[0].value * std::pow(r[1].value, p - 1.0);
                      const double e = v * std::hypot(rel(r[0]), (p - 1.0) * rel(r[1]));
                      return std::pair{v, e};
                    });
}

FamilyEstimate a1_ratio(const WeightField& w, const BallFamily& f, const std::vector<Point>& probes,
                        const EstimatorOptions& opt) {
  if (probes.empty()) throw DomainError("a1_ratio: no probes");
  std::vector<std::vector<std::size_t>> owners(probes.size());
  for (std::size_t k = 0; k < probes.size(); ++k) {
    for (std::size_t i = 0; i < f.balls.size(); ++i) {
      if (f.balls[i].contains(probes[k])) owners[k].push_back(i);
    }
    if (owners[k].empty()) {
      std::ostringstream os;
      os << "a1_ratio: probe " << probes[k] << " lies in no ball of family '" << f.id << "'";
      throw DomainError(os.str());
    }
  }
  FamilyEstimate avg = reduce_max(f.balls, opt,
                                  [&](std::size_t, const Ball& b, const QuadratureScheme& sc, bool* hit) {
                                    const auto r = detail::weight_power_averages(w, b, {1.0}, sc, hit);
                                    return std::pair{r[0].value, r[0].std_error};
                                  });
  FamilyEstimate out;
  out.clamped = avg.clamped;
  out.per_ball.assign(probes.size(), 0.0);
  out.value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < probes.size(); ++k) {
    bool hit = false;
    const double wx = w.value(probes[k], &hit);
    out.clamped = out.clamped || hit;
    for (std::size_t i : owners[k]) {
      const double ratio = avg.per_ball[i] / wx;
      out.per_ball[k] = std::max(out.per_ball[k], ratio);
      if (ratio > out.value) {
        out.value = ratio;
        out.argmax = k;
        out.std_error = avg.per_ball_se[i] / wx;
      }
    }
  }
  return out;
}

FamilyEstimate doubling_constant(const WeightField& w, const BallFamily& f,
                                 const EstimatorOptions& opt) {
  return reduce_max(f.balls, opt,
                    [&](std::size_t, const Ball& b, const QuadratureScheme& sc, bool* hit) {
                      const auto inner = detail::weight_power_averages(w, b, {1.0}, sc, hit)[0];
                      const auto outer =
                          detail::weight_power_averages(w, b.scaled(2.0), {1.0}, sc.with_seed(mix_seed(sc.seed, 2)), hit)[0];
                      // Ratio of masses = 16 * ratio of averages.
                      const double v = 16.0 * outer.value / inner.value;
                      return std::pair{v, v * std::hypot(rel(inner), rel(outer))};
                    });
}

FamilyEstimate reverse_holder_probe(const WeightField& w, const BallFamily& f, double r,
                                    const EstimatorOptions& opt) {
  if (!(r >= 1.0) || !std::isfinite(r)) throw DomainError("reverse_holder_probe: r must be >= 1");
  return reduce_max(f.balls, opt,
                    [&](std::size_t, const Ball& b, const QuadratureScheme& sc, bool* hit) {
                      if (r == 1.0) return std::pair{1.0, 0.0};
                      const auto a = detail::weight_power_averages(w, b, {1.0, r}, sc, hit);
                      const double v = std::pow(a[1].value, 1.0 / r) / a[0].value;
                      return std::pair{v, v * std::hypot(rel(a[1]) / r, rel(a[0]))};
                    });
}

AlphaBeta alpha_beta(const Density& f) { return {f.positive_mass(), f.negative_mass()}; }

}  // namespace heislab
