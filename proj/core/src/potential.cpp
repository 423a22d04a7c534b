#include "heislab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "heislab/error.hpp"
#include "heislab/random.hpp"
#include "kernel_table.hpp"

namespace heislab {

namespace {

// Image of x in the unit-bump frame: dilate(1/w, c^{-1} x).
Point bump_frame(const Bump& b, const Point& x) {
  return dilate(1.0 / b.width, group_mul(inverse(b.center), x));
}

// Chain rule from the bump frame back to x.
std::array<double, 3> pull_back(const Bump& b, const std::array<double, 3>& g) {
  const double iw = 1.0 / b.width;
  const double iw2 = iw * iw;
  return {g[0] * iw - 2.0 * b.center.y * g[2] * iw2, g[1] * iw + 2.0 * b.center.x * g[2] * iw2,
          g[2] * iw2};
}

[[noreturn]] void throw_on_atom(const Point& x) {
  std::ostringstream os;
  os << "potential is singular: evaluation point " << x << " is an atom location";
  throw NumericalError(os.str());
}

// log d(x, a) and its gradient in x.
double log_dist(const Point& x, const Point& a, std::array<double, 3>* grad) {
  const Point z = group_mul(inverse(a), x);
  const double h = z.x * z.x + z.y * z.y;
  const double g4 = h * h + z.t * z.t;
  if (g4 == 0.0) throw_on_atom(x);
  if (grad) {
    const std::array<double, 3> gz{h * z.x / g4, h * z.y / g4, z.t / (2.0 * g4)};
    (*grad) = {gz[0] - 2.0 * a.y * gz[2], gz[1] + 2.0 * a.x * gz[2], gz[2]};
  }
  return 0.25 * std::log(g4);
}

// Tabulated int log d(x,y) f_b(y) dy, without the log w offset.
detail::KernelSample bump_kernel(const Bump& b, const Point& x) {
  return detail::LogKernelTable::get(b.profile).eval(bump_frame(b, x));
}

bool ball_contains_support(const Ball& ball, const Bump& b) {
  return koranyi_dist(ball.center(), b.center) + b.width <= ball.radius();
}

bool ball_misses_support(const Ball& ball, const Bump& b) {
  return koranyi_dist(ball.center(), b.center) - b.width >= ball.radius();
}

enum class Part { inside, outside };

// Restricted deterministic moment int_{part} log(1/d(x,y)) f_b(y) dy.
double restricted_moment(const Bump& b, const Point& x, const Ball& ball, Part part, int n_ang) {
  const std::function<bool(const Point&)> pred = [&ball, part](const Point& y) {
    return ball.contains(y) == (part == Part::inside);
  };
  return detail::bump_log_moment(b, x, n_ang, &pred);
}

int angular_resolution(const QuadratureScheme& s) {
  return std::clamp(static_cast<int>(std::lround(std::cbrt(static_cast<double>(s.sample_budget)))),
                    12, 48);
}

struct Accumulator {
  double value = 0.0;
  double var = 0.0;
  std::int64_t samples = 0;
  IntegralResult result(double scale) const {
    return {scale * value, std::abs(scale) * std::sqrt(var), samples, 1.0};
  }
};

// Monte Carlo int kernel(y) 1_keep(y) f_b(y) dy for one bump.
template <class Kernel, class Keep>
void sample_bump_integral(const Bump& b, std::uint64_t seed, std::int64_t n, Kernel&& kernel,
                          Keep&& keep, Accumulator& acc) {
  Rng rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const Point y = detail::sample_bump(b, rng);
    const double v = keep(y) ? kernel(y) : 0.0;
    const double d = v - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (v - mean);
  }
  acc.value += b.mass * mean;
  acc.var += b.mass * b.mass * (n > 1 ? m2 / static_cast<double>(n - 1) : 0.0) / static_cast<double>(n);
  acc.samples += n;
}

std::int64_t per_bump_budget(const QuadratureScheme& s, std::size_t bumps) {
  return std::max<std::int64_t>(100, s.sample_budget / static_cast<std::int64_t>(std::max<std::size_t>(1, bumps)));
}

// Purpose tags keep independent estimates on independent streams.
enum Stream : std::uint64_t { kEvalU = 1, kNear = 2, kFar = 3, kOsc = 4, kHat = 5, kBar = 6 };

std::uint64_t stream_seed(const QuadratureScheme& s, Stream tag, std::size_t bump) {
  return mix_seed(mix_seed(s.seed, tag), bump);
}

double safe_log_ratio(double num, double den) {
  // Sample points coincide with x only with probability zero.
  if (num == 0.0 || den == 0.0) return 0.0;
  return std::log(num / den);
}

}  // namespace

PotentialField::PotentialField(Density source, QuadratureScheme scheme)
    : source_(std::move(source)), scheme_(scheme) {
  source_.validate();
  scheme_.validate();
  for (const auto& a : source_.atoms) {
    if (koranyi_gauge(a.location) == 0.0) {
      throw DomainError("atom at the identity: the log|y| term of the normal potential diverges");
    }
  }
  origin_terms_.reserve(source_.bumps.size());
  for (const auto& b : source_.bumps) origin_terms_.push_back(bump_kernel(b, kIdentity).value);
}

double PotentialField::value(const Point& x) const { return sample(x).value; }

PotentialSample PotentialField::sample(const Point& x) const {
  PotentialSample out;
  for (std::size_t i = 0; i < source_.bumps.size(); ++i) {
    const Bump& b = source_.bumps[i];
    const detail::KernelSample k = bump_kernel(b, x);
    out.value += b.mass * (origin_terms_[i] - k.value);
    const auto g = pull_back(b, k.grad);
    for (int c = 0; c < 3; ++c) out.grad[c] -= b.mass * g[c];
  }
  for (const auto& a : source_.atoms) {
    std::array<double, 3> g;
    const double ld = log_dist(x, a.location, &g);
    out.value += a.mass * (std::log(koranyi_gauge(a.location)) - ld);
    for (int c = 0; c < 3; ++c) out.grad[c] -= a.mass * g[c];
  }
  const double inv = 1.0 / source_.c1_prime;
  out.value *= inv;
  for (auto& g : out.grad) g *= inv;
  return out;
}

IntegralResult eval_u(const PotentialField& u, const Point& x) {
  const Density& f = u.source();
  const QuadratureScheme& s = u.scheme();
  if (s.deterministic()) {
    return {u.value(x), 0.0, static_cast<std::int64_t>(f.bumps.size()), 1.0};
  }
  Accumulator acc;
  for (const auto& a : f.atoms) {
    acc.value += a.mass * (std::log(koranyi_gauge(a.location)) - log_dist(x, a.location, nullptr));
  }
  const std::int64_t n = per_bump_budget(s, f.bumps.size());
  for (std::size_t i = 0; i < f.bumps.size(); ++i) {
    sample_bump_integral(
        f.bumps[i], stream_seed(s, kEvalU, i), n,
        [&x](const Point& y) { return safe_log_ratio(koranyi_gauge(y), koranyi_dist(x, y)); },
        [](const Point&) { return true; }, acc);
  }
  return acc.result(1.0 / f.c1_prime);
}

namespace {

// (1/c1') int_{part} log(|y|/d(x,y)) f dy
IntegralResult part_potential(const PotentialField& u, const Ball& ball, const Point& x, Part part,
                              Stream tag) {
  const Density& f = u.source();
  const QuadratureScheme& s = u.scheme();
  Accumulator acc;
  for (const auto& a : f.atoms) {
    if (ball.contains(a.location) != (part == Part::inside)) continue;
    acc.value += a.mass * (std::log(koranyi_gauge(a.location)) - log_dist(x, a.location, nullptr));
  }
  const std::int64_t n = per_bump_budget(s, f.bumps.size());
  const int n_ang = angular_resolution(s);
  for (std::size_t i = 0; i < f.bumps.size(); ++i) {
    const Bump& b = f.bumps[i];
    const bool all_in = ball_contains_support(ball, b);
    const bool all_out = ball_misses_support(ball, b);
    const bool whole = part == Part::inside ? all_in : all_out;
    const bool none = part == Part::inside ? all_out : all_in;
    if (none) continue;
    if (s.deterministic()) {
      if (whole) {
        acc.value += b.mass * (bump_kernel(b, kIdentity).value - bump_kernel(b, x).value);
      } else {
        acc.value += restricted_moment(b, x, ball, part, n_ang) -
                     restricted_moment(b, kIdentity, ball, part, n_ang);
      }
      continue;
    }
    sample_bump_integral(
        b, stream_seed(s, tag, i), n,
        [&x](const Point& y) { return safe_log_ratio(koranyi_gauge(y), koranyi_dist(x, y)); },
        [&](const Point& y) { return whole || ball.contains(y) == (part == Part::inside); }, acc);
  }
  return acc.result(1.0 / f.c1_prime);
}

}  // namespace

NearFar split_near_far(const PotentialField& u, const Ball& b10, const Point& x) {
  return {part_potential(u, b10, x, Part::inside, kNear),
          part_potential(u, b10, x, Part::outside, kFar)};
}

IntegralResult u2_oscillation(const PotentialField& u, const Ball& b, const Point& z) {
  const Point& p0 = b.center();
  if (!(koranyi_dist(p0, z) < 2.0 * b.radius())) {
    throw DomainError("u2_oscillation: probe lies outside 2B");
  }
  const Ball b10 = b.scaled(10.0);
  const Density& f = u.source();
  const QuadratureScheme& s = u.scheme();
  Accumulator acc;
  for (const auto& a : f.atoms) {
    if (b10.contains(a.location)) continue;
    acc.value += a.mass * (log_dist(p0, a.location, nullptr) - log_dist(z, a.location, nullptr));
  }
  const std::int64_t n = per_bump_budget(s, f.bumps.size());
  const int n_ang = angular_resolution(s);
  for (std::size_t i = 0; i < f.bumps.size(); ++i) {
    const Bump& b_i = f.bumps[i];
    if (ball_contains_support(b10, b_i)) continue;
    const bool whole = ball_misses_support(b10, b_i);
    if (s.deterministic()) {
      if (whole) {
        acc.value += b_i.mass * (bump_kernel(b_i, p0).value - bump_kernel(b_i, z).value);
      } else {
        acc.value += restricted_moment(b_i, z, b10, Part::outside, n_ang) -
                     restricted_moment(b_i, p0, b10, Part::outside, n_ang);
      }
      continue;
    }
    sample_bump_integral(
        b_i, stream_seed(s, kOsc, i), n,
        [&](const Point& y) { return safe_log_ratio(koranyi_dist(p0, y), koranyi_dist(z, y)); },
        [&](const Point& y) { return whole || !b10.contains(y); }, acc);
  }
  IntegralResult r = acc.result(1.0 / f.c1_prime);
  r.value = std::abs(r.value);
  return r;
}

IntegralResult eval_u_hat1(const PotentialField& u, const Ball& b10, const Point& x) {
  const Density& f = u.source();
  const QuadratureScheme& s = u.scheme();
  Accumulator acc;
  for (const auto& a : f.atoms) {
    if (!b10.contains(a.location)) continue;
    acc.value -= a.mass * log_dist(x, a.location, nullptr);
  }
  const std::int64_t n = per_bump_budget(s, f.bumps.size());
  const int n_ang = angular_resolution(s);
  for (std::size_t i = 0; i < f.bumps.size(); ++i) {
    const Bump& b = f.bumps[i];
    if (ball_misses_support(b10, b)) continue;
    const bool whole = ball_contains_support(b10, b);
    if (s.deterministic()) {
      acc.value += whole ? -b.mass * (std::log(b.width) + bump_kernel(b, x).value)
                         : restricted_moment(b, x, b10, Part::inside, n_ang);
      continue;
    }
    sample_bump_integral(
        b, stream_seed(s, kHat, i), n,
        [&x](const Point& y) {
          const double d = koranyi_dist(x, y);
          return d > 0.0 ? -std::log(d) : 0.0;
        },
        [&](const Point& y) { return whole || b10.contains(y); }, acc);
  }
  return acc.result(1.0 / f.c1_prime);
}

IntegralResult cbar(const PotentialField& u, const Ball& b10) {
  const Density& f = u.source();
  const QuadratureScheme& s = u.scheme();
  Accumulator acc;
  for (const auto& a : f.atoms) {
    if (!b10.contains(a.location)) continue;
    const double g = koranyi_gauge(a.location);
    if (g == 0.0) throw NumericalError("cbar diverges: atom at the identity inside B10");
    acc.value += a.mass * std::log(g);
  }
  const std::int64_t n = per_bump_budget(s, f.bumps.size());
  const int n_ang = angular_resolution(s);
  for (std::size_t i = 0; i < f.bumps.size(); ++i) {
    const Bump& b = f.bumps[i];
    if (ball_misses_support(b10, b)) continue;
    const bool whole = ball_contains_support(b10, b);
    if (s.deterministic()) {
      acc.value += whole ? b.mass * (std::log(b.width) + bump_kernel(b, kIdentity).value)
                         : -restricted_moment(b, kIdentity, b10, Part::inside, n_ang);
      continue;
    }
    sample_bump_integral(
        b, stream_seed(s, kBar, i), n,
        [](const Point& y) {
          const double g = koranyi_gauge(y);
          return g > 0.0 ? std::log(g) : 0.0;
        },
        [&](const Point& y) { return whole || b10.contains(y); }, acc);
  }
  return acc.result(1.0 / f.c1_prime);
}

Normalized normalize_to_unit_separation(const PotentialField& u, const Point& x, const Point& y) {
  const double d = koranyi_dist(x, y);
  if (d == 0.0) throw DomainError("normalize_to_unit_separation: points coincide");
  const double lambda = 2.0 / d;
  return {PotentialField(u.source().dilated(lambda), u.scheme()), dilate(lambda, x),
          dilate(lambda, y), lambda};
}

}  // namespace heislab
