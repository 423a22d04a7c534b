#include "heislab/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <string>

#include "heislab/error.hpp"
#include "heislab/random.hpp"

namespace heislab {

std::string_view to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::monte_carlo:
      return "monte_carlo";
    case SchemeKind::stratified_mc:
      return "stratified_mc";
    case SchemeKind::tensor_grid:
      return "tensor_grid";
  }
  return "?";
}

SchemeKind scheme_kind_from_string(std::string_view name) {
  if (name == "monte_carlo") return SchemeKind::monte_carlo;
  if (name == "stratified_mc") return SchemeKind::stratified_mc;
  if (name == "tensor_grid") return SchemeKind::tensor_grid;
  throw DomainError("unknown quadrature kind '" + std::string(name) + "'");
}

void QuadratureScheme::validate() const {
  if (sample_budget < 100) throw DomainError("sample_budget must be at least 100");
  if (!(target_rel_error > 0.0 && target_rel_error < 0.5)) {
    throw DomainError("target_rel_error must lie in (0, 0.5)");
  }
}

const GaussRule& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  if (n < 1) throw DomainError("Gauss-Legendre rule needs at least one node");
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  GaussRule rule;
  const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(n);
  auto weight = [n](double x) {
    const double dp = boost::math::legendre_p_prime(n, x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  // zeros holds the nonnegative roots in increasing order.
  for (auto z = zeros.rbegin(); z != zeros.rend(); ++z) {
    if (*z == 0.0) continue;
    rule.nodes.push_back(-*z);
    rule.weights.push_back(weight(*z));
  }
  for (double z : zeros) {
    rule.nodes.push_back(z);
    rule.weights.push_back(weight(z));
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

Point polar_point(double rho, double psi, double theta) {
  const double h = rho * std::sqrt(std::max(std::cos(psi), 0.0));
  return {h * std::cos(theta), h * std::sin(theta), rho * rho * std::sin(psi)};
}

const SphereRule& sphere_rule(int n_psi, int n_theta) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, SphereRule> cache;
  const GaussRule* g = &gauss_legendre(n_psi);
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(n_psi, n_theta);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  SphereRule rule;
  for (int i = 0; i < n_psi; ++i) {
    const double s = g->nodes[i];
    rule.psi.push_back(0.25 * kPi * (3.0 * s - s * s * s));
  }
  for (int j = 0; j < n_theta; ++j) rule.theta.push_back(2.0 * kPi * (j + 0.5) / n_theta);
  for (int i = 0; i < n_psi; ++i) {
    const double s = g->nodes[i];
    const double wpsi = g->weights[i] * 0.75 * kPi * (1.0 - s * s);
    for (int j = 0; j < n_theta; ++j) {
      rule.weights.push_back(wpsi * 2.0 * kPi / n_theta);
      rule.directions.push_back(polar_point(1.0, rule.psi[i], rule.theta[j]));
    }
  }
  return cache.emplace(key, std::move(rule)).first->second;
}

namespace {

Point scale_direction(const Point& dir, double rho) {
  return {rho * dir.x, rho * dir.y, rho * rho * dir.t};
}

[[noreturn]] void throw_nonfinite(const Point& p, int component) {
  std::ostringstream os;
  os.precision(17);
  os << "integrand is not finite at sample point " << p;
  if (component > 0) os << " (component " << component << ")";
  throw NumericalError(os.str());
}

struct Welford {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

using MultiFn = std::function<void(const Point&, double*)>;

std::vector<IntegralResult> ball_monte_carlo(const MultiFn& f, int count, const Ball& ball,
                                             const QuadratureScheme& scheme) {
  const double r = ball.radius();
  const double r2 = r * r;
  Rng rng(scheme.seed);
  std::vector<Welford> acc(count);
  std::vector<double> buf(count);
  std::int64_t draws = 0;
  while (acc[0].n < scheme.sample_budget) {
    const Point z{rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r2, r2)};
    ++draws;
    if (koranyi_gauge(z) >= r) continue;
    const Point y = group_mul(ball.center(), z);
    f(y, buf.data());
    for (int k = 0; k < count; ++k) {
      if (!std::isfinite(buf[k])) throw_nonfinite(y, k);
      acc[k].add(buf[k]);
    }
  }
  const double vol = ball.volume();
  std::vector<IntegralResult> out(count);
  for (int k = 0; k < count; ++k) {
    const auto n = static_cast<double>(acc[k].n);
    out[k] = {vol * acc[k].mean, vol * std::sqrt(acc[k].variance() / n), acc[k].n,
              static_cast<double>(acc[k].n) / static_cast<double>(draws)};
  }
  return out;
}

std::vector<IntegralResult> ball_stratified(const MultiFn& f, int count, const Ball& ball,
                                            const QuadratureScheme& scheme) {
  const int k = std::max(1, static_cast<int>(std::cbrt(scheme.sample_budget / 2.0)));
  const double r = ball.radius();
  Rng rng(scheme.seed);
  std::vector<double> sum(count, 0.0), var(count, 0.0);
  std::vector<double> a(count), b(count);
  auto draw = [&](int i, int j, int l, double* out) {
    const double u = (i + rng.uniform()) / k;
    const double psi = -0.5 * kPi + kPi * (j + rng.uniform()) / k;
    const double theta = 2.0 * kPi * (l + rng.uniform()) / k;
    const Point y = group_mul(ball.center(), polar_point(r * std::sqrt(std::sqrt(u)), psi, theta));
    f(y, out);
    for (int c = 0; c < count; ++c)
      if (!std::isfinite(out[c])) throw_nonfinite(y, c);
  };
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int l = 0; l < k; ++l) {
        draw(i, j, l, a.data());
        draw(i, j, l, b.data());
        for (int c = 0; c < count; ++c) {
          sum[c] += 0.5 * (a[c] + b[c]);
          var[c] += 0.25 * (a[c] - b[c]) * (a[c] - b[c]);
        }
      }
  const double strata = static_cast<double>(k) * k * k;
  const double vol = ball.volume();
  std::vector<IntegralResult> out(count);
  for (int c = 0; c < count; ++c) {
    out[c] = {vol * sum[c] / strata, vol * std::sqrt(var[c]) / strata,
              static_cast<std::int64_t>(2 * strata), 1.0};
  }
  return out;
}

std::vector<IntegralResult> ball_tensor(const MultiFn& f, int count, const Ball& ball,
                                        const QuadratureScheme& scheme) {
  const int n = std::max(4, static_cast<int>(std::lround(std::cbrt(
                                static_cast<double>(scheme.sample_budget)))));
  const GaussRule& g = gauss_legendre(n);
  const SphereRule& s = sphere_rule(n, n);
  const double r = ball.radius();
  std::vector<double> sum(count, 0.0), buf(count);
  for (int i = 0; i < n; ++i) {
    const double rho = 0.5 * r * (1.0 + g.nodes[i]);
    const double wr = 0.5 * r * g.weights[i] * rho * rho * rho;
    for (std::size_t d = 0; d < s.weights.size(); ++d) {
      const Point y = group_mul(ball.center(), scale_direction(s.directions[d], rho));
      f(y, buf.data());
      for (int c = 0; c < count; ++c) {
        if (!std::isfinite(buf[c])) throw_nonfinite(y, c);
        sum[c] += wr * s.weights[d] * buf[c];
      }
    }
  }
  std::vector<IntegralResult> out(count);
  const auto used = static_cast<std::int64_t>(n) * n * n;
  for (int c = 0; c < count; ++c) out[c] = {sum[c], 0.0, used, 1.0};
  return out;
}

}  // namespace

std::vector<IntegralResult> integrate_ball_multi(const MultiFn& f, int count, const Ball& ball,
                                                 const QuadratureScheme& scheme) {
  scheme.validate();
  switch (scheme.kind) {
    case SchemeKind::monte_carlo:
      return ball_monte_carlo(f, count, ball, scheme);
    case SchemeKind::stratified_mc:
      return ball_stratified(f, count, ball, scheme);
    case SchemeKind::tensor_grid:
      return ball_tensor(f, count, ball, scheme);
  }
  return {};
}

IntegralResult integrate_ball(const PointFunction& f, const Ball& ball,
                              const QuadratureScheme& scheme) {
  return integrate_ball_multi([&f](const Point& p, double* out) { out[0] = f(p); }, 1, ball,
                              scheme)[0];
}

double integrate_radial(const std::function<double(double)>& g, double r_max) {
  if (!(r_max > 0.0)) throw DomainError("integrate_radial: r_max must be positive");
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(
      [&g](double rho) { return g(rho) * rho * rho * rho; }, 0.0, r_max, 15, 1e-13, &err);
  if (!std::isfinite(v) || !std::isfinite(err) || err > 1e-6 * std::abs(v) + 1e-12) {
    throw NumericalError("integrate_radial: integral does not converge");
  }
  return 2.0 * kPi * kPi * v;
}

namespace detail {

namespace {
// Outside the support the kernel is integrated about the bump center instead
// of about x.
constexpr double kCenteredSwitch = 1.0;

// int_0^delta log(1/rho) rho^3 drho
double log_core_moment(double delta) {
  const double d4 = delta * delta * delta * delta;
  return d4 / 16.0 - d4 * std::log(delta) / 4.0;
}
}  // namespace

double bump_log_moment(const Bump& bump, const Point& x, int n_angular,
                       const std::function<bool(const Point&)>* inside, double core_fraction) {
  const double w = bump.width;
  const double dist = koranyi_dist(x, bump.center);
  const double hi = dist + w;
  const GaussRule& g = gauss_legendre(8);
  const SphereRule& fine = sphere_rule(n_angular, 2 * n_angular);
  const SphereRule& coarse = sphere_rule(8, 12);

  // One radial panel [a, b] with the given sphere rule.
  auto panel = [&](double a, double b, const SphereRule& s) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const double rho = a + 0.5 * (b - a) * (1.0 + g.nodes[i]);
      const double wr = 0.5 * (b - a) * g.weights[i] * rho * rho * rho * -std::log(rho);
      double shell = 0.0;
      for (std::size_t d = 0; d < s.weights.size(); ++d) {
        const Point y = group_mul(x, scale_direction(s.directions[d], rho));
        if (inside && !(*inside)(y)) continue;
        shell += s.weights[d] * bump.density(y);
      }
      total += wr * shell;
    }
    return total;
  };

  double total = 0.0;
  if (dist > kCenteredSwitch * w) {
    // x outside the support: integrate in polar coordinates about the
    // bump center, where the kernel is smooth and the profile depends on the
    // radius only.
    const GaussRule& gr = gauss_legendre(12);
    for (int half = 0; half < 2; ++half) {
      const double a = 0.5 * w * half, b = a + 0.5 * w;
      for (std::size_t i = 0; i < gr.nodes.size(); ++i) {
        const double rho = a + 0.5 * (b - a) * (1.0 + gr.nodes[i]);
        const double dens = bump.density(group_mul(bump.center, scale_direction(fine.directions[0], rho)));
        if (dens == 0.0) continue;
        const double wr = 0.5 * (b - a) * gr.weights[i] * rho * rho * rho * dens;
        double shell = 0.0;
        for (std::size_t d = 0; d < fine.weights.size(); ++d) {
          const Point y = group_mul(bump.center, scale_direction(fine.directions[d], rho));
          if (inside && !(*inside)(y)) continue;
          shell -= fine.weights[d] * std::log(koranyi_dist(x, y));
        }
        total += wr * shell;
      }
    }
    return total;
  }
  // x inside the support: dyadic annuli down to the core.
  const double core = core_fraction * hi;
  const int levels = static_cast<int>(std::ceil(std::log2(hi / core)));
  double outer = hi;
  for (int j = 0; j < levels; ++j) {
    const double inner = std::max(0.5 * outer, core);
    const bool smooth = inside == nullptr && outer <= w - dist;
    total += panel(inner, outer, smooth ? coarse : fine);
    outer = inner;
    if (inner <= core) break;
  }
  const bool core_in = inside == nullptr || (*inside)(x);
  if (core_in) total += bump.density(x) * 2.0 * kPi * kPi * log_core_moment(outer);
  return total;
}

Point sample_bump(const Bump& bump, Rng& rng) {
  for (;;) {
    const double u = rng.uniform();
    const double rho = std::sqrt(std::sqrt(u));
    const double psi = rng.uniform(-0.5 * kPi, 0.5 * kPi);
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    if (rng.uniform() < profile_value(bump.profile, rho)) {
      return group_mul(bump.center, dilate(bump.width, polar_point(rho, psi, theta)));
    }
  }
}

}  // namespace detail

namespace {

IntegralResult log_kernel_impl(const Density& f, const Point& x,
                               const std::function<bool(const Point&)>* inside,
                               const QuadratureScheme& scheme) {
  scheme.validate();
  IntegralResult out;
  for (const auto& a : f.atoms) {
    if (inside && !(*inside)(a.location)) continue;
    const double d = koranyi_dist(x, a.location);
    if (d == 0.0) {
      std::ostringstream os;
      os << "log kernel is singular: atom located at evaluation point " << x;
      throw NumericalError(os.str());
    }
    out.value += a.mass * -std::log(d);
  }
  if (f.bumps.empty()) return out;

  if (scheme.deterministic()) {
    const int n_ang = std::clamp(static_cast<int>(std::lround(std::cbrt(
                                     static_cast<double>(scheme.sample_budget)))),
                                 12, 48);
    for (const auto& b : f.bumps) {
      out.value += detail::bump_log_moment(b, x, n_ang, inside);
    }
    out.samples_used = static_cast<std::int64_t>(f.bumps.size()) * n_ang * n_ang * 2;
    return out;
  }

  const std::int64_t per_bump =
      std::max<std::int64_t>(100, scheme.sample_budget / static_cast<std::int64_t>(f.bumps.size()));
  double var = 0.0;
  for (std::size_t bi = 0; bi < f.bumps.size(); ++bi) {
    const auto& b = f.bumps[bi];
    Rng rng(mix_seed(scheme.seed, bi));
    Welford acc;
    for (std::int64_t s = 0; s < per_bump; ++s) {
      const Point y = detail::sample_bump(b, rng);
      double v = 0.0;
      if (!inside || (*inside)(y)) {
        const double d = koranyi_dist(x, y);
        v = d > 0.0 ? -std::log(d) : 0.0;
      }
      acc.add(v);
    }
    out.value += b.mass * acc.mean;
    var += b.mass * b.mass * acc.variance() / static_cast<double>(acc.n);
    out.samples_used += acc.n;
  }
  out.std_error = std::sqrt(var);
  return out;
}

}  // namespace

IntegralResult integrate_log_kernel(const Density& f, const Point& x,
                                    const QuadratureScheme& scheme) {
  return log_kernel_impl(f, x, nullptr, scheme);
}

IntegralResult integrate_log_kernel_restricted(const Density& f, const Point& x,
                                               const std::function<bool(const Point&)>& inside,
                                               const QuadratureScheme& scheme) {
  return log_kernel_impl(f, x, &inside, scheme);
}

}  // namespace heislab
