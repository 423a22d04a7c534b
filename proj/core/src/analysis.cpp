#include "heislab/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "heislab/error.hpp"
#include "heislab/parallel.hpp"
#include "heislab/random.hpp"

namespace heislab {

namespace {

Point random_direction(Rng& rng) {
  return polar_point(1.0, rng.uniform(-0.5 * kPi, 0.5 * kPi), rng.uniform(0.0, 2.0 * kPi));
}

Point random_in_ball(const Point& c, double radius, Rng& rng) {
  const double rho = radius * std::sqrt(std::sqrt(rng.uniform()));
  return group_mul(c, dilate(rho, random_direction(rng)));
}

double clamp_exp(double e, bool* hit) {
  if (std::abs(e) > kLogClamp) {
    if (hit) *hit = true;
    e = std::copysign(kLogClamp, e);
  }
  return std::exp(e);
}

}  // namespace

void PairSpec::validate() const {
  if (count < 1) throw DomainError("pairs '" + id + "': count must be >= 1");
  if (!(region_radius > 0.0)) throw DomainError("pairs '" + id + "': region_radius must be positive");
  if (!(sep_min > 0.0) || !(sep_max >= sep_min) || !std::isfinite(sep_max)) {
    throw DomainError("pairs '" + id + "': need 0 < sep_min <= sep_max");
  }
}

std::vector<std::pair<Point, Point>> make_pairs(const PairSpec& spec) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, 0x7061));
  std::vector<std::pair<Point, Point>> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    const Point p = random_in_ball(spec.region_center, spec.region_radius, rng);
    const double s = spec.sep_max == spec.sep_min
                         ? spec.sep_min
                         : spec.sep_min * std::pow(spec.sep_max / spec.sep_min, rng.uniform());
    out.emplace_back(p, group_mul(p, dilate(s, random_direction(rng))));
  }
  return out;
}

ComparabilityReport strong_ainfty_scan(const WeightField& w,
                                       const std::vector<std::pair<Point, Point>>& pairs,
                                       const ScanOptions& opt) {
  ComparabilityReport rep;
  const Density& src = w.potential().source();
  rep.alpha = src.positive_mass();
  rep.beta = src.negative_mass();
  rep.c1_prime = src.c1_prime;
  rep.pair_seed = opt.scheme.seed;
  rep.optimizer_seed = opt.optimizer.seed;
  rep.pairs.resize(pairs.size());
  const int workers = opt.workers <= 0 ? default_workers() : opt.workers;
  parallel_for(pairs.size(), workers, [&](std::size_t i) {
    PairSample& s = rep.pairs[i];
    s.p = pairs[i].first;
    s.q = pairs[i].second;
    try {
      const Normalized n = normalize_to_unit_separation(w.potential(), s.p, s.q);
      const WeightField wn(n.field, w.exponent());
      s.lambda = n.lambda;
      const IntegralResult dl = delta_omega(n.x, n.y, wn, opt.scheme.with_seed(mix_seed(opt.scheme.seed, i)));
      s.delta = dl.value;
      s.delta_se = dl.std_error;
      PathOptimizerConfig cfg = opt.optimizer;
      cfg.seed = mix_seed(opt.optimizer.seed, i);
      if (workers > 1) cfg.workers = 1;
      const PathResult pr = d_omega(n.x, n.y, wn, cfg);
      s.d = pr.length;
      s.endpoint_miss = pr.endpoint_miss;
      s.outside_fraction = pr.outside_fraction;
      s.ok = s.delta > 0.0 && s.d > 0.0 && std::isfinite(s.delta) && std::isfinite(s.d);
      if (!s.ok) s.failure = "non-positive or non-finite quasidistance";
    } catch (const OptimizationError& e) {
      s.ok = false;
      s.failure = e.what();
    } catch (const NumericalError& e) {
      s.ok = false;
      s.failure = e.what();
    }
  });
  rep.min_delta_over_d = std::numeric_limits<double>::infinity();
  for (const auto& s : rep.pairs) {
    if (!s.ok) {
      ++rep.failures;
      continue;
    }
    rep.sup_delta_over_d = std::max(rep.sup_delta_over_d, s.delta / s.d);
    rep.sup_d_over_delta = std::max(rep.sup_d_over_delta, s.d / s.delta);
    rep.min_delta_over_d = std::min(rep.min_delta_over_d, s.delta / s.d);
  }
  if (rep.failures == static_cast<int>(rep.pairs.size())) rep.min_delta_over_d = 0.0;
  return rep;
}

double SingularSet::total_diameter() const {
  double s = 0.0;
  for (const auto& b : balls) s += 2.0 * b.radius();
  return s;
}

bool SingularSet::contains(const Point& p) const {
  return std::any_of(balls.begin(), balls.end(), [&](const Ball& b) { return b.contains(p); });
}

double abs_mass_in_ball(const Density& mu, const Ball& b, const std::optional<Ball>& region,
                        std::int64_t budget) {
  double m = 0.0;
  for (const auto& a : mu.atoms) {
    if (b.contains(a.location) && (!region || region->contains(a.location))) m += std::abs(a.mass);
  }
  const QuadratureScheme sc{SchemeKind::tensor_grid, std::max<std::int64_t>(budget, 100), 1, 0.01};
  for (const auto& bump : mu.bumps) {
    const double w = bump.width;
    const double d = koranyi_dist(b.center(), bump.center);
    if (d >= b.radius() + w) continue;
    double dr = 0.0;
    if (region) {
      dr = koranyi_dist(region->center(), bump.center);
      if (dr >= region->radius() + w) continue;
    }
    const bool region_full = !region || dr + w <= region->radius();
    if (d + w <= b.radius() && region_full) {
      m += std::abs(bump.mass);
      continue;
    }
    // Integrate over the smaller of the two balls.
    const bool over_support = w <= b.radius();
    const Ball dom = over_support ? Ball(bump.center, w) : b;
    const auto res = integrate_ball(
        [&](const Point& y) {
          if (over_support ? !b.contains(y) : false) return 0.0;
          if (!region_full && !region->contains(y)) return 0.0;
          return std::abs(bump.density(y));
        },
        dom, sc);
    m += res.value;
  }
  return m;
}

namespace {

double abs_mass_in_region(const Density& mu, const std::optional<Ball>& region, std::int64_t budget) {
  if (!region) return mu.total_variation();
  return abs_mass_in_ball(mu, *region, std::nullopt, budget);
}

struct Source {
  Point center;
  double patch;  // candidate patch radius
};

struct Candidate {
  Point x;
  double r = 0.0;        // largest violating tested radius, 0 if none
  int violating_radii = 0;
  double ratio = 0.0;    // max mass / (r beta / eps) over tested radii
};

bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.r != b.r) return a.r > b.r;
  if (a.violating_radii != b.violating_radii) return a.violating_radii > b.violating_radii;
  if (a.ratio != b.ratio) return a.ratio > b.ratio;
  if (a.x.x != b.x.x) return a.x.x < b.x.x;
  if (a.x.y != b.x.y) return a.x.y < b.x.y;
  return a.x.t < b.x.t;
}

}  // namespace

SingularSet cartan_singular_set(const Density& mu, const std::optional<Ball>& region, double epsilon,
                                const CartanOptions& opt, std::optional<double> beta_in) {
  if (!(epsilon > 0.0) || epsilon > 0.05 + 1e-15) {
    throw DomainError("cartan_singular_set: epsilon must lie in (0, 1/20]");
  }
  if (!(opt.pitch > 0.0) || opt.dyadic_levels < 1) throw DomainError("cartan_singular_set: bad options");
  mu.validate();
  SingularSet out;
  out.epsilon = epsilon;
  const double beta = beta_in ? *beta_in : abs_mass_in_region(mu, region, opt.mass_budget);
  out.beta = beta;
  if (!(beta > 0.0)) return out;

  // Sources able to produce a violation on their own share of the bound.
  const double k_sources = static_cast<double>(mu.bumps.size() + mu.atoms.size());
  const double share = beta / (epsilon * k_sources);
  std::vector<Source> sources;
  for (const auto& a : mu.atoms) {
    if (a.mass == 0.0 || (region && !region->contains(a.location))) continue;
    sources.push_back({a.location, epsilon});
  }
  double max_peak = 0.0;
  for (const auto& b : mu.bumps) {
    if (b.mass == 0.0) continue;
    if (region && koranyi_dist(region->center(), b.center) >= region->radius() + b.width) continue;
    const double peak = std::abs(b.peak_density());
    max_peak += peak;
    const double m = std::abs(b.mass);
    const double r_star = std::sqrt(std::sqrt(2.0 * m / (peak * kPi * kPi)));
    const double g_max = r_star < epsilon ? m / r_star : peak * 0.5 * kPi * kPi * epsilon * epsilon * epsilon;
    if (g_max > share) sources.push_back({b.center, b.width + epsilon});
  }

  std::vector<double> radii;
  for (int j = 0; j < opt.dyadic_levels; ++j) radii.push_back(epsilon * std::ldexp(1.0, -j));
  const double atom_total = std::accumulate(mu.atoms.begin(), mu.atoms.end(), 0.0,
                                            [](double s, const Atom& a) { return s + std::abs(a.mass); });

  // Candidate lattice.
  std::vector<Point> pts;
  const double step = opt.pitch * epsilon;
  for (const auto& s : sources) {
    const int k = static_cast<int>(std::ceil(s.patch / step));
    const std::int64_t per = (2LL * k + 1) * (2LL * k + 1) * (2LL * k + 1);
    if (static_cast<std::int64_t>(pts.size()) + per > opt.max_candidates * 2) {
      throw NumericalError("cartan_singular_set: candidate lattice exceeds max_candidates");
    }
    for (int i = -k; i <= k; ++i) {
      for (int j = -k; j <= k; ++j) {
        for (int l = -k; l <= k; ++l) {
          const Point off{s.patch * i / k, s.patch * j / k, s.patch * s.patch * l / k};
          if (koranyi_gauge(off) > s.patch) continue;
          const Point x = group_mul(s.center, off);
          if (region && !region->contains(x)) continue;
          pts.push_back(x);
        }
      }
    }
  }
  if (static_cast<std::int64_t>(pts.size()) > opt.max_candidates) {
    throw NumericalError("cartan_singular_set: candidate lattice exceeds max_candidates");
  }
  out.candidates = static_cast<std::int64_t>(pts.size());

  std::vector<Candidate> cand(pts.size());
  parallel_for(pts.size(), opt.workers, [&](std::size_t i) {
    Candidate& c = cand[i];
    c.x = pts[i];
    for (double r : radii) {
      const double bound = r * beta / epsilon;
      // Cheap upper bound: all atoms plus peak density times the ball volume.
      if (atom_total + max_peak * kUnitBallVolume * r * r * r * r <= bound) continue;
      const double m = abs_mass_in_ball(mu, Ball(c.x, r), region, opt.mass_budget);
      const double ratio = m / bound;
      c.ratio = std::max(c.ratio, ratio);
      if (ratio > 1.0) {
        if (c.r == 0.0) c.r = r;
        ++c.violating_radii;
      }
    }
  });

  std::vector<Candidate> bad;
  for (const auto& c : cand) {
    if (c.r > 0.0) {
      bad.push_back(c);
    } else {
      out.max_outside_ratio = std::max(out.max_outside_ratio, c.ratio);
    }
  }
  out.violating = static_cast<std::int64_t>(bad.size());
  std::sort(bad.begin(), bad.end(), candidate_before);

  struct Sel {
    Point c;
    double r;
    double emit;
  };
  std::vector<Sel> sel;
  for (const auto& c : bad) {
    bool placed = false;
    for (auto& s : sel) {
      const double d = koranyi_dist(c.x, s.c);
      if (d < c.r + s.r) {
        // Intersects a selected ball of radius >= c.r, so d < 2 s.r.
        if (!(d < s.emit)) s.emit = std::max(s.emit, d * (1.0 + opt.pad) + opt.pad * s.r);
        placed = true;
        break;
      }
    }
    if (!placed) sel.push_back({c.x, c.r, c.r});
  }
  for (const auto& s : sel) out.balls.emplace_back(s.c, s.emit);
  if (!(out.total_diameter() < 10.0 * epsilon)) {
    std::ostringstream os;
    os << "cartan_singular_set: cover diameter " << out.total_diameter() << " exceeds 10 eps = "
       << 10.0 * epsilon << "; selected balls (center, radius):";
    for (const auto& s : sel) os << " (" << s.c << ", " << s.r << ")";
    throw NumericalError(os.str());
  }
  return out;
}

double c0_series(double c1_prime) {
  if (!(c1_prime > 0.0)) throw DomainError("c0_series: c1' must be positive");
  const double l2 = std::log(2.0), l10 = std::log(10.0);
  double sum = 0.0;
  for (int j = -1;; ++j) {
    const double term = (std::max(std::abs(j), std::abs(j + 1)) * l2 + l10) * std::ldexp(1.0, -j);
    sum += term;
    if (term < 1e-17) break;
  }
  return 10.0 * sum / c1_prime;
}

double c0_closed_form(double c1_prime) {
  return 10.0 * (6.0 * std::log(2.0) + 4.0 * std::log(10.0)) / c1_prime;
}

std::vector<Point> sample_nonsingular_probes(const Ball& b10, const SingularSet& e, int count,
                                             std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x7072));
  std::vector<Point> out;
  std::int64_t tries = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++tries > 1000LL * std::max(count, 1)) {
      throw NumericalError("sample_nonsingular_probes: cover leaves no room in the ball");
    }
    const Point x = random_in_ball(b10.center(), b10.radius(), rng);
    if (!b10.contains(x) || e.contains(x)) continue;
    out.push_back(x);
  }
  return out;
}

BoundReport u_hat1_bound_check(const PotentialField& u, const Ball& b10, const SingularSet& e,
                               double epsilon, const std::vector<Point>& probes, int workers) {
  BoundReport rep;
  rep.c0 = c0_closed_form(u.c1_prime());
  const double beta = e.beta > 0.0 ? e.beta : u.source().total_variation();
  rep.bound = rep.c0 * beta / epsilon;
  rep.probes.resize(probes.size());
  for (const auto& x : probes) {
    if (!b10.contains(x)) throw DomainError("u_hat1_bound_check: probe outside 10B");
    if (e.contains(x)) throw DomainError("u_hat1_bound_check: probe inside the singular cover");
  }
  parallel_for(probes.size(), workers, [&](std::size_t i) {
    BoundProbe& p = rep.probes[i];
    p.x = probes[i];
    PotentialField ui = u.with_scheme(u.scheme().with_seed(mix_seed(u.scheme().seed, i)));
    const IntegralResult r = eval_u_hat1(ui, b10, p.x);
    p.u_hat1 = r.value;
    p.std_error = r.std_error;
    p.ok = std::abs(r.value) <= rep.bound + 3.0 * r.std_error;
  });
  for (const auto& p : rep.probes) {
    rep.max_abs = std::max(rep.max_abs, std::abs(p.u_hat1));
    if (!p.ok) ++rep.violations;
  }
  rep.max_ratio = rep.bound > 0.0 ? rep.max_abs / rep.bound : 0.0;
  return rep;
}

std::vector<std::pair<double, double>> line_ball_intervals(const Point& a, double theta, double len,
                                                           const Ball& b) {
  std::vector<std::pair<double, double>> out;
  if (!(len > 0.0)) return out;
  const double ux = std::cos(theta), uy = std::sin(theta);
  const Point ci = inverse(b.center());
  auto rel = [&](double s) { return group_mul(ci, group_mul(a, Point{s * ux, s * uy, 0.0})); };
  const Point z0 = rel(0.0), z1 = rel(1.0);
  // z(s) = z0 + s (z1 - z0) coordinatewise; gauge^4 - R^4 is a quartic in s.
  const double X0 = z0.x, Y0 = z0.y, T0 = z0.t;
  const double dx = z1.x - z0.x, dy = z1.y - z0.y, dt = z1.t - z0.t;
  const double A = X0 * X0 + Y0 * Y0, B = 2.0 * (X0 * dx + Y0 * dy), C = dx * dx + dy * dy;
  const double R4 = std::pow(b.radius(), 4);
  // Coefficients of s^0 .. s^4.
  const std::array<double, 5> k{A * A + T0 * T0 - R4, 2.0 * A * B + 2.0 * T0 * dt,
                                B * B + 2.0 * A * C + dt * dt, 2.0 * B * C, C * C};
  auto f = [&](double s) { return (((k[4] * s + k[3]) * s + k[2]) * s + k[1]) * s + k[0]; };
  std::vector<double> cuts{0.0, len};
  Eigen::Matrix4d comp = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 3; ++i) comp(i + 1, i) = 1.0;
  for (int i = 0; i < 4; ++i) comp(i, 3) = -k[static_cast<std::size_t>(i)] / k[4];
  const Eigen::EigenSolver<Eigen::Matrix4d> es(comp, false);
  for (int i = 0; i < 4; ++i) {
    const auto ev = es.eigenvalues()[i];
    if (std::abs(ev.imag()) > 1e-9 * (1.0 + std::abs(ev.real()))) continue;
    double s = ev.real();
    // One Newton polish step on the quartic.
    const double fp = ((4.0 * k[4] * s + 3.0 * k[3]) * s + 2.0 * k[2]) * s + k[1];
    if (fp != 0.0) s -= f(s) / fp;
    if (s > 0.0 && s < len) cuts.push_back(s);
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    if (!(hi > lo)) continue;
    if (f(0.5 * (lo + hi)) < 0.0) {
      if (!out.empty() && out.back().second >= lo) {
        out.back().second = hi;
      } else {
        out.emplace_back(lo, hi);
      }
    }
  }
  return out;
}

namespace {

double union_measure(std::vector<std::pair<double, double>> iv) {
  std::sort(iv.begin(), iv.end());
  double total = 0.0, cur_lo = 0.0, cur_hi = -std::numeric_limits<double>::infinity();
  for (const auto& [lo, hi] : iv) {
    if (lo > cur_hi) {
      if (cur_hi > cur_lo) total += cur_hi - cur_lo;
      cur_lo = lo;
      cur_hi = hi;
    } else {
      cur_hi = std::max(cur_hi, hi);
    }
  }
  if (cur_hi > cur_lo) total += cur_hi - cur_lo;
  return total;
}

}  // namespace

ProjectionReport projection_length(const HorizontalPath& path, const SingularSet& e) {
  ProjectionReport rep;
  const auto pts = reconstruct(path);
  if (path.controls.empty()) return rep;
  const double h = 1.0 / path.segments();
  // Motion taking the start to the identity and the endpoint's planar
  // direction to the positive x axis; projection = first coordinate.
  const Point end = group_mul(inverse(pts.front()), pts.back());
  const double rot = -std::atan2(end.y, end.x);
  const double cr = std::cos(rot), sr = std::sin(rot);
  const double chord = std::hypot(end.x, end.y);
  auto proj = [&](const Point& p) {
    const Point z = group_mul(inverse(pts.front()), p);
    return cr * z.x - sr * z.y;
  };
  std::vector<std::pair<double, double>> projected;
  for (std::size_t i = 0; i < path.controls.size(); ++i) {
    const auto& v = path.controls[i];
    const double len = v.norm() * h;
    if (len == 0.0) continue;
    const double th = std::atan2(v.b, v.a);
    rep.length += len;
    std::vector<std::pair<double, double>> inside;
    for (const auto& b : e.balls) {
      const auto iv = line_ball_intervals(pts[i], th, len, b);
      inside.insert(inside.end(), iv.begin(), iv.end());
    }
    std::sort(inside.begin(), inside.end());
    // Complement within [0, len].
    std::vector<std::pair<double, double>> outside;
    double cursor = 0.0;
    for (const auto& [lo, hi] : inside) {
      if (lo > cursor) outside.emplace_back(cursor, lo);
      cursor = std::max(cursor, hi);
    }
    if (cursor < len) outside.emplace_back(cursor, len);
    const double pa = proj(pts[i]), pb = proj(pts[i + 1]);
    for (const auto& [lo, hi] : outside) {
      rep.outside_length += hi - lo;
      const double a = pa + (pb - pa) * lo / len, b = pa + (pb - pa) * hi / len;
      const double l2 = std::clamp(std::min(a, b), 0.0, chord), h2 = std::clamp(std::max(a, b), 0.0, chord);
      if (h2 > l2) projected.emplace_back(l2, h2);
    }
  }
  rep.projected_outside = union_measure(std::move(projected));
  return rep;
}

HorizontalPath straight_segment(const Point& p, double theta, double length, int segments) {
  if (segments < 1) throw DomainError("straight_segment: segments must be >= 1");
  HorizontalPath path;
  path.start = p;
  path.controls.assign(static_cast<std::size_t>(segments),
                       {length * std::cos(theta), length * std::sin(theta)});
  return path;
}

BalanceReport balance_check(const WeightField& mu, const WeightField& nu, const BallFamily& f,
                            double p, double q, const EstimatorOptions& opt) {
  if (f.pairs.empty()) throw DomainError("balance_check: family has no nested pairs");
  if (!(p >= 1.0) || !(q > p) || !std::isfinite(q)) throw DomainError("balance_check: need 1 <= p < q");
  opt.scheme.validate();
  BalanceReport rep;
  rep.ratios.resize(f.pairs.size());
  std::vector<char> hits(f.pairs.size(), 0);
  parallel_for(f.pairs.size(), opt.workers, [&](std::size_t i) {
    const auto& [I, J] = f.pairs[i];
    const QuadratureScheme s = opt.scheme.with_seed(mix_seed(opt.scheme.seed, i));
    bool hit = false;
    const double muI = detail::weight_power_averages(mu, I, {1.0}, s, &hit)[0].value * I.volume();
    const double muJ = detail::weight_power_averages(mu, J, {1.0}, s.with_seed(mix_seed(s.seed, 1)), &hit)[0].value * J.volume();
    const double nuI = detail::weight_power_averages(nu, I, {1.0}, s.with_seed(mix_seed(s.seed, 2)), &hit)[0].value * I.volume();
    const double nuJ = detail::weight_power_averages(nu, J, {1.0}, s.with_seed(mix_seed(s.seed, 3)), &hit)[0].value * J.volume();
    rep.ratios[i] = (I.radius() / J.radius()) * std::pow(muI / muJ, 1.0 / q) / std::pow(nuI / nuJ, 1.0 / p);
    hits[i] = hit ? 1 : 0;
  });
  rep.max_ratio = -std::numeric_limits<double>::infinity();
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.ratios.size(); ++i) {
    if (rep.ratios[i] > rep.max_ratio) {
      rep.max_ratio = rep.ratios[i];
      rep.argmax = i;
    }
    rep.min_ratio = std::min(rep.min_ratio, rep.ratios[i]);
    rep.clamped = rep.clamped || hits[i];
  }
  return rep;
}

double sobolev_exponent(double p) {
  if (!(p >= 1.0) || !(p < 4.0)) {
    throw DomainError("Sobolev exponent q = 4p/(4-p) requires 1 <= p < 4");
  }
  return 4.0 * p / (4.0 - p);
}

HorizontalVector horizontal_gradient_fd(const std::function<double(const Point&)>& f, const Point& p,
                                        double h) {
  const double x1 = (f(group_mul(p, {h, 0.0, 0.0})) - f(group_mul(p, {-h, 0.0, 0.0}))) / (2.0 * h);
  const double x2 = (f(group_mul(p, {0.0, h, 0.0})) - f(group_mul(p, {0.0, -h, 0.0}))) / (2.0 * h);
  return {x1, x2};
}

TestFunction builtin_test_function(const std::string& name) {
  if (name == "x") return {name, [](const Point& p) { return p.x; }, [](const Point&) { return HorizontalVector{1.0, 0.0}; }};
  if (name == "y") return {name, [](const Point& p) { return p.y; }, [](const Point&) { return HorizontalVector{0.0, 1.0}; }};
  if (name == "t") {
    return {name, [](const Point& p) { return p.t; },
            [](const Point& p) { return HorizontalVector{2.0 * p.y, -2.0 * p.x}; }};
  }
  if (name == "gauge") return {name, [](const Point& p) { return koranyi_gauge(p); }, {}};
  if (name == "wave") {
    return {name, [](const Point& p) { return std::sin(p.x + p.y) + std::cos(p.t); },
            [](const Point& p) {
              const double c = std::cos(p.x + p.y), s = std::sin(p.t);
              return HorizontalVector{c - 2.0 * p.y * s, c + 2.0 * p.x * s};
            }};
  }
  if (name == "const") return {name, [](const Point&) { return 1.0; }, [](const Point&) { return HorizontalVector{}; }};
  throw DomainError("unknown test function '" + name + "'");
}

SobolevResult sobolev_poincare_ratio(const TestFunction& tf, const Ball& b, const PotentialField& u,
                                     double p, const QuadratureScheme& scheme) {
  SobolevResult res;
  const double q = sobolev_exponent(p);
  res.q = q;
  if (!tf.f) throw DomainError("sobolev_poincare_ratio: empty test function");
  const double r = b.radius();
  const double h = 1e-4 * r;
  const bool flat = u.source().empty();
  auto uval = [&](const Point& x) { return flat ? 0.0 : u.value(x); };
  // First pass: mu(B) and the mu-mean of f.
  const auto first = integrate_ball_multi(
      [&](const Point& x, double* out) {
        const double m = clamp_exp(4.0 * uval(x), nullptr);
        out[0] = m;
        out[1] = tf.f(x) * m;
      },
      2, b, scheme);
  res.mean = first[1].value / first[0].value;
  const double fb = res.mean;
  const auto second = integrate_ball_multi(
      [&](const Point& x, double* out) {
        const double ux = uval(x);
        const double m = clamp_exp(4.0 * ux, nullptr);
        const double n = clamp_exp((4.0 - p) * ux, nullptr);
        const HorizontalVector g = tf.grad_b ? tf.grad_b(x) : horizontal_gradient_fd(tf.f, x, h);
        out[0] = std::pow(std::abs(tf.f(x) - fb), q) * m;
        out[1] = m;
        out[2] = std::pow(g.norm(), p) * n;
        out[3] = n;
      },
      4, b, scheme);
  res.lhs = std::pow(second[0].value / second[1].value, 1.0 / q);
  res.rhs_without_c = std::pow(second[2].value / second[3].value, 1.0 / p);
  if (res.lhs == 0.0 || !(res.rhs_without_c > 0.0)) {
    res.ratio = res.lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    res.ratio = res.lhs / (r * res.rhs_without_c);
  }
  return res;
}

PowerMeanProbe stromberg_wheeden_probe(const WeightField& w, double s, const BallFamily& f,
                                       const EstimatorOptions& opt) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("stromberg_wheeden_probe: s must lie in (0, 1)");
  if (f.balls.empty()) throw DomainError("stromberg_wheeden_probe: empty family");
  opt.scheme.validate();
  std::vector<double> fwd(f.balls.size()), bwd(f.balls.size());
  std::vector<char> hits(f.balls.size(), 0);
  parallel_for(f.balls.size(), opt.workers, [&](std::size_t i) {
    bool hit = false;
    const auto a = detail::weight_power_averages(
        w, f.balls[i], {1.0, s}, opt.scheme.with_seed(mix_seed(opt.scheme.seed, i)), &hit);
    const double m1 = a[0].value, ms = std::pow(a[1].value, 1.0 / s);
    fwd[i] = ms / m1;
    bwd[i] = m1 / ms;
    hits[i] = hit ? 1 : 0;
  });
  PowerMeanProbe out;
  out.forward_max = *std::max_element(fwd.begin(), fwd.end());
  out.backward_max = *std::max_element(bwd.begin(), bwd.end());
  out.clamped = std::any_of(hits.begin(), hits.end(), [](char c) { return c != 0; });
  return out;
}

}  // namespace heislab
