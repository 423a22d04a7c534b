#include "heislab/paths.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <ostream>

#include "heislab/error.hpp"
#include "heislab/parallel.hpp"
#include "heislab/random.hpp"
#include "lbfgs.hpp"

namespace heislab {

double HorizontalPath::length() const {
  if (controls.empty()) return 0.0;
  double s = 0.0;
  for (const auto& v : controls) s += v.norm();
  return s / static_cast<double>(controls.size());
}

HorizontalPath HorizontalPath::reversed() const {
  HorizontalPath r;
  const auto pts = reconstruct(*this);
  r.start = pts.back();
  r.controls.reserve(controls.size());
  for (auto it = controls.rbegin(); it != controls.rend(); ++it) r.controls.push_back({-it->a, -it->b});
  return r;
}

namespace {

Point step(const Point& s, const HorizontalVector& v, double h) {
  return {s.x + v.a * h, s.y + v.b * h, s.t + 2.0 * h * (s.y * v.a - s.x * v.b)};
}

bool is_flat(const WeightField& w) {
  return w.exponent() == 0.0 || w.potential().source().empty();
}

}  // namespace

std::vector<Point> reconstruct(const HorizontalPath& path) {
  std::vector<Point> pts;
  pts.reserve(path.controls.size() + 1);
  pts.push_back(path.start);
  if (path.controls.empty()) return pts;
  const double h = 1.0 / static_cast<double>(path.controls.size());
  for (const auto& v : path.controls) pts.push_back(step(pts.back(), v, h));
  return pts;
}

Point segment_midpoint(const Point& s, const HorizontalVector& v, double h) {
  return {s.x + 0.5 * v.a * h, s.y + 0.5 * v.b * h, s.t + h * (s.y * v.a - s.x * v.b)};
}

double weighted_length(const HorizontalPath& path, const WeightField& w) {
  if (path.controls.empty()) return 0.0;
  const bool flat = is_flat(w);
  const double h = 1.0 / static_cast<double>(path.controls.size());
  Point s = path.start;
  double total = 0.0;
  for (const auto& v : path.controls) {
    const double f = flat ? 1.0 : w.power(segment_midpoint(s, v, h), 0.25);
    total += f * v.norm() * h;
    s = step(s, v, h);
  }
  return total;
}

void PathOptimizerConfig::validate() const {
  if (segments < 8) throw DomainError("path optimizer: segments must be >= 8");
  if (restarts < 1) throw DomainError("path optimizer: restarts must be >= 1");
  if (max_iterations < 1) throw DomainError("path optimizer: max_iterations must be >= 1");
  if (!(step_tolerance > 0.0)) throw DomainError("path optimizer: step_tolerance must be positive");
  if (penalty_schedule.empty()) throw DomainError("path optimizer: empty penalty schedule");
  for (std::size_t i = 0; i < penalty_schedule.size(); ++i) {
    if (!(penalty_schedule[i] > 0.0) || (i > 0 && !(penalty_schedule[i] > penalty_schedule[i - 1]))) {
      throw DomainError("path optimizer: penalty schedule must be positive and strictly increasing");
    }
  }
  if (!(containment_weight >= 0.0)) throw DomainError("path optimizer: containment_weight must be >= 0");
}

namespace {

// Turning angle phi in [0, 2 pi) of the circular arc from the origin to a point
// at planar distance c and height |t|: |t| / c^2 = (phi - sin phi) / (2 sin^2(phi/2)).
double arc_angle(double c, double abs_t) {
  if (abs_t == 0.0) return 0.0;
  const double target = abs_t / (c * c);
  double lo = 0.0, hi = 2.0 * kPi;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double s = std::sin(0.5 * mid);
    const double g = (mid - std::sin(mid)) / (2.0 * s * s);
    (g < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Polygon inscribed in the arc with turning angle phi and chord from the origin
// to (X, Y); sigma = +1 turns counterclockwise (t decreases).
std::vector<HorizontalVector> arc_controls(double X, double Y, double phi, double sigma, int n,
                                           double t_gap) {
  std::vector<HorizontalVector> c(static_cast<std::size_t>(n));
  const double h = 1.0 / n;
  const double chord = std::hypot(X, Y);
  if (chord == 0.0) {
    // Full circle enclosing area |t|/4.
    const double R = std::sqrt(std::abs(t_gap) / (4.0 * kPi));
    const double side = 2.0 * R * std::sin(kPi * h);
    for (int i = 0; i < n; ++i) {
      const double ang = sigma * 2.0 * kPi * (i + 0.5) * h;
      c[static_cast<std::size_t>(i)] = {side / h * std::cos(ang), side / h * std::sin(ang)};
    }
    return c;
  }
  const double base = std::atan2(Y, X);
  if (phi < 1e-12) {
    for (auto& v : c) v = {X, Y};
    return c;
  }
  const double R = chord / (2.0 * std::sin(0.5 * phi));
  const double side = 2.0 * R * std::sin(0.5 * phi * h);
  const double theta0 = base - sigma * 0.5 * phi;
  for (int i = 0; i < n; ++i) {
    const double ang = theta0 + sigma * phi * (i + 0.5) * h;
    c[static_cast<std::size_t>(i)] = {side / h * std::cos(ang), side / h * std::sin(ang)};
  }
  return c;
}

struct Problem {
  Point origin;  // p; the optimization runs in coordinates translated by p^{-1}
  Point target;  // p^{-1} q
  double scale;  // d(p, q)
  const WeightField* weight = nullptr;  // null: flat
  bool contain = false;
  Point ball_center;  // in translated coordinates
  double ball_radius = 1.0;
  double containment_weight = 0.0;
};

struct Evaluation {
  double energy = 0.0;
  double penalty = 0.0;
  std::array<double, 3> residual{};  // scaled endpoint error
};

// Energy sum h W_i |v_i|^2 with W = omega^{1/2}, containment penalty, and the
// scaled endpoint residual, with the gradient of
//   energy / e_scale + penalty + lam . r + mu/2 |r|^2
// by a reverse sweep over the segment recursion.
double objective(const Problem& P, const std::vector<double>& c, double e_scale,
                 const std::array<double, 3>& lam, double mu, std::vector<double>* grad,
                 Evaluation* ev) {
  const std::size_t n = c.size() / 2;
  const double h = 1.0 / static_cast<double>(n);
  thread_local std::vector<Point> states;
  thread_local std::vector<std::array<double, 3>> gm;  // d obj / d midpoint
  thread_local std::vector<double> wv;
  states.resize(n + 1);
  gm.assign(n, {0.0, 0.0, 0.0});
  wv.resize(n);
  states[0] = kIdentity;
  double energy = 0.0, penalty = 0.0;
  const double kc = P.containment_weight;
  for (std::size_t i = 0; i < n; ++i) {
    const HorizontalVector v{c[2 * i], c[2 * i + 1]};
    const Point m = segment_midpoint(states[i], v, h);
    const double speed2 = v.a * v.a + v.b * v.b;
    double W = 1.0;
    if (P.weight) {
      const Point g = group_mul(P.origin, m);
      std::array<double, 3> dw{};
      const double om = P.weight->value_and_gradient(g, dw);
      W = std::sqrt(om);
      if (grad) {
        // d sqrt(omega)/d m through the left translation by p.
        const double f = 0.5 / W * h * speed2 / e_scale;
        gm[i][0] += f * (dw[0] + 2.0 * P.origin.y * dw[2]);
        gm[i][1] += f * (dw[1] - 2.0 * P.origin.x * dw[2]);
        gm[i][2] += f * dw[2];
      }
    }
    wv[i] = W;
    energy += h * W * speed2;
    if (P.contain && kc > 0.0) {
      const Point z = group_mul(inverse(P.ball_center), m);
      const double g = koranyi_gauge(z);
      const double excess = g / P.ball_radius - 1.0;
      if (excess > 0.0) {
        penalty += kc * h * excess * excess;
        if (grad) {
          const double r2 = z.x * z.x + z.y * z.y;
          const double g3 = g * g * g;
          const double dgx = r2 * z.x / g3, dgy = r2 * z.y / g3, dgt = z.t / (2.0 * g3);
          const double f = kc * h * 2.0 * excess / P.ball_radius;
          const Point& b = P.ball_center;
          gm[i][0] += f * (dgx - 2.0 * b.y * dgt);
          gm[i][1] += f * (dgy + 2.0 * b.x * dgt);
          gm[i][2] += f * dgt;
        }
      }
    }
    states[i + 1] = step(states[i], v, h);
  }
  const Point& e = states[n];
  const double D = P.scale;
  const std::array<double, 3> sc{1.0 / D, 1.0 / D, 1.0 / (D * D)};
  const std::array<double, 3> r{(e.x - P.target.x) * sc[0], (e.y - P.target.y) * sc[1],
                                (e.t - P.target.t) * sc[2]};
  double value = energy / e_scale + penalty;
  for (int k = 0; k < 3; ++k) value += lam[k] * r[k] + 0.5 * mu * r[k] * r[k];
  if (ev) *ev = {energy, penalty, r};
  if (!grad) return value;

  grad->assign(c.size(), 0.0);
  std::array<double, 3> L{};
  for (int k = 0; k < 3; ++k) L[k] = (lam[k] + mu * r[k]) * sc[k];
  for (std::size_t i = n; i-- > 0;) {
    const double a = c[2 * i], b = c[2 * i + 1];
    const Point& s = states[i];
    const auto& G = gm[i];
    const double dE = 2.0 * h * wv[i] / e_scale;
    double ga = dE * a + G[0] * 0.5 * h + G[2] * h * s.y + L[0] * h + L[2] * 2.0 * h * s.y;
    double gb = dE * b + G[1] * 0.5 * h - G[2] * h * s.x + L[1] * h - L[2] * 2.0 * h * s.x;
    (*grad)[2 * i] = ga;
    (*grad)[2 * i + 1] = gb;
    const std::array<double, 3> Ln{G[0] - G[2] * h * b + L[0] - L[2] * 2.0 * h * b,
                                   G[1] + G[2] * h * a + L[1] + L[2] * 2.0 * h * a, G[2] + L[2]};
    L = Ln;
  }
  return value;
}

// Min-norm Newton correction of the controls onto the exact endpoint.
void project_endpoint(const Problem& P, std::vector<double>& c) {
  const std::size_t n = c.size() / 2;
  const double h = 1.0 / static_cast<double>(n);
  std::vector<Point> st(n + 1);
  Eigen::MatrixXd J(3, 2 * n);
  for (int it = 0; it < 30; ++it) {
    st[0] = kIdentity;
    for (std::size_t i = 0; i < n; ++i) st[i + 1] = step(st[i], {c[2 * i], c[2 * i + 1]}, h);
    const Point& e = st[n];
    const Eigen::Vector3d err(e.x - P.target.x, e.y - P.target.y, e.t - P.target.t);
    const double D = P.scale;
    if (std::abs(err[0]) + std::abs(err[1]) < 1e-15 * D && std::abs(err[2]) < 1e-15 * D * D) break;
    for (std::size_t k = 0; k < n; ++k) {
      J(0, 2 * k) = h;
      J(1, 2 * k) = 0.0;
      J(2, 2 * k) = 2.0 * h * (st[k].y - (e.y - st[k + 1].y));
      J(0, 2 * k + 1) = 0.0;
      J(1, 2 * k + 1) = h;
      J(2, 2 * k + 1) = 2.0 * h * ((e.x - st[k + 1].x) - st[k].x);
    }
    const Eigen::Matrix3d JJ = J * J.transpose();
    const Eigen::Vector3d lam = JJ.ldlt().solve(err);
    const Eigen::VectorXd dc = J.transpose() * lam;
    for (std::size_t k = 0; k < 2 * n; ++k) c[k] -= dc[static_cast<Eigen::Index>(k)];
  }
}

struct RunResult {
  std::vector<double> controls;
  double length = std::numeric_limits<double>::infinity();
  double miss = std::numeric_limits<double>::infinity();
  double outside = 0.0;
};

RunResult measure(const Problem& P, const std::vector<double>& c) {
  const std::size_t n = c.size() / 2;
  const double h = 1.0 / static_cast<double>(n);
  RunResult out;
  out.controls = c;
  Point s = kIdentity;
  double len = 0.0, total = 0.0, outside = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const HorizontalVector v{c[2 * i], c[2 * i + 1]};
    const Point m = segment_midpoint(s, v, h);
    const double seg = v.norm() * h;
    const double f = P.weight ? P.weight->power(group_mul(P.origin, m), 0.25) : 1.0;
    len += f * seg;
    total += seg;
    if (P.contain && koranyi_dist(P.ball_center, m) > P.ball_radius) outside += seg;
    s = step(s, v, h);
  }
  out.length = len;
  out.miss = koranyi_dist(s, P.target);
  out.outside = total > 0.0 ? outside / total : 0.0;
  return out;
}

RunResult run_once(const Problem& P, std::vector<double> c, const PathOptimizerConfig& cfg) {
  Evaluation ev;
  objective(P, c, 1.0, {0.0, 0.0, 0.0}, 0.0, nullptr, &ev);
  const double e_scale = std::max(ev.energy, 1e-300);
  std::array<double, 3> lam{0.0, 0.0, 0.0};
  detail::LbfgsOptions lo;
  lo.max_iterations = cfg.max_iterations;
  lo.step_tolerance = cfg.step_tolerance;
  lo.gradient_tolerance = 1e-12;
  for (double mu : cfg.penalty_schedule) {
    auto f = [&](const std::vector<double>& x, std::vector<double>& g) {
      return objective(P, x, e_scale, lam, mu, &g, nullptr);
    };
    detail::lbfgs_minimize(f, c, lo);
    objective(P, c, e_scale, lam, mu, nullptr, &ev);
    for (int k = 0; k < 3; ++k) lam[k] += mu * ev.residual[k];
  }
  project_endpoint(P, c);
  return measure(P, c);
}

Problem make_problem(const Point& p, const Point& q, const WeightField* w, bool contain, double kc) {
  if (p == q) throw DomainError("path optimizer: endpoints coincide");
  Problem P;
  P.origin = p;
  P.target = group_mul(inverse(p), q);
  P.scale = koranyi_dist(p, q);
  P.weight = w;
  P.contain = contain;
  if (contain) {
    const Ball b = ball_xy(p, q);
    P.ball_center = group_mul(inverse(p), b.center());
    P.ball_radius = b.radius();
    P.containment_weight = kc;
  }
  return P;
}

PathResult optimize(const Point& p, const Point& q, const WeightField* w, bool contain,
                    const PathOptimizerConfig& cfg) {
  cfg.validate();
  const Problem P = make_problem(p, q, w, contain, cfg.containment_weight);
  const int n = cfg.segments;
  const double X = P.target.x, Y = P.target.y, T = P.target.t;
  const double chord = std::hypot(X, Y);
  const double phi = chord > 0.0 ? arc_angle(chord, std::abs(T)) : 2.0 * kPi;
  const double sigma = T <= 0.0 ? 1.0 : -1.0;

  std::vector<RunResult> runs(static_cast<std::size_t>(cfg.restarts));
  parallel_for(runs.size(), cfg.workers, [&](std::size_t k) {
    Rng rng(mix_seed(cfg.seed, k));
    std::vector<HorizontalVector> init;
    if (k == 0) {
      init = arc_controls(X, Y, phi, sigma, n, T);
    } else if (k % 4 == 3 && chord > 0.0) {
      init = arc_controls(X, Y, 0.0, sigma, n, T);
    } else {
      // Jittered arc amplitude plus a smooth lateral wiggle.
      const double jit = chord > 0.0 ? std::clamp(phi * (1.0 + 0.35 * rng.normal()), 0.0, 1.95 * kPi) : phi;
      init = arc_controls(X, Y, jit, sigma, n, T);
      const double amp = 0.3 * P.scale * rng.normal();
      const double mode = 1.0 + static_cast<double>(rng.next() % 3);
      const double dir = std::atan2(Y, X) + 0.5 * kPi;
      for (int i = 0; i < n; ++i) {
        const double s = (i + 0.5) / n;
        const double du = amp * 2.0 * kPi * mode * std::cos(2.0 * kPi * mode * s) * 0.5 * (1.0 - std::cos(2.0 * kPi * s));
        init[static_cast<std::size_t>(i)].a += du * std::cos(dir);
        init[static_cast<std::size_t>(i)].b += du * std::sin(dir);
      }
    }
    std::vector<double> c(2 * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      c[2 * static_cast<std::size_t>(i)] = init[static_cast<std::size_t>(i)].a;
      c[2 * static_cast<std::size_t>(i) + 1] = init[static_cast<std::size_t>(i)].b;
    }
    runs[k] = run_once(P, std::move(c), cfg);
  });

  PathResult out;
  const double tol = kEndpointTolerance * P.scale;
  double best_miss = std::numeric_limits<double>::infinity();
  int best = -1;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const bool ok = runs[k].miss < tol && std::isfinite(runs[k].length);
    best_miss = std::min(best_miss, runs[k].miss);
    out.restart_lengths.push_back(ok ? runs[k].length : std::numeric_limits<double>::infinity());
    if (!ok) continue;
    ++out.feasible_restarts;
    if (best < 0 || runs[k].length < runs[static_cast<std::size_t>(best)].length) best = static_cast<int>(k);
  }
  if (best < 0) {
    throw OptimizationError("path optimizer: no restart met the endpoint tolerance", best_miss);
  }
  const RunResult& r = runs[static_cast<std::size_t>(best)];
  out.length = r.length;
  out.endpoint_miss = r.miss;
  out.outside_fraction = r.outside;
  out.path.start = p;
  for (int i = 0; i < n; ++i) {
    out.path.controls.push_back({r.controls[2 * static_cast<std::size_t>(i)], r.controls[2 * static_cast<std::size_t>(i) + 1]});
  }
  return out;
}

}  // namespace

double detail::path_objective(const Point& p, const Point& q, const WeightField* w, bool contain,
                              double containment_weight, const std::vector<double>& controls,
                              const std::array<double, 3>& lam, double mu, std::vector<double>* grad) {
  if (controls.empty() || controls.size() % 2) throw DomainError("path_objective: need (a, b) pairs");
  const Problem P = make_problem(p, q, w, contain, containment_weight);
  return objective(P, controls, 1.0, lam, mu, grad, nullptr);
}

PathResult cc_distance(const Point& p, const Point& q, const PathOptimizerConfig& cfg) {
  return optimize(p, q, nullptr, false, cfg);
}

PathResult d_omega(const Point& p, const Point& q, const WeightField& w, const PathOptimizerConfig& cfg) {
  return optimize(p, q, is_flat(w) ? nullptr : &w, true, cfg);
}

IntegralResult delta_omega(const Point& p, const Point& q, const WeightField& w,
                           const QuadratureScheme& scheme) {
  const Ball b = ball_xy(p, q);
  bool clamped = false;
  const auto avg = detail::weight_power_averages(w, b, {1.0}, scheme, &clamped)[0];
  const double mass = avg.value * b.volume();
  IntegralResult out;
  out.value = std::pow(mass, 0.25);
  out.std_error = 0.25 * out.value * (avg.value > 0.0 ? avg.std_error / avg.value : 0.0);
  out.samples_used = avg.samples_used;
  out.acceptance_rate = avg.acceptance_rate;
  return out;
}

double cc_distance_closed_form(const Point& p, const Point& q) {
  if (p == q) return 0.0;
  const Point z = group_mul(inverse(p), q);
  const double c = std::hypot(z.x, z.y);
  if (c == 0.0) return std::sqrt(kPi * std::abs(z.t));
  const double phi = arc_angle(c, std::abs(z.t));
  if (phi < 1e-12) return c;
  return phi * c / (2.0 * std::sin(0.5 * phi));
}

void write_path_csv(std::ostream& os, const HorizontalPath& path) {
  const auto pts = reconstruct(path);
  const double n = std::max(1, path.segments());
  os << "index,s,x,y,t\n";
  char buf[160];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i, static_cast<double>(i) / n,
                  pts[i].x, pts[i].y, pts[i].t);
    os << buf;
  }
}

}  // namespace heislab
