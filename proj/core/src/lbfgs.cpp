#include "lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace heislab::detail {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double>& x, const LbfgsOptions& opt) {
  const std::size_t n = x.size();
  std::vector<double> g(n), g_new(n), d(n), x_new(n);
  LbfgsResult res;
  double fx = f(x, g);
  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> hist;
  std::vector<double> alpha(static_cast<std::size_t>(opt.memory));

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    if (max_abs(g) < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    d = g;
    for (std::size_t k = hist.size(); k-- > 0;) {
      alpha[k] = hist[k].rho * dot(hist[k].s, d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * hist[k].y[i];
    }
    double gamma = 1.0;
    if (!hist.empty()) gamma = dot(hist.back().s, hist.back().y) / dot(hist.back().y, hist.back().y);
    for (double& v : d) v *= gamma;
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const double beta = hist[k].rho * dot(hist[k].y, d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * hist[k].s[i];
    }
    for (double& v : d) v = -v;
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = dot(g, d);
    }
    double step = 1.0;
    if (hist.empty()) step = std::min(1.0, 1.0 / std::max(1e-300, max_abs(g)));
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
    double step_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - x[i];
      p.y[i] = g_new[i] - g[i];
      step_norm = std::max(step_norm, std::abs(p.s[i]));
    }
    const double sy = dot(p.s, p.y);
    x.swap(x_new);
    g.swap(g_new);
    const double f_old = fx;
    fx = f_new;
    if (sy > 1e-16 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y))) {
      p.rho = 1.0 / sy;
      hist.push_back(std::move(p));
      if (static_cast<int>(hist.size()) > opt.memory) hist.pop_front();
    }
    if (step_norm < opt.step_tolerance ||
        std::abs(f_old - fx) <= 1e-15 * std::max(1.0, std::abs(fx))) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  res.value = fx;
  return res;
}

}  // namespace heislab::detail
