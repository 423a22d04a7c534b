// One pass/fail line per acceptance criterion; exits nonzero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "heislab/analysis.hpp"
#include "heislab/error.hpp"
#include "heislab/paths.hpp"
#include "heislab/potential.hpp"
#include "heislab/random.hpp"
#include "heislab/scenario.hpp"
#include "heislab/weights.hpp"

using namespace heislab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string f(const char* fmt, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

Point random_in(Rng& rng, const Ball& b) {
  const double rho = b.radius() * std::sqrt(std::sqrt(rng.uniform()));
  return group_mul(b.center(), dilate(rho, polar_point(1.0, rng.uniform(-0.5 * kPi, 0.5 * kPi), rng.uniform(0, 2 * kPi))));
}

Density random_density(Rng& rng, int bumps, double spread, double sign) {
  Density d;
  for (int i = 0; i < bumps; ++i) {
    const double s = sign == 0.0 ? (i % 2 ? -1.0 : 1.0) : sign;
    d.bumps.push_back({Point{rng.uniform(-spread, spread), rng.uniform(-spread, spread),
                             rng.uniform(-spread * spread, spread * spread)},
                       i % 2 ? Profile::gaussian_like : Profile::poly_bump, rng.uniform(0.2, 0.9),
                       s * rng.uniform(0.1, 0.5)});
  }
  return d;
}

Verdict c1_volume() {
  Verdict v;
  const auto t0 = Clock::now();
  const IntegralResult r = integrate_ball([](const Point&) { return 1.0; }, Ball(kIdentity, 1.0), QuadratureScheme{});
  const double secs = since(t0);
  const double rel = std::abs(r.value / kUnitBallVolume - 1.0);
  v.require(rel < 0.01, f("volume %.6f (rel err %.2e)", r.value, rel));
  v.require(secs < 5.0, f("%.2f s", secs));
  return v;
}

Verdict c2_cc_oracles() {
  Verdict v;
  PathOptimizerConfig cfg;
  cfg.segments = 64;
  cfg.restarts = 8;
  auto t0 = Clock::now();
  const double h = cc_distance(kIdentity, Point{1, 0, 0}, cfg).length;
  const double th = since(t0);
  t0 = Clock::now();
  const double z = cc_distance(kIdentity, Point{0, 0, 1}, cfg).length;
  const double tz = since(t0);
  v.require(std::abs(h - 1.0) < 0.01, f("horizontal %.6f", h));
  v.require(std::abs(z / std::sqrt(kPi) - 1.0) < 0.02, f("vertical %.6f vs %.6f", z, std::sqrt(kPi)));
  v.require(th < 60 && tz < 60, f("%.2f s, %.2f s", th, tz));
  return v;
}

Verdict c3_dilation() {
  Verdict v;
  Rng rng(301);
  double worst = 0.0;
  int bad = 0;
  for (int i = 0; i < 20; ++i) {
    const Density d = random_density(rng, 3, 1.0, 0.0);
    const double lam = std::exp(rng.uniform(-1.5, 1.5));
    const Point x{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-2, 2)};
    const QuadratureScheme s{SchemeKind::stratified_mc, 100000, mix_seed(302, i), 0.01};
    const IntegralResult a = eval_u(PotentialField(d, s), x);
    const IntegralResult b = eval_u(PotentialField(d.dilated(lam), s.with_seed(mix_seed(303, i))), dilate(lam, x));
    const double se = std::hypot(a.std_error, b.std_error);
    const double z = std::abs(a.value - b.value) / se;
    worst = std::max(worst, z);
    if (!(std::abs(a.value - b.value) <= 3 * se)) ++bad;
  }
  v.require(bad == 0, f("%g of 20 triples beyond 3 std errors (worst %.2f se)", bad, worst));
  return v;
}

Verdict c4_flat() {
  Verdict v;
  const WeightField one = WeightField::flat();
  FamilySpec fs;
  fs.policy = FamilyPolicy::random_in_region;
  fs.count = 24;
  fs.region_radius = 2.0;
  fs.r_min = 0.05;
  fs.r_max = 2.0;
  fs.seed = 401;
  const BallFamily fam = make_family(fs);
  double ap = 0;
  for (double p : {1.5, 2.0, 4.0}) ap = std::max(ap, std::abs(ap_constant(one, fam, p).value - 1.0));
  v.require(ap <= 0.02, f("A_p |K-1| %.2e", ap));
  const double dbl = doubling_constant(one, fam).value;
  v.require(std::abs(dbl / 16 - 1) <= 0.03, f("doubling %.4f", dbl));
  FamilySpec ns = fs;
  ns.policy = FamilyPolicy::nested_pairs;
  ns.r_max = 1.0;
  ns.count = 12;
  const BalanceReport b = balance_check(one, one, make_family(ns), 2.0, 4.0);
  v.require(std::abs(b.max_ratio - 1) <= 0.02 && std::abs(b.min_ratio - 1) <= 0.02,
            f("balance [%.4f, %.4f]", b.min_ratio, b.max_ratio));
  const PowerMeanProbe pm = stromberg_wheeden_probe(one, 0.5, fam);
  v.require(std::abs(pm.forward_max - 1) <= 0.01 && std::abs(pm.backward_max - 1) <= 0.01,
            f("S-W (%.4f, %.4f)", pm.forward_max, pm.backward_max));
  PairSpec ps;
  ps.count = 50;
  ps.region_radius = 2.0;
  ps.sep_min = 0.1;
  ps.sep_max = 10.0;
  ps.seed = 402;
  const ComparabilityReport r = strong_ainfty_scan(one, make_pairs(ps));
  const double spread = r.sup_delta_over_d / r.min_delta_over_d - 1.0;
  v.require(r.failures == 0 && spread <= 0.05,
            f("strong A-inf delta/d in [%.4f, %.4f], spread %.1f%% (limit 5%%)", r.min_delta_over_d,
              r.sup_delta_over_d, 100 * spread));
  return v;
}

Verdict c5_far_oscillation() {
  Verdict v;
  Rng rng(501);
  int bad = 0, probes = 0;
  double worst = 0.0;
  for (int s = 0; s < 5; ++s) {
    Density d = random_density(rng, 4 + s, 12.0, -1.0);
    d.bumps.push_back({Point{rng.uniform(-1, 1), rng.uniform(-1, 1), 0}, Profile::poly_bump, 0.5, -0.3});
    const PotentialField u(d);
    const Point x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Point y = group_mul(x, dilate(rng.uniform(0.5, 3.0), polar_point(1.0, rng.uniform(-1.5, 1.5), rng.uniform(0, 6.28))));
    const Normalized n = normalize_to_unit_separation(u, x, y);
    const Ball b(group_midpoint(n.x, n.y), 1.0);
    const Density& g = n.field.source();
    const double beta_out = g.total_variation() - abs_mass_in_ball(g, b.scaled(10.0), std::nullopt, 8000);
    const double bound = beta_out / (4 * g.c1_prime);
    for (int i = 0; i < 50; ++i) {
      const Point z = random_in(rng, Ball(b.center(), 2.0 * (1 - 1e-9)));
      const IntegralResult o = u2_oscillation(n.field, b, z);
      ++probes;
      worst = std::max(worst, bound > 0 ? o.value / bound : 0.0);
      if (!(o.value <= bound + 3 * o.std_error + 1e-12)) ++bad;
    }
  }
  v.require(bad == 0, f("%g of %g probes above the bound (worst ratio %.3f)", bad, probes, worst));
  return v;
}

Verdict c6_cartan() {
  Verdict v;
  const double eps = 1.0 / 20;
  const double c0s = c0_series(1.0), c0c = c0_closed_form(1.0);
  v.require(std::abs(c0s / c0c - 1) < 1e-10, f("C0 series %.10f vs closed form %.10f", c0s, c0c));
  std::vector<Density> scen(3);
  scen[0].bumps.push_back({Point{0, 0.1, 0}, Profile::poly_bump, 0.3, 0.4});
  scen[0].atoms.push_back({Point{0.5, 0.2, -0.1}, 0.15});
  scen[1].bumps.push_back({Point{0.2, 0, 0.1}, Profile::poly_bump, 0.02, -0.5});
  scen[1].bumps.push_back({Point{-0.4, 0.3, 0}, Profile::gaussian_like, 0.6, -0.4});
  scen[2].atoms.push_back({Point{0.1, 0.1, 0.1}, -0.2});
  scen[2].atoms.push_back({Point{-0.3, 0.5, 0.2}, 0.2});
  scen[2].bumps.push_back({Point{0.6, -0.6, 0.3}, Profile::poly_bump, 0.7, 0.3});
  const Ball b10(kIdentity, 2.0);
  for (std::size_t k = 0; k < scen.size(); ++k) {
    const SingularSet e = cartan_singular_set(scen[k], b10, eps);
    v.require(e.total_diameter() < 10 * eps, f("scenario %g: %g balls, sum diam %.4f", static_cast<double>(k),
                                               static_cast<double>(e.balls.size()), e.total_diameter()));
    const auto probes = sample_nonsingular_probes(b10, e, 200, mix_seed(601, k));
    const BoundReport r = u_hat1_bound_check(PotentialField(scen[k]), b10, e, eps, probes);
    int over = 0;
    for (const auto& p : r.probes) {
      if (!(std::abs(p.u_hat1) <= c0s * e.beta / eps + 3 * p.std_error)) ++over;
    }
    v.require(over == 0 && r.probes.size() == 200,
              f("scenario %g: max |u_hat1| %.4f vs bound %.1f", static_cast<double>(k), r.max_abs, c0s * e.beta / eps));
  }
  return v;
}

Verdict c7_projection() {
  Verdict v;
  Rng rng(701);
  double worst = INFINITY;
  for (int k = 0; k < 100; ++k) {
    const Point p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double th = rng.uniform(0, 2 * kPi);
    const HorizontalPath seg = straight_segment(p, th, 2.0);
    const int nb = 1 + static_cast<int>(rng.next() % 8);
    const double total = 0.5 * (1 - 1e-9) * rng.uniform(0.5, 1.0);
    std::vector<double> w(static_cast<std::size_t>(nb));
    double sum = 0;
    for (auto& x : w) sum += (x = rng.uniform(0.05, 1.0));
    SingularSet e;
    for (double x : w) {
      const double r = 0.5 * total * x / sum;
      const double s = rng.uniform(0, 2);
      const Point on = group_mul(p, Point{s * std::cos(th), s * std::sin(th), 0});
      // Half the covers are centered on the segment, the worst placement.
      const double off = k % 2 ? 0.0 : r * rng.uniform();
      const Point dir = polar_point(1.0, rng.uniform(-1.5, 1.5), rng.uniform(0, 6.28));
      e.balls.emplace_back(off > 0.0 ? group_mul(on, dilate(off, dir)) : on, r);
    }
    worst = std::min(worst, projection_length(seg, e).outside_length);
  }
  v.require(worst > 1.5, f("min outside length %.4f over 100 covers", worst));
  return v;
}

Verdict c8_strong_ainfty() {
  Verdict v;
  const auto t0 = Clock::now();
  PairSpec ps;
  ps.count = 100;
  ps.region_radius = 1.5;
  ps.sep_min = 0.1;
  ps.sep_max = 3.0;
  ps.seed = 801;
  const auto pairs = make_pairs(ps);
  Density shape;
  shape.bumps.push_back({Point{0.3, 0, 0.1}, Profile::poly_bump, 0.8, -0.5});
  shape.bumps.push_back({Point{-0.6, 0.5, -0.4}, Profile::gaussian_like, 0.6, -0.3});
  shape.atoms.push_back({Point{0.2, -0.7, 0.3}, -0.2});
  double prev = 0.0;
  bool monotone = true;
  std::string seq;
  for (double beta : {0.25, 0.5, 1.0}) {
    const Density d = shape.scaled(beta);
    const ComparabilityReport r = strong_ainfty_scan(WeightField(PotentialField(d), 4.0), pairs);
    const bool finite = std::isfinite(r.sup_d_over_delta) && std::isfinite(r.sup_delta_over_d) && r.failures < ps.count;
    v.require(finite, f("beta %.2f: sup d/delta %.4f, sup delta/d %.4f", beta, r.sup_d_over_delta, r.sup_delta_over_d));
    if (r.sup_d_over_delta < prev) monotone = false;
    prev = r.sup_d_over_delta;
  }
  v.require(monotone, "sup d/delta nondecreasing in beta");
  Rng rng(802);
  for (int k = 0; k < 3; ++k) {
    Density d = random_density(rng, 4, 1.0, 0.0);
    double alpha = 0;
    for (const auto& b : d.bumps) alpha += std::max(0.0, b.mass);
    if (alpha > 0.5) d = d.scaled(0.5 / alpha);
    const ComparabilityReport r = strong_ainfty_scan(WeightField(PotentialField(d), 4.0), pairs);
    const bool finite = std::isfinite(r.sup_d_over_delta) && std::isfinite(r.sup_delta_over_d) && r.failures < ps.count;
    v.require(finite, f("mixed %g (alpha %.2f): sup d/delta %.4f", k, r.alpha, r.sup_d_over_delta));
  }
  const double secs = since(t0);
  v.require(secs < 1800, f("scan %.0f s", secs));
  return v;
}

Verdict c9_sobolev() {
  Verdict v;
  std::vector<Density> scen(3);
  scen[0].bumps.push_back({Point{0.2, 0, 0}, Profile::poly_bump, 0.8, 0.3});
  scen[0].bumps.push_back({Point{1.2, -0.4, 0.6}, Profile::gaussian_like, 0.6, -0.4});
  scen[1].bumps.push_back({Point{0.3, 0, 0.2}, Profile::poly_bump, 0.7, -0.8});
  scen[2].bumps.push_back({Point{-0.5, 0.2, 0}, Profile::poly_bump, 1.0, 0.4});
  scen[2].atoms.push_back({Point{0.4, 0.4, 0.1}, -0.1});
  FamilySpec ns;
  ns.policy = FamilyPolicy::nested_pairs;
  ns.count = 8;
  ns.region_radius = 1.5;
  ns.r_min = 0.1;
  ns.r_max = 1.5;
  ns.seed = 901;
  const BallFamily fam = make_family(ns);
  for (std::size_t k = 0; k < scen.size(); ++k) {
    const PotentialField u(scen[k]);
    double worst = 1.0;
    bool finite = true;
    for (const char* name : {"x", "y", "t", "gauge", "wave"}) {
      double lo = INFINITY, hi = 0;
      for (double r : {0.5, 1.0, 2.0}) {
        const SobolevResult s = sobolev_poincare_ratio(builtin_test_function(name), Ball(Point{0.1, 0, 0}, r), u, 2.0);
        finite = finite && std::isfinite(s.ratio) && s.ratio > 0;
        lo = std::min(lo, s.ratio);
        hi = std::max(hi, s.ratio);
      }
      worst = std::max(worst, hi / lo);
    }
    v.require(finite && worst <= 2.0, f("scenario %g: c_emp spread x%.3f", static_cast<double>(k), worst));
    const BalanceReport b = balance_check(WeightField(u, 4.0), WeightField(u, 2.0), fam, 2.0, 4.0);
    v.require(std::isfinite(b.max_ratio), f("scenario %g: balance max %.4f", static_cast<double>(k), b.max_ratio));
  }
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Verdict c10_determinism() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / "heislab-acceptance";
  fs::remove_all(root);
  for (const auto& e : fs::directory_iterator(HEISLAB_SCENARIO_DIR)) {
    if (e.path().extension() != ".json") continue;
    RunOptions a, b;
    a.out_dir = root / "a";
    b.out_dir = root / "b";
    b.workers = 2;
    const RunOutcome ra = run_config_file(e.path(), a), rb = run_config_file(e.path(), b);
    int files = 0, diff = 0;
    for (const auto& f2 : fs::directory_iterator(ra.output_dir)) {
      ++files;
      if (slurp(f2.path()) != slurp(rb.output_dir / f2.path().filename())) ++diff;
    }
    v.require(ra.exit_code != kExitConfig && files > 0 && diff == 0,
              e.path().filename().string() + ": " + std::to_string(files) + " files, " + std::to_string(diff) + " differ");
  }
  fs::remove_all(root);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"unit ball volume", c1_volume},
      {"CC distance oracles", c2_cc_oracles},
      {"dilation covariance", c3_dilation},
      {"flat-case regressions", c4_flat},
      {"far-measure oscillation bound", c5_far_oscillation},
      {"Cartan cover and u_hat1 bound", c6_cartan},
      {"projection claim", c7_projection},
      {"strong A-infinity comparability", c8_strong_ainfty},
      {"Sobolev-Poincare stability", c9_sobolev},
      {"determinism", c10_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.pass) ++failed;
    std::printf("criterion %2zu %s  %s  [%.1f s] %s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first, since(t0),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
