#include <benchmark/benchmark.h>

#include "heislab/analysis.hpp"
#include "heislab/paths.hpp"
#include "heislab/potential.hpp"
#include "heislab/weights.hpp"

using namespace heislab;

namespace {

Density demo() {
  Density d;
  d.bumps.push_back({Point{0.3, 0, 0.1}, Profile::poly_bump, 0.8, 0.3});
  d.bumps.push_back({Point{-0.6, 0.5, -0.4}, Profile::gaussian_like, 0.6, -0.5});
  d.atoms.push_back({Point{0.2, -0.7, 0.3}, 0.1});
  return d;
}

void BM_ball_volume_mc(benchmark::State& st) {
  const QuadratureScheme s{SchemeKind::monte_carlo, st.range(0), 1, 0.01};
  for (auto _ : st) {
    benchmark::DoNotOptimize(integrate_ball([](const Point&) { return 1.0; }, Ball(kIdentity, 1.0), s));
  }
}
BENCHMARK(BM_ball_volume_mc)->Arg(20000)->Arg(200000);

void BM_potential_value(benchmark::State& st) {
  const PotentialField u(demo());
  Point x{0.1, 0.2, 0.3};
  for (auto _ : st) {
    benchmark::DoNotOptimize(u.value(x));
    x.t += 1e-9;
  }
}
BENCHMARK(BM_potential_value);

void BM_potential_sampled(benchmark::State& st) {
  const PotentialField u(demo(), {SchemeKind::stratified_mc, 100000, 3, 0.01});
  for (auto _ : st) benchmark::DoNotOptimize(eval_u(u, Point{0.1, 0.2, 0.3}));
}
BENCHMARK(BM_potential_sampled)->Unit(benchmark::kMillisecond);

void BM_ap_constant(benchmark::State& st) {
  const WeightField w(PotentialField(demo()), 4.0);
  FamilySpec fs;
  fs.count = 20;
  const BallFamily f = make_family(fs);
  EstimatorOptions o;
  o.workers = 1;
  for (auto _ : st) benchmark::DoNotOptimize(ap_constant(w, f, 2.0, o));
}
BENCHMARK(BM_ap_constant)->Unit(benchmark::kMillisecond);

void BM_cc_distance(benchmark::State& st) {
  PathOptimizerConfig cfg;
  cfg.segments = static_cast<int>(st.range(0));
  cfg.workers = 1;
  for (auto _ : st) benchmark::DoNotOptimize(cc_distance(kIdentity, Point{0.4, 0.2, 1.0}, cfg));
}
BENCHMARK(BM_cc_distance)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_d_omega(benchmark::State& st) {
  const WeightField w(PotentialField(demo()), 4.0);
  PathOptimizerConfig cfg;
  cfg.workers = 1;
  for (auto _ : st) benchmark::DoNotOptimize(d_omega(Point{0.1, 0, 0}, Point{0.6, 0.3, 0.2}, w, cfg));
}
BENCHMARK(BM_d_omega)->Unit(benchmark::kMillisecond);

void BM_cartan(benchmark::State& st) {
  Density d;
  d.bumps.push_back({Point{0.2, 0, 0.1}, Profile::poly_bump, 0.02, -0.5});
  d.atoms.push_back({Point{-0.3, 0.5, 0.2}, 0.2});
  CartanOptions o;
  o.workers = 1;
  for (auto _ : st) benchmark::DoNotOptimize(cartan_singular_set(d, Ball(kIdentity, 2.0), 0.05, o));
}
BENCHMARK(BM_cartan)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
