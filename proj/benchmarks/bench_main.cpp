#include <benchmark/benchmark.h>

#include "dtrack/config_io.hpp"
#include "dtrack/primal_policy.hpp"
#include "dtrack/simulator.hpp"

namespace {

dtrack::ModelParams params(const char* name) { return dtrack::preset(name).params; }

void BM_FreeBoundaryTable(benchmark::State& state) {
  const dtrack::Model model(params("fig2"));
  for (auto _ : state) {
    dtrack::FreeBoundary fb(model);
    benchmark::DoNotOptimize(fb.m_max());
  }
}
BENCHMARK(BM_FreeBoundaryTable)->Unit(benchmark::kMillisecond);

void BM_Coefficients(benchmark::State& state) {
  const dtrack::Model model(params("fig2"));
  const dtrack::DualSolution dual(model);
  double m = 2.0 * model.consts.m_kink;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dual.coefficients(m));
    m = m < 100.0 * model.consts.m_kink ? m * 1.01 : 2.0 * model.consts.m_kink;
  }
}
BENCHMARK(BM_Coefficients);

void BM_DualValue(benchmark::State& state) {
  const dtrack::Model model(params("fig2"));
  const dtrack::DualSolution dual(model);
  const double m = 3.0 * model.consts.m_kink;
  const dtrack::Coefficients coef = dual.coefficients(m);
  const double lo = coef.y_star, hi = model.params.beta;
  double y = lo;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dual.dual_value(y, 10.0, coef));
    y = y < hi * 0.99 ? y * 1.001 : lo;
  }
}
BENCHMARK(BM_DualValue);

void BM_PolicyEvaluate(benchmark::State& state) {
  const dtrack::Model model(params("fig1"));
  const dtrack::PrimalPolicy pol(model);
  double x = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pol.evaluate(x, 10.0, 6.0));
    x = x < 30.0 ? x + 0.37 : 0.1;
  }
}
BENCHMARK(BM_PolicyEvaluate);

void BM_CursorStep(benchmark::State& state) {
  const dtrack::Model model(params("fig1"));
  const dtrack::PrimalPolicy pol(model);
  dtrack::PolicyCursor cursor = pol.cursor();
  double x = 10.0, m = 6.0, t = 0.0;
  for (auto _ : state) {
    const dtrack::StepControl s = cursor.advance(x + std::sin(t), 10.0, m);
    m = s.m;
    t += 0.01;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_CursorStep);

void BM_SimulatePath(benchmark::State& state) {
  const dtrack::Model model(params("fig1"));
  const dtrack::PrimalPolicy pol(model);
  const dtrack::Simulator sim(pol);
  dtrack::SimConfig cfg = dtrack::SimConfig::from_wealth(20.0, 10.0, 6.0);
  cfg.dt = 1e-3;
  cfg.horizon = 1.0;
  cfg.seed = 3;
  std::int64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim.simulate_path(cfg, i++));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_SimulatePath)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
