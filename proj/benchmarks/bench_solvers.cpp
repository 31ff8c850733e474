#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "stabeval/analysis.hpp"
#include "stabeval/dual_solvers.hpp"
#include "stabeval/toy.hpp"

using namespace stabeval;

namespace {

const Dataset& toy() {
  static const Dataset data = generate_toy(0);
  return data;
}

const LogisticModel& logistic() {
  static const LogisticModel model = fit_logistic(toy());
  return model;
}

void BM_DTransformPiecewise(benchmark::State& state) {
  const PiecewiseLinearModel model({{0.0, 0.0}, {-1.0, -0.5}, {-0.3, -1.2}}, {0.0, 0.5, 0.8});
  const FeatureMask mask = FeatureMask::all(2);
  double h = 0.5;
  for (auto _ : state) {
    for (std::size_t i = 0; i < toy().size(); ++i) {
      benchmark::DoNotOptimize(dtransform_piecewise(model, toy().sample(i), h, Price(0.4), mask));
    }
    h += 1e-6;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(toy().size()));
}
BENCHMARK(BM_DTransformPiecewise);

void BM_DTransformNonlinear(benchmark::State& state) {
  const LossModel model(logistic());
  const FeatureMask mask = FeatureMask::all(2);
  InnerOptions opts;
  opts.steps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    for (std::size_t i = 0; i < toy().size(); ++i) {
      benchmark::DoNotOptimize(dtransform_nonlinear(model, toy().sample(i), 1.0, Price(0.4), opts, mask));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(toy().size()));
}
BENCHMARK(BM_DTransformNonlinear)->Arg(20)->Arg(200);

void BM_Chi2AlphaStar(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (double& x : v) x = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(chi2_alpha_star(v, 0.4));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Chi2AlphaStar)->RangeMultiplier(8)->Range(64, 32768)->Complexity();

void BM_SolveClosedFormZeroOne(benchmark::State& state) {
  const Phi phi = state.range(0) == 0 ? Phi::KL : Phi::ChiSquared;
  const EvalConfig cfg(CostSpec(Price(0.4), Price(0.4)), phi, 0.3, LossKind::ZeroOne);
  const ValidatedConfig vc = validate_config(cfg, toy(), LossModel(logistic()));
  for (auto _ : state) benchmark::DoNotOptimize(solve_dual(toy(), vc));
}
BENCHMARK(BM_SolveClosedFormZeroOne)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SolveNonlinear(benchmark::State& state) {
  SolverOptions opts;
  opts.threads = static_cast<unsigned>(state.range(0));
  const EvalConfig cfg(CostSpec(Price(0.4), Price(0.4)), Phi::KL, 0.5, LossKind::SmoothNonlinear, opts);
  const ValidatedConfig vc = validate_config(cfg, toy(), LossModel(logistic()));
  for (auto _ : state) benchmark::DoNotOptimize(solve_nonlinear(toy(), vc));
}
BENCHMARK(BM_SolveNonlinear)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
BENCHMARK_MAIN();
