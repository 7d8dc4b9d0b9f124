#include "pcv/em.hpp"
#include "pcv/kalman.hpp"
#include "pcv/mc.hpp"
#include "pcv/pricing.hpp"
#include "pcv/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace pcv;

static void BM_Filter(benchmark::State& state) {
  const Instance in = em_dataset(1, 0, static_cast<int>(state.range(0)));
  const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
  for (auto _ : state) benchmark::DoNotOptimize(filter(ms.real_sys, in.data).log_likelihood);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Filter)->Arg(100)->Arg(300)->Arg(1000)->Complexity(benchmark::oN);

static void BM_FilterSmoother(benchmark::State& state) {
  const Instance in = em_dataset(1, 0, 300);
  const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
  for (auto _ : state) {
    const FilterOutput f = filter(ms.real_sys, in.data);
    benchmark::DoNotOptimize(smooth(f, ms.real_sys).smoothed.back().mean(0));
  }
}
BENCHMARK(BM_FilterSmoother);

static void BM_EMStep(benchmark::State& state) {
  const Instance in = em_dataset(1, 0, 300);
  const ModelParameters p0 = initial_parameters(in.data);
  EMOptions o;
  for (auto _ : state) {
    const ModelParameters p = em_update(p0, in.data, in.conv, o, nullptr);
    benchmark::DoNotOptimize(p.A(0, 0));
  }
}
BENCHMARK(BM_EMStep);

static void BM_OptionPrice(benchmark::State& state) {
  const Instance in = pricing_instance(1, 8);
  const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
  const StateBelief b = filter(ms.rn_sys, ms.data).filtered[2];
  const Vec K = Vec::Ones(1);
  for (auto _ : state) {
    const PathLaw law(ms.rn_sys, ms.data, b, 6);
    benchmark::DoNotOptimize(option_price(OptionKind::Call, K, 6, law)(0));
  }
}
BENCHMARK(BM_OptionPrice);

static void BM_MonteCarlo(benchmark::State& state) {
  const Instance in = pricing_instance(1, 8);
  const ModelSystems ms = ModelSystems::build(in.params, in.data, in.conv);
  const StateBelief b = filter(ms.rn_sys, ms.data).filtered[2];
  const Simulator sim(ms, ms.rn_sys, b, 6);
  SimConfig cfg;
  cfg.measure = MeasureSpec::risk_neutral();
  cfg.n_paths = static_cast<std::uint64_t>(state.range(0));
  cfg.t_start = 2;
  cfg.horizon = 6;
  for (auto _ : state) {
    const Estimate e = estimate(sim, cfg, 1, [](const SimPath& p, Eigen::Ref<Vec> out) {
      out(0) = p.discount(2, 6) * std::max(std::exp(p.log_price(6)(0)) - 1.0, 0.0);
    });
    benchmark::DoNotOptimize(e.mean(0));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}
BENCHMARK(BM_MonteCarlo)->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
