#include <benchmark/benchmark.h>

#include "qbss/sampler.hpp"
#include "qbss/simulate.hpp"
#include "qbss/varapprox.hpp"

using namespace qbss;

namespace {

struct Instance {
  ExperimentConfig cfg;
  RegressionData data;
  std::unique_ptr<GaussianRegressionQL> ql;
  PriorSpec prior = PriorSpec::make(2.0, 1.0, 2.0, 1);
  ModelState init;

  explicit Instance(int p, int n = 500) {
    cfg.p = p;
    cfg.n = n;
    cfg.s_star = 10;
    cfg.seed = 1;
    Rng rng(cfg.seed);
    data = simulate_regression(cfg, rng);
    ql = std::make_unique<GaussianRegressionQL>(data.X, data.y, 1.0);
    prior = cfg.make_prior(p);
    init = lasso_init(*ql, default_lasso_lambda(*ql));
  }
};

void BM_flip_sweep(benchmark::State& state) {
  const Instance inst(static_cast<int>(state.range(0)));
  SamplerConfig cfg;
  ModelState s = inst.init;
  Rng rng(2);
  for (auto _ : state) {
    step_delta(inst.prior, *inst.ql, s, cfg, rng);
    benchmark::DoNotOptimize(s.delta.active_count());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_flip_sweep)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

void BM_theta_draw(benchmark::State& state) {
  const Instance inst(static_cast<int>(state.range(0)));
  ModelState s = inst.init;
  Rng rng(3);
  for (auto _ : state) {
    step_theta_linear(inst.prior, *inst.ql, s, rng);
    benchmark::DoNotOptimize(s.theta.sum());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_theta_draw)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

void BM_cavi_iteration_skinny(benchmark::State& state) {
  const Instance inst(static_cast<int>(state.range(0)));
  const SparsityTemplate tmpl = SparsityTemplate::skinny(inst.cfg.p);
  VariationalState st =
      make_cavi_init(inst.prior, *inst.ql, tmpl, inst.init.delta, inst.init.theta);
  for (auto _ : state) {
    cavi_update_alpha(st, inst.prior, *inst.ql);
    cavi_update_gaussian(st, inst.prior, *inst.ql, tmpl);
    benchmark::DoNotOptimize(st.alpha.sum());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_cavi_iteration_skinny)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

void BM_cavi_iteration_midsize(benchmark::State& state) {
  const Instance inst(static_cast<int>(state.range(0)));
  BinaryModel bits(inst.cfg.p);
  for (int j = 0; j < 100; ++j) bits.set(j, true);
  const SparsityTemplate tmpl{bits};
  VariationalState st =
      make_cavi_init(inst.prior, *inst.ql, tmpl, inst.init.delta, inst.init.theta);
  for (auto _ : state) {
    cavi_update_alpha(st, inst.prior, *inst.ql);
    cavi_update_gaussian(st, inst.prior, *inst.ql, tmpl);
    benchmark::DoNotOptimize(st.alpha.sum());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_cavi_iteration_midsize)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

void BM_cavi_iteration_full(benchmark::State& state) {
  const Instance inst(static_cast<int>(state.range(0)));
  const SparsityTemplate tmpl = SparsityTemplate::full(inst.cfg.p);
  VariationalState st =
      make_cavi_init(inst.prior, *inst.ql, tmpl, inst.init.delta, inst.init.theta);
  for (auto _ : state) {
    cavi_update_alpha(st, inst.prior, *inst.ql);
    cavi_update_gaussian(st, inst.prior, *inst.ql, tmpl);
    benchmark::DoNotOptimize(st.alpha.sum());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_cavi_iteration_full)->RangeMultiplier(2)->Range(256, 1024)->Complexity();

}  // namespace

BENCHMARK_MAIN();
