// Hot paths of a simulation replicate.
#include <benchmark/benchmark.h>

#include "psprs/generators.hpp"
#include "psprs/grm_fit.hpp"
#include "psprs/mvnorm.hpp"
#include "psprs/procedures.hpp"
#include "psprs/study.hpp"

using namespace psprs;

namespace {

const StudyContext& context() {
  static const StudyContext ctx = [] {
    StudyPlan plan;
    plan.scenarios = {EffectScenario::builtin("null")};
    plan.omnibus.reps = 20000;
    PrepareOptions opts;
    opts.force_irt = true;
    return prepare_study(plan, opts);
  }();
  return ctx;
}

void BM_MvnRectangle(benchmark::State& state) {
  Matrix c = Matrix::Constant(10, 10, 0.4);
  c.diagonal().setOnes();
  RngStream rng(1);
  MvnOptions opt;
  opt.tol = 1e-4;
  for (auto _ : state) benchmark::DoNotOptimize(mvn_rect_upper(Vector::Constant(10, 2.3), c, opt, rng).value);
}
BENCHMARK(BM_MvnRectangle)->Unit(benchmark::kMillisecond);

void BM_Eap(benchmark::State& state) {
  const auto& ctx = context();
  const EapScorer& scorer = *ctx.scheme("original").scorer;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scorer.eap(ctx.pool.week52[i]));
    i = (i + 1) % ctx.pool.size();
  }
}
BENCHMARK(BM_Eap);

void BM_GrmFit(benchmark::State& state) {
  const ResponseRows rows = pool_visits(context().pool);
  for (auto _ : state) benchmark::DoNotOptimize(fit_grm(rows, ScoringScheme::original()).model.fit.log_likelihood);
}
BENCHMARK(BM_GrmFit)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_Replicate(benchmark::State& state) {
  const auto& ctx = context();
  const auto& s = ctx.scheme("original");
  TestAuxiliaries aux;
  aux.scorer = s.scorer.get();
  aux.approx = &*s.approx;
  aux.omnibus_items = ctx.omnibus_items.get();
  aux.omnibus_domains = ctx.omnibus_domains.get();
  const bool with_maxt = state.range(0) != 0;
  std::vector<Method> methods;
  for (Method m : kAllMethods)
    if (with_maxt || m != Method::kMaxT) methods.push_back(m);
  RngStream rng(2);
  for (auto _ : state) {
    const ItemDataset d = gen_bootstrap(ctx.pool, EffectScenario::builtin("d2"), 70, rng);
    benchmark::DoNotOptimize(run_methods(d, methods, aux, rng).size());
  }
}
BENCHMARK(BM_Replicate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
