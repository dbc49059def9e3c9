#include <benchmark/benchmark.h>

#include "teamdiag/diagnose.hpp"
#include "teamdiag/generate.hpp"
#include "teamdiag/hp.hpp"
#include "teamdiag/monotone.hpp"

using namespace teamdiag;

namespace {

plan::PlanModelBinding chain_binding(uint32_t tasks) {
  return plan::compile(gen::chain_plan(tasks));
}

Context all_fail_context(const plan::PlanModelBinding& b) {
  std::map<std::string, bool> intentions;
  for (const plan::IntentionVar& iv : b.intentions) intentions[iv.task] = false;
  std::map<plan::NoclobTriple, bool> noclob;
  for (const plan::NoclobVar& nv : b.noclobs) noclob[nv.triple] = true;
  return plan_context(b, intentions, noclob);
}

void BM_Evaluate(benchmark::State& state) {
  plan::PlanModelBinding b = chain_binding(static_cast<uint32_t>(state.range(0)));
  Context u = all_fail_context(b);
  Evaluator eval(*b.model);
  for (auto _ : state) {
    auto values = eval.evaluate(u);
    benchmark::DoNotOptimize(values.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(b.model->endogenous().size()));
}
BENCHMARK(BM_Evaluate)->Arg(100)->Arg(1000)->Arg(10000);

void BM_CompileChain(benchmark::State& state) {
  plan::PlanFile pf = gen::chain_plan(static_cast<uint32_t>(state.range(0)));
  for (auto _ : state) {
    plan::PlanModelBinding b = plan::compile(pf);
    benchmark::DoNotOptimize(b.model.get());
  }
}
BENCHMARK(BM_CompileChain)->Arg(100)->Arg(1000);

void BM_FindCauseChain(benchmark::State& state) {
  plan::PlanModelBinding b = chain_binding(static_cast<uint32_t>(state.range(0)));
  Context u = all_fail_context(b);
  monotone::Query q{b.model.get(), Formula::var(b.perf_finish_var),
                    monotone::Polarity::Negative,
                    hp::CandidateSet::of(b.intention_var_names())};
  for (auto _ : state) {
    monotone::FindResult res = monotone::find_cause(q, u);
    benchmark::DoNotOptimize(res.cause.size());
  }
}
BENCHMARK(BM_FindCauseChain)->Arg(100)->Arg(300)->Arg(1000);

void BM_ConjunctiveResponsibility(benchmark::State& state) {
  plan::PlanModelBinding b = chain_binding(static_cast<uint32_t>(state.range(0)));
  Context u = all_fail_context(b);
  monotone::Query q{b.model.get(), Formula::var(b.perf_finish_var),
                    monotone::Polarity::Negative,
                    hp::CandidateSet::of(b.intention_var_names())};
  for (auto _ : state) {
    auto res = monotone::conjunctive_cause_and_responsibility(q, u);
    benchmark::DoNotOptimize(res.causes.size());
  }
}
BENCHMARK(BM_ConjunctiveResponsibility)->Arg(100)->Arg(1000);

void BM_OracleEnumerate(benchmark::State& state) {
  gen::ModelSpec spec;
  spec.min_endo = spec.max_endo = static_cast<uint32_t>(state.range(0));
  gen::RandomModel rm = gen::random_model(42, spec);
  Formula event = satisfies(rm.model, rm.context, {{}, rm.event})
                      ? rm.event
                      : Formula::negation(rm.event);
  for (auto _ : state) {
    auto causes = hp::enumerate_causes(rm.model, rm.context, event,
                                       hp::CandidateSet::all_endogenous(rm.model));
    benchmark::DoNotOptimize(causes.size());
  }
}
BENCHMARK(BM_OracleEnumerate)->Arg(8)->Arg(10)->Arg(12);

void BM_DiagnoseP2(benchmark::State& state) {
  plan::PlanFile pf = plan::parse_plan(R"({
    "propositions": ["c", "s", "g"],
    "agents": ["a1", "a2"],
    "tasks": {
      "Start": {"pre": [], "post": ["!c", "!s"]},
      "t0": {"pre": [], "post": ["g"], "agent": "a2"},
      "t1": {"pre": ["!s", "g"], "post": ["c"], "agent": "a1"},
      "t2": {"pre": [], "post": ["s"], "agent": "a2"},
      "Finish": {"pre": ["c", "s"], "post": []}
    },
    "order": [["t0", "t1"], ["t1", "t2"]]
  })");
  plan::PlanModelBinding b = plan::compile(pf);
  diag::Observation obs = diag::parse_observation(
      R"({"performed": {"t0": 0, "t1": 0, "t2": 0}})");
  diag::IntentionPrior prior;
  prior.per_task["t1"] = Rational(1, 2);
  for (auto _ : state) {
    diag::DiagnosisResult res = diag::diagnose(b, obs, prior);
    benchmark::DoNotOptimize(res.agent_blame.size());
  }
}
BENCHMARK(BM_DiagnoseP2);

}  // namespace

BENCHMARK_MAIN();
