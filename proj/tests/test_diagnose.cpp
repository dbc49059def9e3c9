#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "teamdiag/diagnose.hpp"
#include "teamdiag/error.hpp"
#include "teamdiag/generate.hpp"

using namespace teamdiag;

namespace {

std::string data_file(const std::string& name) {
  std::ifstream in(std::string(TEAMDIAG_DATA_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

plan::PlanModelBinding compiled(const std::string& file) {
  return plan::compile(plan::parse_plan(data_file(file)));
}

diag::Observation obs_from(const std::string& file) {
  return diag::parse_observation(data_file(file));
}

bool ctx_value(const plan::PlanModelBinding& b, const Context& ctx,
               const std::string& exo_name) {
  return ctx.value(b.model->exo_index(b.model->require_var(exo_name)));
}

}  // namespace

TEST_CASE("P1 observation pins a single context") {
  plan::PlanModelBinding b = compiled("p1_plan.json");
  std::vector<Context> ctxs = diag::infer_contexts(b, obs_from("p1_observation.json"));
  REQUIRE(ctxs.size() == 1);
  CHECK(ctx_value(b, ctxs[0], "U(a1,t1)"));        // performed => intended
  CHECK_FALSE(ctx_value(b, ctxs[0], "U(a2,t2)"));  // enabled but unperformed
  CHECK(ctx_value(b, ctxs[0], "U(noclob(Start,t2,t1))"));
}

TEST_CASE("P2 all-unperformed observation leaves two contexts") {
  plan::PlanModelBinding b = compiled("p2_plan.json");
  std::vector<Context> ctxs = diag::infer_contexts(b, obs_from("p2_observation.json"));
  REQUIRE(ctxs.size() == 2);
  // lexicographic: the a1-unwilling context sorts first
  CHECK_FALSE(ctx_value(b, ctxs[0], "U(a1,t1)"));
  CHECK(ctx_value(b, ctxs[1], "U(a1,t1)"));
  for (const Context& u : ctxs) {
    CHECK_FALSE(ctx_value(b, u, "U(a2,t0)"));
    CHECK_FALSE(ctx_value(b, u, "U(a2,t2)"));
    CHECK(ctx_value(b, u, "U(noclob(Start,t2,t1))"));  // defaulted
  }
}

TEST_CASE("contradictory observations cite the violated equation") {
  plan::PlanModelBinding b = compiled("p1_plan.json");
  diag::Observation obs;
  obs.performed["t1"] = true;
  obs.intended["t1"] = false;
  try {
    diag::infer_contexts(b, obs);
    FAIL("expected InconsistentObservation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InconsistentObservation);
    CHECK(std::string(e.what()).find("perf(t1)") != std::string::npos);
  }
}

TEST_CASE("inference agrees with brute-force enumeration") {
  for (uint64_t seed = 1300; seed < 1330; ++seed) {
    gen::PlanSpec spec;
    spec.max_tasks = 6;
    spec.postcondition_minimal = (seed % 2) == 0;
    plan::PlanFile pf = gen::random_plan(seed, spec);
    plan::PlanModelBinding b = plan::compile(pf);
    const CausalModel& m = *b.model;
    if (m.exogenous().size() > 12) continue;

    // random ground truth, random partial observation of performance
    gen::Rng rng(seed * 17 + 3);
    std::map<std::string, bool> intentions;
    for (const plan::IntentionVar& iv : b.intentions)
      intentions[iv.task] = rng.chance(500);
    std::map<plan::NoclobTriple, bool> noclob;
    for (const plan::NoclobVar& nv : b.noclobs) noclob[nv.triple] = true;
    Assignment truth = evaluate(m, plan_context(b, intentions, noclob));

    diag::Observation obs;
    for (const plan::IntentionVar& iv : b.intentions)
      if (rng.chance(600))
        obs.performed[iv.task] =
            truth.value(m.require_var("perf(" + iv.task + ")"));

    std::vector<Context> inferred = diag::infer_contexts(b, obs);

    // brute force: every exogenous assignment with defaulted noclob values,
    // filtered by matching every observed value
    std::set<std::vector<uint8_t>> expect;
    const size_t nu = m.exogenous().size();
    for (uint64_t bits = 0; bits < (1ull << nu); ++bits) {
      std::vector<uint8_t> exo(nu);
      for (size_t i = 0; i < nu; ++i) exo[i] = (bits >> i) & 1;
      Context ctx(exo);
      bool ok = true;
      for (const plan::NoclobVar& nv : b.noclobs)
        ok &= ctx.value(m.exo_index(m.require_var(nv.exo)));
      if (!ok) continue;
      Assignment a = evaluate(m, ctx);
      for (const auto& [task, v] : obs.performed)
        ok &= a.value(m.require_var("perf(" + task + ")")) == v;
      if (ok) expect.insert(exo);
    }
    std::set<std::vector<uint8_t>> got;
    for (const Context& ctx : inferred) got.insert(ctx.raw());
    CHECK(got == expect);
  }
}

TEST_CASE("enumeration budget") {
  plan::PlanModelBinding b = compiled("p2_plan.json");
  diag::InferOptions opt;
  opt.max_unknowns = 0;
  try {
    diag::infer_contexts(b, {}, opt);
    FAIL("expected EnumerationBudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EnumerationBudgetExceeded);
  }
}

TEST_CASE("P1 agent responsibilities in the failure context") {
  plan::PlanModelBinding b = compiled("p1_plan.json");
  std::vector<Context> ctxs = diag::infer_contexts(b, obs_from("p1_observation.json"));
  REQUIRE(ctxs.size() == 1);
  CHECK(diag::agent_responsibility(b, ctxs[0], "a2") == Rational(1));
  CHECK(diag::agent_responsibility(b, ctxs[0], "a1") == Rational(0));
  CHECK_THROWS_AS(diag::agent_responsibility(b, ctxs[0], "nobody"), Error);
}

TEST_CASE("responsibility demands a failed plan") {
  plan::PlanModelBinding b = compiled("p1_plan.json");
  Context ok = plan_context(b, {{"t1", true}, {"t2", true}},
                            {{{"Start", "t2", "t1"}, true}});
  try {
    diag::agent_responsibility(b, ok, "a1");
    FAIL("expected PlanDidNotFail");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PlanDidNotFail);
  }
}

TEST_CASE("P2 responsibilities split 1/3 and 2/3 in the unwilling context") {
  plan::PlanModelBinding b = compiled("p2_plan.json");
  std::vector<Context> ctxs = diag::infer_contexts(b, obs_from("p2_observation.json"));
  REQUIRE(ctxs.size() == 2);
  const Context& u2 = ctxs[0];  // a1 unwilling
  CHECK(diag::agent_responsibility(b, u2, "a1") == Rational(1, 3));
  CHECK(diag::agent_responsibility(b, u2, "a2") == Rational(2, 3));
  // the exhaustive engine gives the same numbers
  diag::DiagnoseOptions oracle;
  oracle.force_oracle = true;
  CHECK(diag::agent_responsibility(b, u2, "a1", oracle) == Rational(1, 3));
  CHECK(diag::agent_responsibility(b, u2, "a2", oracle) == Rational(2, 3));
  // willing context: only a2's tasks block the goal
  const Context& u1 = ctxs[1];
  CHECK(diag::agent_responsibility(b, u1, "a1") == Rational(0));
  CHECK(diag::agent_responsibility(b, u1, "a2") == Rational(1));
}

TEST_CASE("P2 blame under the stipulated and the uniform prior") {
  plan::PlanModelBinding b = compiled("p2_plan.json");
  diag::Observation obs = obs_from("p2_observation.json");
  diag::IntentionPrior point = diag::parse_prior(data_file("p2_prior_point.json"));
  CHECK(diag::agent_blame(b, obs, point, "a1") == Rational(0));
  CHECK(diag::agent_blame(b, obs, point, "a2") == Rational(1));
  diag::IntentionPrior half = diag::parse_prior(data_file("p2_prior_half.json"));
  CHECK(diag::agent_blame(b, obs, half, "a1") == Rational(1, 6));
  CHECK(diag::agent_blame(b, obs, half, "a2") == Rational(5, 6));
}

TEST_CASE("a single admissible context makes blame equal responsibility") {
  plan::PlanModelBinding b = compiled("p1_plan.json");
  diag::Observation obs = obs_from("p1_observation.json");
  std::vector<Context> ctxs = diag::infer_contexts(b, obs);
  REQUIRE(ctxs.size() == 1);
  CHECK(diag::agent_blame(b, obs, {}, "a2") ==
        diag::agent_responsibility(b, ctxs[0], "a2"));
}

TEST_CASE("epistemic state weights renormalize the prior") {
  plan::PlanModelBinding b = compiled("p2_plan.json");
  diag::IntentionPrior half = diag::parse_prior(data_file("p2_prior_half.json"));
  hp::EpistemicState state =
      diag::build_epistemic_state(b, obs_from("p2_observation.json"), half);
  REQUIRE(state.probabilities.size() == 2);
  CHECK(state.probabilities[0] == Rational(1, 2));
  CHECK(state.probabilities[1] == Rational(1, 2));
  state.validate();
}

TEST_CASE("all-zero prior mass is an error") {
  plan::PlanModelBinding b = compiled("p2_plan.json");
  diag::Observation obs;
  obs.performed["t1"] = false;  // leaves t0, t1, t2 intentions open
  diag::IntentionPrior impossible;
  impossible.per_task["t0"] = Rational(1);
  impossible.per_task["t1"] = Rational(1);
  // admissible contexts all have t0=0 or t1=0 somewhere in them
  try {
    diag::agent_blame(b, obs, impossible, "a1");
    FAIL("expected ZeroProbabilityMass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroProbabilityMass);
  }
}

TEST_CASE("diagnose pipeline: paths, threads, and oracle cross-check") {
  plan::PlanModelBinding b = compiled("p2_plan.json");
  diag::Observation obs = obs_from("p2_observation.json");
  diag::IntentionPrior half = diag::parse_prior(data_file("p2_prior_half.json"));

  diag::DiagnosisResult one = diag::diagnose(b, obs, half);
  CHECK(one.path == diag::AlgorithmPath::Conjunctive);
  CHECK(one.agent_blame.at("a1") == Rational(1, 6));
  CHECK(one.agent_max_responsibility.at("a1") == Rational(1, 3));
  REQUIRE(one.contexts.size() == 2);
  CHECK(one.contexts[0].causes.size() == 1);
  CHECK(one.contexts[0].causes[0].cause.size() == 3);

  diag::DiagnoseOptions threaded;
  threaded.threads = 4;
  diag::DiagnosisResult many = diag::diagnose(b, obs, half, threaded);
  CHECK(many.agent_blame == one.agent_blame);
  CHECK(many.agent_max_responsibility == one.agent_max_responsibility);
  REQUIRE(many.contexts.size() == one.contexts.size());
  for (size_t i = 0; i < many.contexts.size(); ++i) {
    CHECK(many.contexts[i].agent_responsibility ==
          one.contexts[i].agent_responsibility);
    CHECK(many.contexts[i].causes.size() == one.contexts[i].causes.size());
  }

  diag::DiagnoseOptions checked;
  checked.cross_check = true;
  diag::DiagnosisResult verified = diag::diagnose(b, obs, half, checked);
  CHECK(verified.oracle_checked);
  CHECK(verified.agent_blame == one.agent_blame);
}

TEST_CASE("monotone path matches the oracle on non-postmin plans") {
  // Plan models can exceed what a full-contingency witness search can
  // exhaust; the empty-contingency restriction is equivalent on monotone
  // queries (property-tested in the monotone suite) and keeps the oracle
  // tractable here.
  diag::DiagnoseOptions slow;
  slow.force_oracle = true;
  slow.oracle.witness_mode = hp::WitnessMode::EmptyOnly;
  slow.oracle.max_model_vars = 40;

  int diagnosed = 0;
  for (uint64_t seed = 1400; seed < 1430; ++seed) {
    gen::PlanSpec spec;
    spec.postcondition_minimal = false;
    spec.min_tasks = 3;
    spec.max_tasks = 6;
    plan::PlanFile pf = gen::random_plan(seed, spec);
    plan::PlanModelBinding b = plan::compile(pf);
    if (b.model->conjunctive()) continue;

    gen::Rng rng(seed + 99);
    std::map<std::string, bool> intentions;
    for (const plan::IntentionVar& iv : b.intentions)
      intentions[iv.task] = rng.chance(400);
    std::map<plan::NoclobTriple, bool> noclob;
    for (const plan::NoclobVar& nv : b.noclobs) noclob[nv.triple] = true;
    Context u = plan_context(b, intentions, noclob);
    if (evaluate(*b.model, u).value(b.model->require_var("perf(Finish)")))
      continue;

    diag::DiagnoseOptions fast;  // monotone exact path
    for (const std::string& agent : pf.plan.agents())
      CHECK(diag::agent_responsibility(b, u, agent, fast) ==
            diag::agent_responsibility(b, u, agent, slow));
    ++diagnosed;
  }
  CHECK(diagnosed >= 5);
}

TEST_CASE("observation and prior parsing errors") {
  CHECK_THROWS_AS(diag::parse_observation("["), Error);
  CHECK_THROWS_AS(diag::parse_observation(R"({"nope": {}})"), Error);
  CHECK_THROWS_AS(diag::parse_observation(R"({"performed": {"t1": 2}})"), Error);
  CHECK_THROWS_AS(diag::parse_observation(R"({"clobbered": {"a|b": 1}})"), Error);
  CHECK_THROWS_AS(diag::parse_prior(R"({"default": 0.5})"), Error);  // float
  CHECK_THROWS_AS(diag::parse_prior(R"({"default": "3/2"})"), Error);  // > 1
  diag::IntentionPrior p = diag::parse_prior(
      R"({"default": "1", "per_task": {"t1": {"num": 1, "den": 2}}})");
  CHECK(p.for_task("t1") == Rational(1, 2));
  CHECK(p.for_task("t9") == Rational(1));
}

TEST_CASE("observations must reference plan entities") {
  plan::PlanModelBinding b = compiled("p1_plan.json");
  diag::Observation obs;
  obs.performed["tX"] = true;
  CHECK_THROWS_AS(diag::infer_contexts(b, obs), Error);
  diag::Observation obs2;
  obs2.clobbered[{"a", "b", "c"}] = true;
  CHECK_THROWS_AS(diag::infer_contexts(b, obs2), Error);
}

TEST_CASE("variable-level blame on the compiled P2 model") {
  plan::PlanModelBinding b = compiled("p2_plan.json");
  std::vector<Context> ctxs = diag::infer_contexts(b, obs_from("p2_observation.json"));
  REQUIRE(ctxs.size() == 2);
  const Context& u2 = ctxs[0];  // a1 unwilling
  const Context& u1 = ctxs[1];
  hp::CandidateSet intentions = hp::CandidateSet::of(b.intention_var_names());

  hp::EpistemicState point;
  point.worlds = {{b.model, u1}};
  point.probabilities = {Rational(1)};
  CHECK(hp::degree_of_blame(point, "intd(a1,t1)", false, b.failure_event,
                            intentions) == Rational(0));

  hp::EpistemicState half;
  half.worlds = {{b.model, u1}, {b.model, u2}};
  half.probabilities = {Rational(1, 2), Rational(1, 2)};
  // dr is 0 in u1 and 1/3 in u2
  CHECK(hp::degree_of_blame(half, "intd(a1,t1)", false, b.failure_event,
                            intentions) == Rational(1, 6));
}

TEST_CASE("agent responsibility dominates each controlled variable's dr") {
  for (uint64_t seed = 1500; seed < 1520; ++seed) {
    gen::PlanSpec spec;
    spec.max_tasks = 7;
    spec.postcondition_minimal = (seed % 2) == 0;
    plan::PlanFile pf = gen::random_plan(seed, spec);
    plan::PlanModelBinding b = plan::compile(pf);
    gen::Rng rng(seed ^ 0x5eed);
    std::map<std::string, bool> intentions;
    for (const plan::IntentionVar& iv : b.intentions)
      intentions[iv.task] = rng.chance(400);
    std::map<plan::NoclobTriple, bool> noclob;
    for (const plan::NoclobVar& nv : b.noclobs) noclob[nv.triple] = true;
    Context u = plan_context(b, intentions, noclob);
    if (evaluate(*b.model, u).value(b.model->require_var(b.perf_finish_var)))
      continue;

    monotone::Query q{b.model.get(), Formula::var(b.perf_finish_var),
                      monotone::Polarity::Negative,
                      hp::CandidateSet::of(b.intention_var_names())};
    for (const plan::IntentionVar& iv : b.intentions) {
      Rational var_dr = monotone::responsibility_exact(q, u, iv.var);
      Rational agent_r = diag::agent_responsibility(b, u, iv.agent);
      CHECK(agent_r >= var_dr);
    }
  }
}

TEST_CASE("m-counts within one cause partition across agents") {
  plan::PlanModelBinding b = compiled("p2_plan.json");
  std::vector<Context> ctxs = diag::infer_contexts(b, obs_from("p2_observation.json"));
  diag::DiagnosisResult result =
      diag::diagnose(b, obs_from("p2_observation.json"), {});
  for (const diag::ContextDiagnosis& cd : result.contexts) {
    for (const hp::CauseWithWitness& cw : cd.causes) {
      size_t total = 0;
      for (const std::string& agent : b.source.plan.agents()) {
        for (const auto& [var, value] : cw.cause.conjuncts) {
          (void)value;
          for (const plan::IntentionVar& iv : b.intentions)
            if (iv.var == var && iv.agent == agent) ++total;
        }
      }
      CHECK(total == cw.cause.size());
    }
  }
}

TEST_CASE("blame lies between the extremes of per-context responsibility") {
  plan::PlanModelBinding b = compiled("p2_plan.json");
  diag::Observation obs = obs_from("p2_observation.json");
  diag::IntentionPrior prior = diag::parse_prior(R"({"per_task": {"t1": "2/7"}})");
  diag::DiagnosisResult result = diag::diagnose(b, obs, prior);
  for (const std::string& agent : b.source.plan.agents()) {
    Rational lo = result.contexts[0].agent_responsibility.at(agent);
    Rational hi = lo;
    for (const diag::ContextDiagnosis& cd : result.contexts) {
      const Rational& r = cd.agent_responsibility.at(agent);
      if (r < lo) lo = r;
      if (hi < r) hi = r;
    }
    CHECK(lo <= result.agent_blame.at(agent));
    CHECK(result.agent_blame.at(agent) <= hi);
  }
}
