#include <doctest.h>

#include <fstream>
#include <sstream>

#include "teamdiag/compile.hpp"
#include "teamdiag/error.hpp"
#include "teamdiag/generate.hpp"
#include "teamdiag/hp.hpp"
#include "teamdiag/monotone.hpp"

using namespace teamdiag;

namespace {

CausalModel fin_model() {
  return build_model(
      {{"U1", VarKind::Exogenous},
       {"U2", VarKind::Exogenous},
       {"T1", VarKind::Endogenous},
       {"T2", VarKind::Endogenous},
       {"Fin", VarKind::Endogenous}},
      {{"T1", Formula::var("U1")},
       {"T2", Formula::var("U2")},
       {"Fin", Formula::conjunction({Formula::var("T1"), Formula::var("T2")})}});
}

monotone::Query fin_query(const CausalModel& m) {
  return {&m, Formula::var("Fin"), monotone::Polarity::Negative,
          hp::CandidateSet::of({"T1", "T2"})};
}

std::string data_file(const std::string& name) {
  std::ifstream in(std::string(TEAMDIAG_DATA_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

plan::PlanModelBinding compiled_p1() {
  return plan::compile(plan::parse_plan(data_file("p1_plan.json")));
}

}  // namespace

TEST_CASE("find_cause returns the full failed pair in (0,0)") {
  CausalModel m = fin_model();
  Context u = m.make_context({{"U1", false}, {"U2", false}});
  monotone::FindResult res = monotone::find_cause(fin_query(m), u);
  CHECK(res.cause.conjuncts ==
        std::map<std::string, bool>{{"T1", false}, {"T2", false}});
  CHECK(res.witness.contingency.empty());
  CHECK(res.evaluations <= 2 * 2 + 2);
}

TEST_CASE("find_cause on the compiled P1 failure context") {
  plan::PlanModelBinding binding = compiled_p1();
  Context u = plan_context(binding, {{"t1", true}, {"t2", false}},
                           {{{"Start", "t2", "t1"}, true}});
  monotone::Query q{binding.model.get(), Formula::var("perf(Finish)"),
                    monotone::Polarity::Negative,
                    hp::CandidateSet::of(binding.intention_var_names())};
  monotone::FindResult res = monotone::find_cause(q, u);
  CHECK(res.cause.conjuncts ==
        std::map<std::string, bool>{{"intd(a2,t2)", false}});
}

TEST_CASE("find_cause errors") {
  CausalModel m = fin_model();
  // polarity precondition: the event holds in (1,1)
  CHECK_THROWS_AS(
      monotone::find_cause(fin_query(m),
                           m.make_context({{"U1", true}, {"U2", true}})),
      Error);
  // nothing to flip within the candidate set
  monotone::Query narrow{&m, Formula::var("Fin"), monotone::Polarity::Negative,
                         hp::CandidateSet::of({"T2"})};
  try {
    monotone::find_cause(narrow, m.make_context({{"U1", false}, {"U2", true}}));
    FAIL("expected NoCauseInCandidateSet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoCauseInCandidateSet);
  }
  // non-monotone model
  CausalModel neg = build_model(
      {{"U", VarKind::Exogenous},
       {"Y", VarKind::Endogenous},
       {"X", VarKind::Endogenous}},
      {{"Y", Formula::var("U")}, {"X", Formula::negation(Formula::var("Y"))}});
  monotone::Query bad{&neg, Formula::var("X"), monotone::Polarity::Negative,
                      hp::CandidateSet::of({"Y"})};
  CHECK_THROWS_AS(monotone::find_cause(bad, neg.make_context({{"U", true}})),
                  Error);
}

TEST_CASE("check_cause accepts the pair and rejects its parts") {
  CausalModel m = fin_model();
  Context u00 = m.make_context({{"U1", false}, {"U2", false}});
  CHECK(monotone::check_cause(fin_query(m), u00,
                              {{{"T1", false}, {"T2", false}}})
            .is_cause);
  CHECK_FALSE(
      monotone::check_cause(fin_query(m), u00, {{{"T1", false}}}).is_cause);
  // wrong-polarity conjunct is filtered, not an error
  Context u01 = m.make_context({{"U1", false}, {"U2", true}});
  CHECK_FALSE(monotone::check_cause(fin_query(m), u01,
                                    {{{"T1", false}, {"T2", true}}})
                  .is_cause);
}

TEST_CASE("polynomial path stays within the evaluation bound") {
  for (uint64_t seed = 500; seed < 540; ++seed) {
    gen::RandomModel rm = gen::random_model(seed, {.allow_negation = false});
    bool holds = satisfies(rm.model, rm.context, {{}, rm.event});
    monotone::Query q{&rm.model, rm.event,
                      holds ? monotone::Polarity::Positive
                            : monotone::Polarity::Negative,
                      hp::CandidateSet::of(rm.candidates)};
    const uint64_t bound = 2 * rm.candidates.size() + 2;
    try {
      monotone::FindResult found = monotone::find_cause(q, rm.context);
      CHECK(found.evaluations <= bound);
      monotone::CheckResult checked =
          monotone::check_cause(q, rm.context, found.cause);
      CHECK(checked.is_cause);
      CHECK(checked.evaluations <= bound);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoCauseInCandidateSet);
    }
  }
}

TEST_CASE("find_cause output is minimal: dropping any conjunct breaks AC2") {
  for (uint64_t seed = 600; seed < 630; ++seed) {
    gen::RandomModel rm = gen::random_model(seed, {.allow_negation = false});
    bool holds = satisfies(rm.model, rm.context, {{}, rm.event});
    monotone::Polarity pol = holds ? monotone::Polarity::Positive
                                   : monotone::Polarity::Negative;
    monotone::Query q{&rm.model, rm.event, pol, hp::CandidateSet::of(rm.candidates)};
    monotone::FindResult res;
    try {
      res = monotone::find_cause(q, rm.context);
    } catch (const Error&) {
      continue;
    }
    const bool flip_to = pol == monotone::Polarity::Negative;
    for (const auto& [dropped, value] : res.cause.conjuncts) {
      (void)value;
      CausalFormula probe;
      for (const auto& [name, v] : res.cause.conjuncts) {
        (void)v;
        if (name != dropped) probe.interventions.emplace_back(name, flip_to);
      }
      probe.event = rm.event;
      // without `dropped`, the event must stay on its actual side
      CHECK(satisfies(rm.model, rm.context, probe) == holds);
    }
  }
}

TEST_CASE("exact part-of-cause and responsibility on P1") {
  plan::PlanModelBinding binding = compiled_p1();
  Context u = plan_context(binding, {{"t1", true}, {"t2", false}},
                           {{{"Start", "t2", "t1"}, true}});
  monotone::Query q{binding.model.get(), Formula::var("perf(Finish)"),
                    monotone::Polarity::Negative,
                    hp::CandidateSet::of(binding.intention_var_names())};
  CHECK(monotone::is_part_of_cause_exact(q, u, "intd(a2,t2)"));
  // a1 intended its task; intd(a1,t1)=1 has the wrong value for a failure cause
  CHECK_FALSE(monotone::is_part_of_cause_exact(q, u, "intd(a1,t1)"));
  CHECK(monotone::responsibility_exact(q, u, "intd(a2,t2)") == Rational(1));
  CHECK(monotone::responsibility_exact(q, u, "intd(a1,t1)") == Rational(0));
}

TEST_CASE("responsibility_exact matches the worked two-task values") {
  CausalModel m = fin_model();
  CHECK(monotone::responsibility_exact(
            fin_query(m), m.make_context({{"U1", false}, {"U2", false}}),
            "T1") == Rational(1, 2));
  CHECK(monotone::responsibility_exact(
            fin_query(m), m.make_context({{"U1", false}, {"U2", true}}),
            "T1") == Rational(1));
}

TEST_CASE("five failed conjuncts give responsibility 1/5") {
  std::vector<Variable> vars;
  std::vector<std::pair<std::string, Formula>> eqs;
  std::vector<Formula> conj;
  std::map<std::string, bool> bits;
  std::vector<std::string> cands;
  for (int i = 1; i <= 5; ++i) {
    std::string u = "U" + std::to_string(i), t = "T" + std::to_string(i);
    vars.push_back({u, VarKind::Exogenous});
    vars.push_back({t, VarKind::Endogenous});
    eqs.emplace_back(t, Formula::var(u));
    conj.push_back(Formula::var(t));
    bits[u] = false;
    cands.push_back(t);
  }
  vars.push_back({"Fin", VarKind::Endogenous});
  eqs.emplace_back("Fin", Formula::conjunction(std::move(conj)));
  CausalModel m = build_model(std::move(vars), std::move(eqs));
  monotone::Query q{&m, Formula::var("Fin"), monotone::Polarity::Negative,
                    hp::CandidateSet::of(cands)};
  Context u = m.make_context(bits);
  for (const std::string& t : cands)
    CHECK(monotone::responsibility_exact(q, u, t) == Rational(1, 5));
}

TEST_CASE("exact search honors its budget") {
  CausalModel m = fin_model();
  Context u = m.make_context({{"U1", false}, {"U2", false}});
  monotone::SearchOptions starved;
  starved.max_nodes = 1;
  try {
    monotone::is_part_of_cause_exact(fin_query(m), u, "T1", starved);
    FAIL("expected SearchBudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SearchBudgetExceeded);
  }
}

TEST_CASE("fast paths agree with the exhaustive engine on random monotone models") {
  int compared = 0;
  for (uint64_t seed = 700; seed < 760; ++seed) {
    gen::RandomModel rm =
        gen::random_model(seed, {.max_endo = 10, .allow_negation = false});
    bool holds = satisfies(rm.model, rm.context, {{}, rm.event});
    monotone::Polarity pol =
        holds ? monotone::Polarity::Positive : monotone::Polarity::Negative;
    Formula event = holds ? rm.event : Formula::negation(rm.event);
    monotone::Query q{&rm.model, rm.event, pol, hp::CandidateSet::of(rm.candidates)};

    hp::Engine oracle(rm.model, rm.context, event,
                      hp::CandidateSet::of(rm.candidates));
    hp::SearchOptions empty_only;
    empty_only.witness_mode = hp::WitnessMode::EmptyOnly;
    hp::Engine oracle_empty(rm.model, rm.context, event,
                            hp::CandidateSet::of(rm.candidates), empty_only);
    const auto& causes = oracle.enumerate_causes();

    // find_cause output passes the oracle's full check
    try {
      monotone::FindResult found = monotone::find_cause(q, rm.context);
      CHECK(oracle.is_actual_cause(found.cause).has_value());
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::NoCauseInCandidateSet);
      CHECK(causes.empty());
    }

    // exact enumeration equals the oracle's cause set
    auto exact = monotone::enumerate_causes_exact(q, rm.context);
    REQUIRE(exact.size() == causes.size());
    for (size_t i = 0; i < exact.size(); ++i)
      CHECK(exact[i].conjuncts == causes[i].cause.conjuncts);

    Assignment actual = evaluate(rm.model, rm.context);
    const bool origin = pol == monotone::Polarity::Positive;
    for (const std::string& name : rm.candidates) {
      bool value = actual.value(rm.model.require_var(name));
      // verdict-for-verdict agreement on part-of-cause
      CHECK(monotone::is_part_of_cause_exact(q, rm.context, name) ==
            (value == origin && oracle.is_part_of_cause(name, value)));
      // responsibility agreement, and full-witness search never beats the
      // empty-witness restriction on monotone queries
      if (value == origin) {
        Rational dr_full = oracle.degree_of_responsibility(name, value);
        Rational dr_empty = oracle_empty.degree_of_responsibility(name, value);
        CHECK(dr_full == dr_empty);
        CHECK(monotone::responsibility_exact(q, rm.context, name) == dr_full);
        ++compared;
      }
    }
  }
  CHECK(compared > 50);
}

TEST_CASE("conjunctive fast path: unique cause and 1/k responsibilities") {
  CausalModel m = fin_model();
  Context u = m.make_context({{"U1", false}, {"U2", false}});
  auto res = monotone::conjunctive_cause_and_responsibility(fin_query(m), u);
  REQUIRE(res.causes.size() == 1);
  CHECK(res.causes[0].conjuncts ==
        std::map<std::string, bool>{{"T1", false}, {"T2", false}});
  CHECK(res.responsibility.at("T1") == Rational(1, 2));
  CHECK(res.responsibility.at("T2") == Rational(1, 2));
}

TEST_CASE("conjunctive fast path: single-variable but-for cause") {
  CausalModel m = build_model(
      {{"U", VarKind::Exogenous}, {"T1", VarKind::Endogenous},
       {"Fin", VarKind::Endogenous}},
      {{"T1", Formula::var("U")}, {"Fin", Formula::var("T1")}});
  monotone::Query q{&m, Formula::var("Fin"), monotone::Polarity::Negative,
                    hp::CandidateSet::of({"T1"})};
  auto res = monotone::conjunctive_cause_and_responsibility(
      q, m.make_context({{"U", false}}));
  REQUIRE(res.causes.size() == 1);
  CHECK(res.causes[0].conjuncts == std::map<std::string, bool>{{"T1", false}});
  CHECK(res.responsibility.at("T1") == Rational(1));
}

TEST_CASE("conjunctive positive polarity: cone 1-variables are but-for causes") {
  CausalModel m = fin_model();
  monotone::Query q{&m, Formula::var("Fin"), monotone::Polarity::Positive,
                    hp::CandidateSet::of({"T1", "T2"})};
  auto res = monotone::conjunctive_cause_and_responsibility(
      q, m.make_context({{"U1", true}, {"U2", true}}));
  REQUIRE(res.causes.size() == 2);
  CHECK(res.responsibility.at("T1") == Rational(1));
  CHECK(res.responsibility.at("T2") == Rational(1));
}

TEST_CASE("conjunctive path rejects dependent candidate sets") {
  CausalModel m = fin_model();
  monotone::Query q{&m, Formula::var("Fin"), monotone::Polarity::Negative,
                    hp::CandidateSet::of({"T1", "Fin"})};  // Fin depends on T1
  try {
    monotone::conjunctive_cause_and_responsibility(
        q, m.make_context({{"U1", false}, {"U2", false}}));
    FAIL("expected CandidateNotIndependent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CandidateNotIndependent);
  }
}

TEST_CASE("conjunctive path rejects disjunctive models") {
  CausalModel m = build_model(
      {{"U1", VarKind::Exogenous}, {"U2", VarKind::Exogenous},
       {"A", VarKind::Endogenous}, {"B", VarKind::Endogenous},
       {"Fin", VarKind::Endogenous}},
      {{"A", Formula::var("U1")},
       {"B", Formula::var("U2")},
       {"Fin", Formula::disjunction({Formula::var("A"), Formula::var("B")})}});
  monotone::Query q{&m, Formula::var("Fin"), monotone::Polarity::Negative,
                    hp::CandidateSet::of({"A", "B"})};
  CHECK_THROWS_AS(monotone::conjunctive_cause_and_responsibility(
                      q, m.make_context({{"U1", false}, {"U2", false}})),
                  Error);
}

TEST_CASE("conjunctive path reports no cause when a non-candidate zero blocks") {
  // Fin = T1 & N; N = U2 stays 0, so no intention-only cause exists
  CausalModel m = build_model(
      {{"U1", VarKind::Exogenous}, {"U2", VarKind::Exogenous},
       {"T1", VarKind::Endogenous}, {"N", VarKind::Endogenous},
       {"Fin", VarKind::Endogenous}},
      {{"T1", Formula::var("U1")},
       {"N", Formula::var("U2")},
       {"Fin", Formula::conjunction({Formula::var("T1"), Formula::var("N")})}});
  monotone::Query q{&m, Formula::var("Fin"), monotone::Polarity::Negative,
                    hp::CandidateSet::of({"T1"})};
  Context u = m.make_context({{"U1", false}, {"U2", false}});
  auto res = monotone::conjunctive_cause_and_responsibility(q, u);
  CHECK(res.causes.empty());
  CHECK(res.responsibility.at("T1") == Rational(0));
  // the oracle agrees: no cause ranges over {T1}
  CHECK(hp::enumerate_causes(m, u, Formula::negation(Formula::var("Fin")),
                             hp::CandidateSet::of({"T1"}))
            .empty());
}
