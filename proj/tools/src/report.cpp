#include "report.hpp"

#include <algorithm>

namespace teamdiag::cli {

nlohmann::json rational_json(const Rational& r) {
  return {{"num", r.numerator_str()},
          {"den", r.denominator_str()},
          {"decimal", r.to_decimal(6)}};
}

std::string rational_text(const Rational& r) {
  return r.to_string() + " (" + r.to_decimal(6) + ")";
}

namespace {

nlohmann::json cause_json(const hp::CauseWithWitness& cw) {
  nlohmann::json cause = nlohmann::json::object();
  for (const auto& [name, value] : cw.cause.conjuncts) cause[name] = value ? 1 : 0;
  nlohmann::json contingency = nlohmann::json::object();
  for (const auto& [name, value] : cw.witness.contingency)
    contingency[name] = value ? 1 : 0;
  nlohmann::json alternate = nlohmann::json::object();
  for (const auto& [name, value] : cw.witness.alternate)
    alternate[name] = value ? 1 : 0;
  return {{"cause", cause},
          {"witness",
           {{"contingency", contingency}, {"alternate", alternate}}}};
}

std::string cause_text(const hp::CauseWithWitness& cw) {
  std::string out = cw.cause.to_text() + "  witness W={";
  bool first = true;
  for (const auto& [name, value] : cw.witness.contingency) {
    if (!first) out += ", ";
    first = false;
    out += name + "=" + (value ? "1" : "0");
  }
  out += "} x'={";
  first = true;
  for (const auto& [name, value] : cw.witness.alternate) {
    if (!first) out += ", ";
    first = false;
    out += name + "=" + (value ? "1" : "0");
  }
  return out + "}";
}

nlohmann::json context_assignment(const CausalModel& m, const Context& ctx) {
  nlohmann::json out = nlohmann::json::object();
  for (VarId id : m.exogenous())
    out[m.name(id)] = ctx.value(m.exo_index(id)) ? 1 : 0;
  return out;
}

}  // namespace

nlohmann::json report_json(const ReportInputs& in) {
  const plan::PlanModelBinding& binding = *in.binding;
  const diag::DiagnosisResult& result = *in.result;
  const CausalModel& m = *binding.model;

  nlohmann::json j;
  j["plan"] = {{"tasks", binding.source.plan.num_tasks()},
               {"agents", binding.source.plan.agents()},
               {"postcondition_minimal", binding.postcondition_minimal}};
  j["model"] = {{"endogenous", m.endogenous().size()},
                {"exogenous", m.exogenous().size()},
                {"monotone", m.monotone()},
                {"conjunctive", m.conjunctive()}};
  j["algorithm"] = diag::to_string(result.path);
  j["admissible_contexts"] = result.contexts.size();

  nlohmann::json contexts = nlohmann::json::array();
  for (size_t i = 0; i < result.contexts.size(); ++i) {
    const diag::ContextDiagnosis& cd = result.contexts[i];
    nlohmann::json c;
    c["index"] = i;
    c["assignment"] = context_assignment(m, cd.context);
    c["probability"] = rational_json(result.probabilities[i]);
    c["plan_failed"] = cd.plan_failed;
    nlohmann::json causes = nlohmann::json::array();
    for (const hp::CauseWithWitness& cw : cd.causes) causes.push_back(cause_json(cw));
    c["causes"] = causes;
    nlohmann::json resp = nlohmann::json::object();
    for (const auto& [agent, r] : cd.agent_responsibility)
      resp[agent] = rational_json(r);
    c["agent_responsibility"] = resp;
    if (in.show_debug_causes && i < in.debug_causes.size()) {
      nlohmann::json dbg = nlohmann::json::array();
      for (const hp::CauseWithWitness& cw : in.debug_causes[i])
        dbg.push_back(cause_json(cw));
      c["causes_all_variables"] = dbg;
    }
    contexts.push_back(std::move(c));
  }
  j["contexts"] = std::move(contexts);

  nlohmann::json agents = nlohmann::json::object();
  for (const auto& [agent, blame] : result.agent_blame) {
    agents[agent] = {
        {"blame", rational_json(blame)},
        {"max_responsibility",
         rational_json(result.agent_max_responsibility.at(agent))}};
  }
  j["agents"] = std::move(agents);
  if (result.oracle_checked) j["oracle"] = "agree";
  j["timings"] = {{"compile_ms", in.compile_ms}, {"diagnose_ms", in.diagnose_ms}};
  return j;
}

void report_text(std::ostream& os, const ReportInputs& in) {
  const plan::PlanModelBinding& binding = *in.binding;
  const diag::DiagnosisResult& result = *in.result;
  const CausalModel& m = *binding.model;

  os << "plan: " << binding.source.plan.num_tasks() << " tasks, "
     << binding.source.plan.agents().size() << " agents, goal-achieving"
     << (binding.postcondition_minimal ? ", postcondition-minimal" : "") << "\n";
  os << "model: " << m.endogenous().size() << " endogenous / "
     << m.exogenous().size() << " exogenous variables"
     << (m.conjunctive() ? ", conjunctive" : ", monotone") << "\n";
  os << "algorithm: " << diag::to_string(result.path) << "\n";
  os << "admissible contexts: " << result.contexts.size() << "\n";

  for (size_t i = 0; i < result.contexts.size(); ++i) {
    const diag::ContextDiagnosis& cd = result.contexts[i];
    os << "context #" << i << "  probability "
       << rational_text(result.probabilities[i]) << "\n";
    os << "  assignment:";
    for (VarId id : m.exogenous())
      os << " " << m.name(id) << "=" << (cd.context.value(m.exo_index(id)) ? 1 : 0);
    os << "\n";
    os << "  plan failed: " << (cd.plan_failed ? "yes" : "no") << "\n";
    for (const hp::CauseWithWitness& cw : cd.causes)
      os << "  cause: " << cause_text(cw) << "\n";
    os << "  responsibility:";
    bool first = true;
    for (const auto& [agent, r] : cd.agent_responsibility) {
      os << (first ? " " : ", ") << agent << " = " << rational_text(r);
      first = false;
    }
    os << "\n";
    if (in.show_debug_causes && i < in.debug_causes.size()) {
      for (const hp::CauseWithWitness& cw : in.debug_causes[i])
        os << "  cause over all variables: " << cause_text(cw) << "\n";
    }
  }

  os << "agent summary:\n";
  for (const auto& [agent, blame] : result.agent_blame) {
    os << "  " << agent << ": max responsibility "
       << rational_text(result.agent_max_responsibility.at(agent)) << ", blame "
       << rational_text(blame) << "\n";
  }
  if (result.oracle_checked) os << "oracle: agree\n";
  os << "timings: compile " << in.compile_ms << " ms, diagnose "
     << in.diagnose_ms << " ms\n";
}

}  // namespace teamdiag::cli
