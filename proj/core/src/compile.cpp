#include "teamdiag/compile.hpp"

#include <algorithm>
#include <set>

#include "json_util.hpp"
#include "teamdiag/error.hpp"

namespace teamdiag::plan {

namespace {

std::string perf_name(const std::string& task) { return "perf(" + task + ")"; }
std::string en_name(const std::string& task) { return "en(" + task + ")"; }
std::string intd_name(const std::string& agent, const std::string& task) {
  return "intd(" + agent + "," + task + ")";
}
std::string noclob_name(const NoclobTriple& triple) {
  return "noclob(" + triple.to_text() + ")";
}

Formula conj_of(std::vector<Formula> parts) {
  if (parts.size() == 1) return parts[0];
  return Formula::conjunction(std::move(parts));
}

}  // namespace

const IntentionVar& PlanModelBinding::intention_for_task(const std::string& task) const {
  for (const IntentionVar& iv : intentions)
    if (iv.task == task) return iv;
  raise(ErrorCode::UnknownTask, "no intention variable for task '" + task + "'");
}

std::vector<std::string> PlanModelBinding::intention_var_names() const {
  std::vector<std::string> out;
  for (const IntentionVar& iv : intentions) out.push_back(iv.var);
  std::sort(out.begin(), out.end());
  return out;
}

PlanModelBinding compile(const PlanFile& pf, const EstOptions& options) {
  const TeamPlan& plan = pf.plan;
  const PlanningDomain& domain = pf.domain;

  PlanModelBinding binding;
  binding.source = pf;
  try {
    binding.analysis = analyze_all(plan, domain, options);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnestablishableLiteral)
      raise(ErrorCode::PlanDoesNotAchieveGoal,
            std::string("plan does not achieve its goal: ") + e.what());
    throw;
  }
  binding.postcondition_minimal = true;
  for (const EstablishingSet& est : binding.analysis)
    if (est.sets.size() != 1) binding.postcondition_minimal = false;

  // gather noclob triples (sorted, deduplicated across consumers)
  std::set<NoclobTriple> triples;
  for (TaskId t = 0; t < plan.num_tasks(); ++t)
    for (const auto& [s, c] : binding.analysis[t].clob_pairs)
      triples.insert({s, c, plan.name(t)});

  std::vector<Variable> vars;
  std::vector<std::pair<std::string, Formula>> equations;

  for (TaskId t = 0; t < plan.num_tasks(); ++t) {
    const std::string& task = plan.name(t);
    const bool has_pre = !domain.task(task).pre.empty();
    if (plan.is_middle(t)) {
      IntentionVar iv;
      iv.task = task;
      iv.agent = plan.agent_of(t);
      iv.var = intd_name(iv.agent, task);
      iv.exo = "U(" + iv.agent + "," + task + ")";
      vars.push_back({iv.exo, VarKind::Exogenous});
      vars.push_back({iv.var, VarKind::Endogenous});
      equations.emplace_back(iv.var, Formula::var(iv.exo));
      binding.intentions.push_back(std::move(iv));
    }
    if (has_pre) vars.push_back({en_name(task), VarKind::Endogenous});
    vars.push_back({perf_name(task), VarKind::Endogenous});
  }
  for (const NoclobTriple& triple : triples) {
    NoclobVar nv;
    nv.triple = triple;
    nv.var = noclob_name(triple);
    nv.exo = "U(" + nv.var + ")";
    vars.push_back({nv.exo, VarKind::Exogenous});
    vars.push_back({nv.var, VarKind::Endogenous});
    equations.emplace_back(nv.var, Formula::var(nv.exo));
    binding.noclobs.push_back(std::move(nv));
  }

  for (TaskId t = 0; t < plan.num_tasks(); ++t) {
    const std::string& task = plan.name(t);
    const EstablishingSet& est = binding.analysis[t];
    const bool has_pre = !domain.task(task).pre.empty();

    if (has_pre) {
      std::vector<Formula> disjuncts;
      for (const auto& s_set : est.sets) {
        std::vector<Formula> parts;
        for (const std::string& s : s_set) parts.push_back(Formula::var(perf_name(s)));
        for (const auto& [s, clobberer] : est.clob_pairs) {
          if (std::find(s_set.begin(), s_set.end(), s) != s_set.end())
            parts.push_back(Formula::var(noclob_name({s, clobberer, task})));
        }
        disjuncts.push_back(conj_of(std::move(parts)));
      }
      Formula en = disjuncts.size() == 1 ? disjuncts[0]
                                         : Formula::disjunction(std::move(disjuncts));
      equations.emplace_back(en_name(task), std::move(en));
    }

    Formula perf = Formula::constant(true);
    if (t == plan.start_id()) {
      perf = Formula::constant(true);  // Start executes automatically
    } else if (t == plan.finish_id()) {
      perf = has_pre ? Formula::var(en_name(task)) : Formula::constant(true);
    } else {
      Formula intd = Formula::var(binding.intention_for_task(task).var);
      perf = has_pre ? Formula::conjunction({Formula::var(en_name(task)), intd})
                     : intd;
    }
    equations.emplace_back(perf_name(task), std::move(perf));
  }

  binding.model = std::make_shared<const CausalModel>(
      build_model(std::move(vars), std::move(equations)));
  binding.perf_finish_var = perf_name(plan.name(plan.finish_id()));
  binding.failure_event = Formula::negation(Formula::var(binding.perf_finish_var));

  const uint64_t t_count = plan.num_tasks();
  const uint64_t bound = t_count * t_count * t_count + 3 * t_count;
  const uint64_t v_count = binding.model->endogenous().size();
  if (v_count > bound)
    throw std::logic_error("compiled model has " + std::to_string(v_count) +
                           " endogenous variables, above the |T|^3 + 3|T| bound");
  if (!binding.model->monotone())
    throw std::logic_error("compiled model is not monotone");
  if (binding.postcondition_minimal && !binding.model->conjunctive())
    throw std::logic_error(
        "postcondition-minimal plan compiled to a non-conjunctive model");
  return binding;
}

Context plan_context(const PlanModelBinding& binding,
                     const std::map<std::string, bool>& intentions,
                     const std::map<NoclobTriple, bool>& noclob_values) {
  std::map<std::string, bool> exo;
  for (const IntentionVar& iv : binding.intentions) {
    auto it = intentions.find(iv.task);
    if (it == intentions.end())
      raise(ErrorCode::PartialIntentions,
            "no intention value for task '" + iv.task + "'");
    exo[iv.exo] = it->second;
  }
  if (intentions.size() != binding.intentions.size())
    for (const auto& [task, value] : intentions) {
      (void)value;
      binding.intention_for_task(task);  // raises for unknown tasks
    }
  for (const NoclobVar& nv : binding.noclobs) {
    auto it = noclob_values.find(nv.triple);
    if (it == noclob_values.end())
      raise(ErrorCode::PartialIntentions,
            "no noclob value for (" + nv.triple.to_text() + ")");
    exo[nv.exo] = it->second;
  }
  return binding.model->make_context(exo);
}

std::string serialize_binding(const PlanModelBinding& binding) {
  nlohmann::json j;
  j["failure_event"] = detail::formula_to_json(binding.failure_event);
  j["intentions"] = binding.intention_var_names();
  std::vector<std::string> noclob;
  for (const NoclobVar& nv : binding.noclobs) noclob.push_back(nv.var);
  std::sort(noclob.begin(), noclob.end());
  j["noclob"] = noclob;
  return j.dump(2);
}

}  // namespace teamdiag::plan
