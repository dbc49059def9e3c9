#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "teamdiag/model.hpp"
#include "teamdiag/plan.hpp"

namespace teamdiag::plan {

struct NoclobTriple {
  std::string establisher, clobberer, consumer;
  auto operator<=>(const NoclobTriple&) const = default;
  std::string to_text() const {
    return establisher + "," + clobberer + "," + consumer;
  }
};

struct IntentionVar {
  std::string var;   // intd(a,t)
  std::string exo;   // U(a,t)
  std::string task;
  std::string agent;
};

struct NoclobVar {
  std::string var;  // noclob(s,t',t)
  std::string exo;  // U(noclob(s,t',t))
  NoclobTriple triple;
};

/// A compiled plan: the causal model plus the mapping between plan entities
/// and variables, the intention candidate set, and the failure event.
struct PlanModelBinding {
  std::shared_ptr<const CausalModel> model;
  PlanFile source;
  std::vector<EstablishingSet> analysis;  // est/clob per task, id order
  std::vector<IntentionVar> intentions;   // task-id order
  std::vector<NoclobVar> noclobs;         // sorted by triple
  bool postcondition_minimal = false;
  std::string perf_finish_var;
  Formula failure_event;  // perf(Finish) = 0

  const IntentionVar& intention_for_task(const std::string& task) const;
  std::vector<std::string> intention_var_names() const;
};

/// Translation of a goal-achieving plan into its causal model:
///   intd(a,t)        = U(a,t)
///   noclob(s,t',t)   = U(noclob(s,t',t))
///   perf(t)          = en(t) & intd(a,t)   (en omitted when pre(t) is empty)
///   perf(Start)      = 1
///   perf(Finish)     = en(Finish)
///   en(t)            = OR over est(t) of (AND perf(s) & AND noclob(s,t',t))
/// where each disjunct's noclob conjuncts range over the clob pairs whose
/// establisher lies in that establishing set. The result is always monotone;
/// postcondition-minimal plans compile to conjunctive models.
PlanModelBinding compile(const PlanFile& pf, const EstOptions& options = {});

/// Assembles a context from per-task intention values (total over the middle
/// tasks) and per-triple noclob values (total over the noclob variables).
Context plan_context(const PlanModelBinding& binding,
                     const std::map<std::string, bool>& intentions,
                     const std::map<NoclobTriple, bool>& noclob_values);

/// Sidecar JSON: {"failure_event": ..., "intentions": [...], "noclob": [...]}.
std::string serialize_binding(const PlanModelBinding& binding);

}  // namespace teamdiag::plan
