#pragma once

#include <map>
#include <string>
#include <vector>

#include "teamdiag/compile.hpp"
#include "teamdiag/hp.hpp"
#include "teamdiag/model.hpp"
#include "teamdiag/monotone.hpp"
#include "teamdiag/rational.hpp"

namespace teamdiag::diag {

/// Partial execution knowledge. `performed` gives observed perf(t) values,
/// `intended` observed intentions, `clobbered` observed clobber events
/// (1 = the clobberer ran inside the window, i.e. noclob = 0).
struct Observation {
  std::map<std::string, bool> performed;
  std::map<std::string, bool> intended;
  std::map<plan::NoclobTriple, bool> clobbered;
};

/// {"performed": {task: 0|1}, "clobbered": {"s|t'|t": 0|1},
///  "intended": {task: 0|1}}; all keys optional.
Observation parse_observation(const std::string& json_text);

/// Per-task probability that the assigned agent intended to perform the
/// task; `default_p` applies to unmapped tasks. The default of 1 encodes
/// "agents intend their tasks unless there is evidence otherwise".
struct IntentionPrior {
  Rational default_p = Rational(1);
  std::map<std::string, Rational> per_task;

  const Rational& for_task(const std::string& task) const;
  void validate() const;  // every probability within [0, 1]
};

/// {"default": r, "per_task": {task: r}}; rationals as "num/den" or exact
/// decimal strings, integers, or {"num": ..., "den": ...} objects.
IntentionPrior parse_prior(const std::string& json_text);

struct InferOptions {
  uint32_t max_unknowns = 20;
};

/// All contexts consistent with the observation, in lexicographic order
/// (exogenous variables compared by name). Observed values pin their
/// exogenous variables, consequences are propagated through the equations
/// (perf(t)=1 forces intd and en; perf(t)=0 with en known 1 forces intd=0),
/// unobserved noclob variables default to 1, and the remaining unknown
/// intentions are enumerated and filtered against every observed value.
std::vector<Context> infer_contexts(const plan::PlanModelBinding& binding,
                                    const Observation& observation,
                                    const InferOptions& options = {});

enum class AlgorithmPath { Conjunctive, Monotone, Oracle };

struct DiagnoseOptions {
  InferOptions infer;
  monotone::SearchOptions search;
  hp::SearchOptions oracle;
  bool force_oracle = false;  // score with the exhaustive engine
  bool cross_check = false;   // run fast path and oracle, fail on divergence
  unsigned threads = 1;
};

/// Degree of responsibility of an agent for perf(Finish)=0 in one context:
/// the maximum m/k over causes (within the intention candidate set) and
/// witnesses, where the agent controls m of the k conjuncts-plus-contingency
/// variables. Raises PlanDidNotFail when the plan succeeded in the context.
Rational agent_responsibility(const plan::PlanModelBinding& binding,
                              const Context& ctx, const std::string& agent,
                              const DiagnoseOptions& options = {});

/// Admissible contexts weighted by the prior: each unknown intention is an
/// independent Bernoulli draw, renormalized over the admissible set.
hp::EpistemicState build_epistemic_state(const plan::PlanModelBinding& binding,
                                         const Observation& observation,
                                         const IntentionPrior& prior,
                                         const InferOptions& options = {});

/// Expected agent responsibility over the epistemic state; contexts where
/// the plan succeeded contribute zero.
Rational agent_blame(const plan::PlanModelBinding& binding,
                     const Observation& observation, const IntentionPrior& prior,
                     const std::string& agent,
                     const DiagnoseOptions& options = {});

struct ContextDiagnosis {
  Context context;
  bool plan_failed = false;
  std::vector<hp::CauseWithWitness> causes;  // over intention candidates
  std::map<std::string, Rational> agent_responsibility;
};

struct DiagnosisResult {
  std::vector<ContextDiagnosis> contexts;
  std::vector<Rational> probabilities;  // aligned with contexts
  std::map<std::string, Rational> agent_blame;
  std::map<std::string, Rational> agent_max_responsibility;
  AlgorithmPath path = AlgorithmPath::Monotone;
  bool oracle_checked = false;
};

/// Full pipeline: infer contexts, compute causes and per-agent
/// responsibility in each, weight by the prior, aggregate blame. The
/// conjunctive fast path is used when the compiled model allows it,
/// the exact monotone search otherwise.
DiagnosisResult diagnose(const plan::PlanModelBinding& binding,
                         const Observation& observation,
                         const IntentionPrior& prior,
                         const DiagnoseOptions& options = {});

const char* to_string(AlgorithmPath path);

}  // namespace teamdiag::diag
