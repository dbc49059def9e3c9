#include "teamdiag/diagnose.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <thread>

#include "json_util.hpp"
#include "teamdiag/error.hpp"

namespace teamdiag::diag {

namespace {

Rational rational_from_json(const nlohmann::json& j) {
  if (j.is_string()) return Rational::parse(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_object() && j.contains("num") && j.contains("den")) {
    if (!j["num"].is_number_integer() || !j["den"].is_number_integer())
      raise(ErrorCode::ParseError, "num/den must be integers: " + j.dump());
    return Rational(j["num"].get<long long>(), j["den"].get<long long>());
  }
  raise(ErrorCode::ParseError,
        "rational must be a string, integer, or {\"num\", \"den\"} object, got " +
            j.dump() + " (floating-point JSON numbers are not exact)");
}

plan::NoclobTriple parse_triple(const std::string& key) {
  size_t p1 = key.find('|');
  size_t p2 = p1 == std::string::npos ? std::string::npos : key.find('|', p1 + 1);
  if (p1 == std::string::npos || p2 == std::string::npos ||
      key.find('|', p2 + 1) != std::string::npos)
    raise(ErrorCode::ParseError,
          "clobber key must be \"establisher|clobberer|consumer\", got '" + key + "'");
  return {key.substr(0, p1), key.substr(p1 + 1, p2 - p1 - 1), key.substr(p2 + 1)};
}

bool json_bit(const nlohmann::json& v, const std::string& what) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1))
    return v.get<int>() == 1;
  raise(ErrorCode::ParseError, "value for '" + what + "' must be 0 or 1");
}

}  // namespace

Observation parse_observation(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object())
    raise(ErrorCode::ParseError, "observation must be a JSON object");
  Observation obs;
  if (j.contains("performed"))
    for (const auto& [task, v] : j["performed"].items())
      obs.performed[task] = json_bit(v, task);
  if (j.contains("intended"))
    for (const auto& [task, v] : j["intended"].items())
      obs.intended[task] = json_bit(v, task);
  if (j.contains("clobbered"))
    for (const auto& [key, v] : j["clobbered"].items())
      obs.clobbered[parse_triple(key)] = json_bit(v, key);
  for (const auto& [key, v] : j.items()) {
    (void)v;
    if (key != "performed" && key != "intended" && key != "clobbered")
      raise(ErrorCode::ParseError, "unknown observation key '" + key + "'");
  }
  return obs;
}

const Rational& IntentionPrior::for_task(const std::string& task) const {
  auto it = per_task.find(task);
  return it == per_task.end() ? default_p : it->second;
}

void IntentionPrior::validate() const {
  auto check = [](const Rational& p, const std::string& what) {
    if (p < Rational(0) || p > Rational(1))
      raise(ErrorCode::InvalidArgument,
            "prior probability for " + what + " is " + p.to_string() +
                ", outside [0, 1]");
  };
  check(default_p, "default");
  for (const auto& [task, p] : per_task) check(p, "task '" + task + "'");
}

IntentionPrior parse_prior(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object()) raise(ErrorCode::ParseError, "prior must be a JSON object");
  IntentionPrior prior;
  if (j.contains("default")) prior.default_p = rational_from_json(j["default"]);
  if (j.contains("per_task"))
    for (const auto& [task, v] : j["per_task"].items())
      prior.per_task[task] = rational_from_json(v);
  prior.validate();
  return prior;
}

namespace {

// Three-valued constraint propagation over the compiled equations.
// -1 = unknown. Observed endogenous values and pinned exogenous values are
// the seeds; forward evaluation and backward forcing run to a fixpoint.
struct Propagation {
  const CausalModel& m;
  std::vector<int8_t> val;
  bool changed = false;

  explicit Propagation(const CausalModel& model)
      : m(model), val(model.num_vars(), -1) {}

  [[noreturn]] void conflict(VarId owner) {
    std::string eq = m.is_exogenous(owner)
                         ? m.name(owner) + " (exogenous)"
                         : m.name(owner) + " = " + m.equation(owner).to_text();
    raise(ErrorCode::InconsistentObservation,
          "observation violates equation " + eq);
  }

  void assign(VarId id, bool b, VarId owner) {
    int8_t nb = b ? 1 : 0;
    if (val[id] == -1) {
      val[id] = nb;
      changed = true;
    } else if (val[id] != nb) {
      conflict(owner);
    }
  }

  int8_t eval3(const Formula& f) {
    switch (f.kind()) {
      case Formula::Kind::Const:
        return f.const_value() ? 1 : 0;
      case Formula::Kind::Var:
        return val[m.require_var(f.var_name())];
      case Formula::Kind::Not: {
        int8_t v = eval3(f.args()[0]);
        return v == -1 ? int8_t{-1} : static_cast<int8_t>(1 - v);
      }
      case Formula::Kind::And:
      case Formula::Kind::Or: {
        const bool is_and = f.kind() == Formula::Kind::And;
        const int8_t absorbing = is_and ? 0 : 1;
        bool unknown = false;
        for (const Formula& a : f.args()) {
          int8_t v = eval3(a);
          if (v == absorbing) return absorbing;
          if (v == -1) unknown = true;
        }
        return unknown ? int8_t{-1} : static_cast<int8_t>(1 - absorbing);
      }
    }
    return -1;
  }

  void force(const Formula& f, bool b, VarId owner) {
    switch (f.kind()) {
      case Formula::Kind::Const:
        if (f.const_value() != b) conflict(owner);
        return;
      case Formula::Kind::Var:
        assign(m.require_var(f.var_name()), b, owner);
        return;
      case Formula::Kind::Not:
        force(f.args()[0], !b, owner);
        return;
      case Formula::Kind::And:
      case Formula::Kind::Or: {
        const bool is_and = f.kind() == Formula::Kind::And;
        if (b == is_and) {
          // conjunction true / disjunction false: every part is decided
          for (const Formula& a : f.args()) force(a, b, owner);
          return;
        }
        // conjunction false / disjunction true: forced only when a single
        // undecided part remains
        const Formula* open = nullptr;
        for (const Formula& a : f.args()) {
          int8_t v = eval3(a);
          if (v == (b ? 1 : 0)) return;  // already satisfied
          if (v == -1) {
            if (open != nullptr) return;  // two open parts: nothing to force
            open = &a;
          }
        }
        if (open == nullptr) conflict(owner);
        force(*open, b, owner);
        return;
      }
    }
  }

  void run() {
    do {
      changed = false;
      for (VarId id : m.topo_order()) {
        int8_t v = eval3(m.equation(id));
        if (v != -1) {
          if (val[id] == -1) {
            val[id] = v;
            changed = true;
          } else if (val[id] != v) {
            conflict(id);
          }
        }
        if (val[id] != -1) force(m.equation(id), val[id] != 0, id);
      }
    } while (changed);
  }
};

struct InferOutcome {
  std::vector<Context> contexts;
  std::vector<VarId> unknown_exo;  // name order
};

InferOutcome infer_impl(const plan::PlanModelBinding& binding,
                        const Observation& obs, const InferOptions& options) {
  const CausalModel& m = *binding.model;
  Propagation prop(m);

  // exogenous pins from direct observations and the noclob default
  for (const plan::NoclobVar& nv : binding.noclobs) {
    auto it = obs.clobbered.find(nv.triple);
    bool noclob = it == obs.clobbered.end() ? true : !it->second;
    prop.val[m.require_var(nv.exo)] = noclob ? 1 : 0;
  }
  for (const auto& [triple, v] : obs.clobbered) {
    (void)v;
    bool known = false;
    for (const plan::NoclobVar& nv : binding.noclobs) known |= nv.triple == triple;
    if (!known)
      raise(ErrorCode::InvalidArgument,
            "observation names unknown clobber window (" + triple.to_text() + ")");
  }

  // observed endogenous values
  for (const auto& [task, v] : obs.performed) {
    auto id = m.var_id("perf(" + task + ")");
    if (!id)
      raise(ErrorCode::UnknownTask, "observation of unknown task '" + task + "'");
    prop.val[*id] = v ? 1 : 0;
  }
  for (const auto& [task, v] : obs.intended) {
    const plan::IntentionVar& iv = binding.intention_for_task(task);
    prop.val[m.require_var(iv.var)] = v ? 1 : 0;
  }

  prop.run();

  InferOutcome out;
  for (VarId id : m.exogenous())
    if (prop.val[id] == -1) out.unknown_exo.push_back(id);
  std::sort(out.unknown_exo.begin(), out.unknown_exo.end(),
            [&m](VarId a, VarId b) { return m.name(a) < m.name(b); });
  if (out.unknown_exo.size() > options.max_unknowns)
    raise(ErrorCode::EnumerationBudgetExceeded,
          std::to_string(out.unknown_exo.size()) +
              " undetermined exogenous variables exceed the enumeration cap of " +
              std::to_string(options.max_unknowns));

  // enumerate the unknowns, filter against every observed value
  Evaluator eval(m);
  std::vector<uint8_t> exo_values(m.exogenous().size(), 0);
  const size_t k = out.unknown_exo.size();
  for (uint64_t bits = 0; bits < (1ull << k); ++bits) {
    for (VarId id : m.exogenous())
      if (prop.val[id] != -1) exo_values[m.exo_index(id)] = prop.val[id];
    for (size_t i = 0; i < k; ++i)
      exo_values[m.exo_index(out.unknown_exo[i])] = (bits >> i) & 1;
    Context ctx(exo_values);
    auto values = eval.evaluate(ctx);
    bool match = true;
    for (const auto& [task, v] : obs.performed)
      match &= values[m.require_var("perf(" + task + ")")] == (v ? 1 : 0);
    for (const auto& [task, v] : obs.intended)
      match &= values[m.require_var(binding.intention_for_task(task).var)] ==
               (v ? 1 : 0);
    for (const auto& [triple, v] : obs.clobbered) {
      for (const plan::NoclobVar& nv : binding.noclobs)
        if (nv.triple == triple)
          match &= values[m.require_var(nv.var)] == (v ? 0 : 1);
    }
    if (match) out.contexts.push_back(std::move(ctx));
  }
  if (out.contexts.empty())
    raise(ErrorCode::InconsistentObservation,
          "no context is consistent with the observation");

  // lexicographic order over name-sorted exogenous values
  std::vector<std::pair<std::string, size_t>> named;
  for (VarId id : m.exogenous()) named.emplace_back(m.name(id), m.exo_index(id));
  std::sort(named.begin(), named.end());
  std::sort(out.contexts.begin(), out.contexts.end(),
            [&named](const Context& a, const Context& b) {
              for (const auto& [name, idx] : named) {
                (void)name;
                if (a.value(idx) != b.value(idx)) return !a.value(idx);
              }
              return false;
            });
  return out;
}

}  // namespace

std::vector<Context> infer_contexts(const plan::PlanModelBinding& binding,
                                    const Observation& observation,
                                    const InferOptions& options) {
  return infer_impl(binding, observation, options).contexts;
}

namespace {

struct AgentTally {
  std::map<std::string, Rational> responsibility;  // per agent
};

// One context's causes plus per-agent max m/k, computed on the selected path.
struct ContextScore {
  bool failed = false;
  std::vector<hp::CauseWithWitness> causes;
  AgentTally tally;
};

hp::CauseWithWitness with_flip_witness(const hp::Cause& cause) {
  hp::CauseWithWitness cw;
  cw.cause = cause;
  for (const auto& [name, value] : cause.conjuncts)
    cw.witness.alternate[name] = !value;
  return cw;
}

ContextScore score_context(const plan::PlanModelBinding& binding,
                           const Context& ctx, const DiagnoseOptions& options,
                           AlgorithmPath path) {
  const CausalModel& m = *binding.model;
  ContextScore out;

  Evaluator eval(m);
  auto values = eval.evaluate(ctx);
  out.failed = values[m.require_var(binding.perf_finish_var)] == 0;

  for (const std::string& agent : binding.source.plan.agents())
    out.tally.responsibility[agent] = Rational(0);
  if (!out.failed) return out;

  std::map<std::string, std::string> agent_of_var;
  for (const plan::IntentionVar& iv : binding.intentions)
    agent_of_var[iv.var] = iv.agent;

  auto tally_causes = [&](const std::vector<hp::CauseWithWitness>& causes) {
    for (const hp::CauseWithWitness& cw : causes) {
      const size_t k = cw.cause.size() + cw.witness.contingency.size();
      std::map<std::string, size_t> m_count;
      for (const auto& [var, value] : cw.cause.conjuncts) {
        (void)value;
        auto it = agent_of_var.find(var);
        if (it != agent_of_var.end()) ++m_count[it->second];
      }
      for (const auto& [agent, count] : m_count) {
        Rational share(static_cast<long long>(count), static_cast<long long>(k));
        if (share > out.tally.responsibility[agent])
          out.tally.responsibility[agent] = share;
      }
    }
  };

  monotone::Query query{binding.model.get(),
                        Formula::var(binding.perf_finish_var),
                        monotone::Polarity::Negative,
                        hp::CandidateSet::of(binding.intention_var_names())};

  switch (path) {
    case AlgorithmPath::Conjunctive: {
      auto res = monotone::conjunctive_cause_and_responsibility(query, ctx);
      for (const hp::Cause& c : res.causes) out.causes.push_back(with_flip_witness(c));
      break;
    }
    case AlgorithmPath::Monotone: {
      auto causes = monotone::enumerate_causes_exact(query, ctx, options.search);
      for (const hp::Cause& c : causes) out.causes.push_back(with_flip_witness(c));
      break;
    }
    case AlgorithmPath::Oracle: {
      hp::Engine engine(m, ctx, binding.failure_event, query.candidates,
                        options.oracle);
      out.causes = engine.enumerate_causes();
      break;
    }
  }
  tally_causes(out.causes);
  return out;
}

AlgorithmPath select_path(const plan::PlanModelBinding& binding,
                          const DiagnoseOptions& options) {
  if (options.force_oracle) return AlgorithmPath::Oracle;
  if (binding.model->conjunctive()) return AlgorithmPath::Conjunctive;
  return AlgorithmPath::Monotone;
}

void cross_check_context(const plan::PlanModelBinding& binding,
                         const Context& ctx, const DiagnoseOptions& options,
                         const ContextScore& fast) {
  ContextScore oracle =
      score_context(binding, ctx, options, AlgorithmPath::Oracle);
  auto cause_set = [](const ContextScore& s) {
    std::set<std::string> out;
    for (const hp::CauseWithWitness& cw : s.causes) out.insert(cw.cause.to_text());
    return out;
  };
  if (cause_set(fast) != cause_set(oracle))
    raise(ErrorCode::InvalidArgument,
          "oracle cross-check failed: fast path and exhaustive engine disagree "
          "on the cause set");
  if (fast.tally.responsibility != oracle.tally.responsibility)
    raise(ErrorCode::InvalidArgument,
          "oracle cross-check failed: fast path and exhaustive engine disagree "
          "on agent responsibility");
}

}  // namespace

Rational agent_responsibility(const plan::PlanModelBinding& binding,
                              const Context& ctx, const std::string& agent,
                              const DiagnoseOptions& options) {
  bool known = false;
  for (const std::string& a : binding.source.plan.agents()) known |= a == agent;
  if (!known)
    raise(ErrorCode::InvalidArgument, "unknown agent '" + agent + "'");
  ContextScore score =
      score_context(binding, ctx, options, select_path(binding, options));
  if (!score.failed)
    raise(ErrorCode::PlanDidNotFail,
          "perf(Finish) = 1 in this context; responsibility for failure is "
          "undefined");
  if (options.cross_check) cross_check_context(binding, ctx, options, score);
  return score.tally.responsibility.at(agent);
}

hp::EpistemicState build_epistemic_state(const plan::PlanModelBinding& binding,
                                         const Observation& observation,
                                         const IntentionPrior& prior,
                                         const InferOptions& options) {
  prior.validate();
  InferOutcome inferred = infer_impl(binding, observation, options);
  const CausalModel& m = *binding.model;

  std::map<VarId, Rational> p_one;  // per unknown exogenous intention
  for (VarId id : inferred.unknown_exo) {
    const plan::IntentionVar* iv = nullptr;
    for (const plan::IntentionVar& candidate : binding.intentions)
      if (m.require_var(candidate.exo) == id) iv = &candidate;
    if (iv == nullptr)  // noclobs are pinned, so unknowns are intentions
      raise(ErrorCode::InvalidArgument,
            "no prior applies to exogenous variable '" + m.name(id) + "'");
    p_one.emplace(id, prior.for_task(iv->task));
  }

  hp::EpistemicState state;
  std::vector<Rational> weights;
  Rational total(0);
  for (const Context& ctx : inferred.contexts) {
    Rational w(1);
    for (VarId id : inferred.unknown_exo) {
      const Rational& p = p_one.at(id);
      w *= ctx.value(m.exo_index(id)) ? p : Rational(1) - p;
    }
    weights.push_back(w);
    total += w;
    state.worlds.push_back({binding.model, ctx});
  }
  if (total.is_zero())
    raise(ErrorCode::ZeroProbabilityMass,
          "every admissible context has prior probability 0");
  for (Rational& w : weights) w = w / total;
  state.probabilities = std::move(weights);
  state.validate();
  return state;
}

Rational agent_blame(const plan::PlanModelBinding& binding,
                     const Observation& observation, const IntentionPrior& prior,
                     const std::string& agent, const DiagnoseOptions& options) {
  hp::EpistemicState state =
      build_epistemic_state(binding, observation, prior, options.infer);
  AlgorithmPath path = select_path(binding, options);
  Rational blame(0);
  for (size_t i = 0; i < state.worlds.size(); ++i) {
    if (state.probabilities[i].is_zero()) continue;
    ContextScore score =
        score_context(binding, state.worlds[i].context, options, path);
    if (options.cross_check && score.failed)
      cross_check_context(binding, state.worlds[i].context, options, score);
    auto it = score.tally.responsibility.find(agent);
    if (it == score.tally.responsibility.end())
      raise(ErrorCode::InvalidArgument, "unknown agent '" + agent + "'");
    blame += it->second * state.probabilities[i];
  }
  return blame;
}

DiagnosisResult diagnose(const plan::PlanModelBinding& binding,
                         const Observation& observation,
                         const IntentionPrior& prior,
                         const DiagnoseOptions& options) {
  hp::EpistemicState state =
      build_epistemic_state(binding, observation, prior, options.infer);
  AlgorithmPath path = select_path(binding, options);

  DiagnosisResult result;
  result.path = path;
  result.probabilities = state.probabilities;

  const size_t n = state.worlds.size();
  std::vector<ContextScore> scores(n);
  unsigned threads = std::max(1u, options.threads);
  threads = static_cast<unsigned>(std::min<size_t>(threads, n));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i)
      scores[i] = score_context(binding, state.worlds[i].context, options, path);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::atomic<size_t> next{0};
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            scores[i] =
                score_context(binding, state.worlds[i].context, options, path);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  if (options.cross_check)
    for (size_t i = 0; i < n; ++i)
      cross_check_context(binding, state.worlds[i].context, options, scores[i]);
  result.oracle_checked = options.cross_check;

  for (const std::string& agent : binding.source.plan.agents()) {
    result.agent_blame[agent] = Rational(0);
    result.agent_max_responsibility[agent] = Rational(0);
  }
  for (size_t i = 0; i < n; ++i) {
    ContextDiagnosis cd;
    cd.context = state.worlds[i].context;
    cd.plan_failed = scores[i].failed;
    cd.causes = std::move(scores[i].causes);
    cd.agent_responsibility = scores[i].tally.responsibility;
    for (const auto& [agent, r] : cd.agent_responsibility) {
      result.agent_blame[agent] += r * state.probabilities[i];
      if (r > result.agent_max_responsibility[agent])
        result.agent_max_responsibility[agent] = r;
    }
    result.contexts.push_back(std::move(cd));
  }
  return result;
}

const char* to_string(AlgorithmPath path) {
  switch (path) {
    case AlgorithmPath::Conjunctive: return "conjunctive";
    case AlgorithmPath::Monotone: return "monotone";
    case AlgorithmPath::Oracle: return "oracle";
  }
  return "unknown";
}

}  // namespace teamdiag::diag
