#include "teamdiag/hp.hpp"

#include <algorithm>

#include "json_util.hpp"
#include "teamdiag/error.hpp"

namespace teamdiag::hp {

namespace {

// Visits k-element index combinations of {0..n-1} in lexicographic order
// until the callback returns true; returns whether it did.
template <typename F>
bool for_each_combination(size_t n, size_t k, F&& f) {
  if (k > n) return false;
  std::vector<uint32_t> idx(k);
  for (size_t i = 0; i < k; ++i) idx[i] = static_cast<uint32_t>(i);
  while (true) {
    if (f(idx)) return true;
    // advance to next combination
    size_t i = k;
    while (i > 0) {
      --i;
      if (idx[i] != i + n - k) {
        ++idx[i];
        for (size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
        break;
      }
      if (i == 0) return false;
    }
    if (k == 0) return false;
  }
}

constexpr uint32_t kMaxOracleVars = 40;  // memo keys must fit in 64 bits

}  // namespace

std::string Cause::to_text() const {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, value] : conjuncts) {
    if (!first) out += ", ";
    first = false;
    out += name + "=" + (value ? "1" : "0");
  }
  return out + "}";
}

CandidateSet CandidateSet::all_endogenous(const CausalModel& model) {
  CandidateSet out;
  for (VarId id : model.endogenous()) out.names.push_back(model.name(id));
  std::sort(out.names.begin(), out.names.end());
  return out;
}

CandidateSet CandidateSet::of(std::vector<std::string> names) {
  CandidateSet out;
  out.names = std::move(names);
  std::sort(out.names.begin(), out.names.end());
  out.names.erase(std::unique(out.names.begin(), out.names.end()), out.names.end());
  return out;
}

struct Engine::Prepared {
  std::vector<VarId> ids;         // name order
  std::vector<uint8_t> values;    // aligned with ids
};

Engine::Engine(const CausalModel& model, Context context, Formula event,
               CandidateSet candidates, SearchOptions options)
    : model_(&model),
      ctx_(std::move(context)),
      event_(std::move(event)),
      opt_(options),
      eval_(model) {
  size_t n = model.endogenous().size();
  if (opt_.max_model_vars > kMaxOracleVars) opt_.max_model_vars = kMaxOracleVars;
  if (n > opt_.max_model_vars)
    raise(ErrorCode::SearchBudgetExceeded,
          "model has " + std::to_string(n) + " endogenous variables, oracle cap is " +
              std::to_string(opt_.max_model_vars));

  endo_by_name_ = model.endogenous();
  std::sort(endo_by_name_.begin(), endo_by_name_.end(),
            [&](VarId a, VarId b) { return model.name(a) < model.name(b); });
  pos_.assign(model.num_vars(), 0);
  for (uint32_t i = 0; i < endo_by_name_.size(); ++i) pos_[endo_by_name_[i]] = i;

  for (const std::string& name : CandidateSet::of(candidates.names).names) {
    VarId id = model.require_var(name);
    if (model.is_exogenous(id))
      raise(ErrorCode::InvalidArgument,
            "candidate variable '" + name + "' is exogenous");
    cand_.push_back(id);
  }

  pow3_.resize(n + 1);
  pow3_[0] = 1;
  for (size_t i = 1; i <= n; ++i) pow3_[i] = pow3_[i - 1] * 3;
  if (n <= 15) memo_flat_.assign(pow3_[n], 0);

  compiled_event_ = eval_.compile_event(event_);
  auto values = eval_.evaluate(ctx_);
  actual_.assign(values.begin(), values.end());
  phi_base_ = eval_.event_holds(compiled_event_, values);
}

bool Engine::actual_value(const std::string& var) const {
  return actual_[model_->require_var(var)] != 0;
}

bool Engine::phi_under(std::span<const std::pair<VarId, bool>> pins) {
  uint64_t key = 0;
  for (const auto& [id, value] : pins) key += (value ? 2u : 1u) * pow3_[pos_[id]];
  if (!memo_flat_.empty()) {
    uint8_t& slot = memo_flat_[key];
    if (slot == 0) {
      auto values = eval_.evaluate(ctx_, pins);
      slot = eval_.event_holds(compiled_event_, values) ? 1 : 2;
    }
    return slot == 1;
  }
  auto it = memo_map_.find(key);
  if (it != memo_map_.end()) return it->second;
  auto values = eval_.evaluate(ctx_, pins);
  bool result = eval_.event_holds(compiled_event_, values);
  memo_map_.emplace(key, result);
  return result;
}

bool Engine::find_witness(const std::vector<VarId>& xs, Witness* out) {
  const CausalModel& m = *model_;
  std::vector<VarId> eligible;
  eligible.reserve(endo_by_name_.size());
  for (VarId id : endo_by_name_)
    if (std::find(xs.begin(), xs.end(), id) == xs.end()) eligible.push_back(id);

  size_t max_w = opt_.witness_mode == WitnessMode::EmptyOnly ? 0 : eligible.size();
  std::vector<std::pair<VarId, bool>> pins;
  const uint64_t x_count = 1ull << xs.size();

  for (size_t w = 0; w <= max_w; ++w) {
    bool found = for_each_combination(eligible.size(), w, [&](const std::vector<uint32_t>& comb) {
      for (uint64_t alt = 0; alt < x_count; ++alt) {
        if (++steps_ > opt_.max_steps)
          raise(ErrorCode::SearchBudgetExceeded,
                "witness search exceeded " + std::to_string(opt_.max_steps) + " steps");
        pins.clear();
        for (size_t i = 0; i < xs.size(); ++i)
          pins.emplace_back(xs[i], (alt >> i) & 1);
        for (uint32_t ci : comb)
          pins.emplace_back(eligible[ci], actual_[eligible[ci]] != 0);
        if (!phi_under(pins)) {
          if (out) {
            out->contingency.clear();
            out->alternate.clear();
            for (uint32_t ci : comb)
              out->contingency[m.name(eligible[ci])] = actual_[eligible[ci]] != 0;
            for (size_t i = 0; i < xs.size(); ++i)
              out->alternate[m.name(xs[i])] = ((alt >> i) & 1) != 0;
          }
          return true;
        }
      }
      return false;
    });
    if (found) return true;
  }
  return false;
}

Engine::Prepared Engine::prepare(const Cause& cause, bool check_candidates) const {
  if (cause.conjuncts.empty())
    raise(ErrorCode::InvalidArgument, "cause must be a non-empty conjunction");
  Prepared p;
  for (const auto& [name, value] : cause.conjuncts) {
    VarId id = model_->require_var(name);
    if (model_->is_exogenous(id))
      raise(ErrorCode::InvalidArgument,
            "cause conjunct '" + name + "' is exogenous");
    if (check_candidates &&
        std::find(cand_.begin(), cand_.end(), id) == cand_.end())
      raise(ErrorCode::CandidateViolation,
            "cause conjunct '" + name + "' is outside the candidate set");
    p.ids.push_back(id);
    p.values.push_back(value ? 1 : 0);
  }
  // map iteration is already name-ordered
  return p;
}

std::optional<Witness> Engine::is_actual_cause(const Cause& cause) {
  Prepared p = prepare(cause, /*check_candidates=*/true);

  // AC1: the conjuncts and the event hold in the actual world.
  if (!phi_base_) return std::nullopt;
  for (size_t i = 0; i < p.ids.size(); ++i)
    if (actual_[p.ids[i]] != p.values[i]) return std::nullopt;

  // AC2
  Witness witness;
  if (!find_witness(p.ids, &witness)) return std::nullopt;

  // AC3: no proper non-empty subset satisfies AC1 + AC2. Subset conjuncts
  // keep their actual values, which AC1 forces anyway.
  size_t k = p.ids.size();
  if (k > 1) {
    std::vector<VarId> sub;
    for (uint64_t mask = 1; mask + 1 < (1ull << k); ++mask) {
      sub.clear();
      for (size_t i = 0; i < k; ++i)
        if ((mask >> i) & 1) sub.push_back(p.ids[i]);
      if (find_witness(sub, nullptr)) return std::nullopt;
    }
  }
  return witness;
}

void Engine::ensure_enumerated() {
  if (enumerated_) return;
  causes_.clear();
  cause_masks_.clear();
  if (!phi_base_) {  // AC1 can never hold
    enumerated_ = true;
    return;
  }

  const size_t n = cand_.size();
  std::vector<VarId> xs;
  for (size_t k = 1; k <= n; ++k) {
    for_each_combination(n, k, [&](const std::vector<uint32_t>& comb) {
      uint64_t mask = 0;
      for (uint32_t ci : comb) mask |= 1ull << ci;
      // AC3 fails iff a strictly smaller cause is contained in this set.
      for (uint64_t cm : cause_masks_)
        if ((cm & mask) == cm) return false;
      xs.clear();
      for (uint32_t ci : comb) xs.push_back(cand_[ci]);
      Witness witness;
      if (find_witness(xs, &witness)) {
        CauseWithWitness cw;
        for (VarId id : xs) cw.cause.conjuncts[model_->name(id)] = actual_[id] != 0;
        cw.witness = std::move(witness);
        causes_.push_back(std::move(cw));
        cause_masks_.push_back(mask);
      }
      return false;  // keep enumerating
    });
  }
  enumerated_ = true;
}

const std::vector<CauseWithWitness>& Engine::enumerate_causes() {
  ensure_enumerated();
  return causes_;
}

bool Engine::is_part_of_cause(const std::string& var, bool value) {
  VarId id = model_->require_var(var);
  if (model_->is_exogenous(id)) return false;
  if (std::find(cand_.begin(), cand_.end(), id) == cand_.end()) return false;
  if ((actual_[id] != 0) != value) return false;
  ensure_enumerated();
  for (const CauseWithWitness& cw : causes_)
    if (cw.cause.contains(var)) return true;
  return false;
}

Rational Engine::degree_of_responsibility(const std::string& var, bool value) {
  if (!is_part_of_cause(var, value)) return Rational(0);
  size_t best = SIZE_MAX;
  for (const CauseWithWitness& cw : causes_) {
    if (!cw.cause.contains(var)) continue;
    best = std::min(best, cw.cause.size() + cw.witness.contingency.size());
  }
  return Rational(1, static_cast<long long>(best));
}

std::optional<Witness> is_actual_cause(const CausalModel& model, const Context& ctx,
                                       const Cause& cause, const Formula& event,
                                       const CandidateSet& candidates,
                                       const SearchOptions& options) {
  Engine engine(model, ctx, event, candidates, options);
  return engine.is_actual_cause(cause);
}

std::vector<CauseWithWitness> enumerate_causes(const CausalModel& model,
                                               const Context& ctx,
                                               const Formula& event,
                                               const CandidateSet& candidates,
                                               const SearchOptions& options) {
  Engine engine(model, ctx, event, candidates, options);
  return engine.enumerate_causes();
}

bool is_part_of_cause(const CausalModel& model, const Context& ctx,
                      const std::string& var, bool value, const Formula& event,
                      const CandidateSet& candidates, const SearchOptions& options) {
  Engine engine(model, ctx, event, candidates, options);
  return engine.is_part_of_cause(var, value);
}

Rational degree_of_responsibility(const CausalModel& model, const Context& ctx,
                                  const std::string& var, bool value,
                                  const Formula& event,
                                  const CandidateSet& candidates,
                                  const SearchOptions& options) {
  Engine engine(model, ctx, event, candidates, options);
  return engine.degree_of_responsibility(var, value);
}

void EpistemicState::validate() const {
  if (worlds.size() != probabilities.size())
    raise(ErrorCode::InvalidArgument,
          "epistemic state has " + std::to_string(worlds.size()) + " worlds but " +
              std::to_string(probabilities.size()) + " probabilities");
  if (worlds.empty())
    raise(ErrorCode::InvalidArgument, "epistemic state must have at least one world");
  Rational sum(0);
  for (const Rational& p : probabilities) {
    if (p < Rational(0))
      raise(ErrorCode::InvalidArgument, "negative probability in epistemic state");
    sum += p;
  }
  if (sum != Rational(1))
    raise(ErrorCode::InvalidArgument,
          "epistemic state probabilities sum to " + sum.to_string() + ", expected 1");
}

Rational degree_of_blame(const EpistemicState& state, const std::string& var,
                         bool value, const Formula& event,
                         const CandidateSet& candidates,
                         const SearchOptions& options) {
  state.validate();
  Rational blame(0);
  for (size_t i = 0; i < state.worlds.size(); ++i) {
    if (state.probabilities[i].is_zero()) continue;
    Engine engine(*state.worlds[i].model, state.worlds[i].context, event,
                  candidates, options);
    blame += engine.degree_of_responsibility(var, value) * state.probabilities[i];
  }
  return blame;
}

EpistemicState parse_epistemic_state(std::shared_ptr<const CausalModel> model,
                                     const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::ParseError, e.what());
  }
  if (!j.is_array())
    raise(ErrorCode::ParseError, "epistemic state must be a JSON array of worlds");
  EpistemicState state;
  for (const auto& world : j) {
    if (!world.is_object() || !world.contains("context") || !world.contains("prob"))
      raise(ErrorCode::ParseError,
            "each world needs a \"context\" object and a \"prob\"");
    state.worlds.push_back(
        {model, parse_context(*model, world["context"].dump())});
    const auto& p = world["prob"];
    if (p.is_string()) {
      state.probabilities.push_back(Rational::parse(p.get<std::string>()));
    } else if (p.is_number_integer()) {
      state.probabilities.push_back(Rational(p.get<long long>()));
    } else if (p.is_object() && p.contains("num") && p.contains("den")) {
      state.probabilities.push_back(
          Rational(p["num"].get<long long>(), p["den"].get<long long>()));
    } else {
      raise(ErrorCode::ParseError,
            "world probability must be a string, integer, or num/den object");
    }
  }
  state.validate();
  return state;
}

std::string to_json(const CauseWithWitness& cw) {
  nlohmann::json j;
  nlohmann::json cause = nlohmann::json::object();
  for (const auto& [name, value] : cw.cause.conjuncts) cause[name] = value ? 1 : 0;
  nlohmann::json contingency = nlohmann::json::object();
  for (const auto& [name, value] : cw.witness.contingency)
    contingency[name] = value ? 1 : 0;
  nlohmann::json alternate = nlohmann::json::object();
  for (const auto& [name, value] : cw.witness.alternate)
    alternate[name] = value ? 1 : 0;
  j["cause"] = std::move(cause);
  j["witness"] = {{"contingency", std::move(contingency)},
                  {"alternate", std::move(alternate)}};
  return j.dump();
}

}  // namespace teamdiag::hp
