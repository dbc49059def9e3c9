#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "teamdiag/model.hpp"
#include "teamdiag/rational.hpp"

namespace teamdiag::hp {

/// A candidate cause X = x: primitive events over distinct endogenous
/// variables. Keys are variable names, values the asserted values.
struct Cause {
  std::map<std::string, bool> conjuncts;

  bool contains(const std::string& name) const { return conjuncts.count(name) != 0; }
  size_t size() const { return conjuncts.size(); }
  std::string to_text() const;
};

/// Certificate for AC2: the contingency set W pinned at its actual values,
/// and the alternate setting x' of the cause's variables.
struct Witness {
  std::map<std::string, bool> contingency;
  std::map<std::string, bool> alternate;
};

struct CauseWithWitness {
  Cause cause;
  Witness witness;
};

/// The endogenous variables over which cause conjuncts may range.
struct CandidateSet {
  std::vector<std::string> names;

  static CandidateSet all_endogenous(const CausalModel& model);
  static CandidateSet of(std::vector<std::string> names);
};

enum class WitnessMode : uint8_t {
  Full,       // W ranges over all subsets of V \ X
  EmptyOnly,  // W = {} only (sufficient for monotone queries)
};

struct SearchOptions {
  /// Models with more endogenous variables than this are refused.
  uint32_t max_model_vars = 24;
  /// Witness-search iterations before the search aborts. An exceeded budget
  /// is an error, never a truncated answer.
  uint64_t max_steps = 1ull << 28;
  WitnessMode witness_mode = WitnessMode::Full;
};

/// Exhaustive implementation of the modified actual-cause conditions
/// (AC1, AC2 with contingency sets, AC3 minimality) plus responsibility.
/// An Engine is bound to one (model, context, event); results of witness
/// searches are memoized, so enumeration and per-variable queries on the
/// same instance share work. Not thread-safe; create one per thread.
class Engine {
 public:
  Engine(const CausalModel& model, Context context, Formula event,
         CandidateSet candidates, SearchOptions options = {});

  /// AC1-AC3 verdict for one cause; on success returns the first witness in
  /// search order (W subsets by size then lexicographic, x' in counting
  /// order), which has a minimum-size contingency set.
  std::optional<Witness> is_actual_cause(const Cause& cause);

  /// All causes whose conjuncts (at their actual values) range over the
  /// candidate set, sorted by (size, lexicographic). Cached.
  const std::vector<CauseWithWitness>& enumerate_causes();

  bool is_part_of_cause(const std::string& var, bool value);

  /// 0 if var=value is not part of any cause, else 1/k with
  /// k = min |X| + |W| over causes containing it.
  Rational degree_of_responsibility(const std::string& var, bool value);

  /// Actual value of a variable in the base (unintervened) solution.
  bool actual_value(const std::string& var) const;
  bool event_actual() const { return phi_base_; }

  uint64_t steps_used() const { return steps_; }

 private:
  struct Prepared;  // cause resolved to ids + values

  const CausalModel* model_;
  Context ctx_;
  Formula event_;
  SearchOptions opt_;
  Evaluator eval_;
  Evaluator::CompiledEvent compiled_event_;

  std::vector<VarId> endo_by_name_;       // all endogenous, name order
  std::vector<uint32_t> pos_;             // VarId -> position in endo_by_name_
  std::vector<VarId> cand_;               // candidates, name order
  std::vector<uint8_t> actual_;           // VarId -> base value
  bool phi_base_ = false;

  // memoized event result per intervention signature (base-3 key)
  std::vector<uint64_t> pow3_;
  std::vector<uint8_t> memo_flat_;        // used when |V| small
  std::map<uint64_t, bool> memo_map_;     // fallback
  uint64_t steps_ = 0;

  bool enumerated_ = false;
  std::vector<CauseWithWitness> causes_;
  std::vector<uint64_t> cause_masks_;     // over candidate positions

  bool phi_under(std::span<const std::pair<VarId, bool>> pins);
  /// AC2 search for the variables in xs. On success fills *out.
  bool find_witness(const std::vector<VarId>& xs, Witness* out);
  Prepared prepare(const Cause& cause, bool check_candidates) const;
  void ensure_enumerated();
};

// Operation wrappers; each builds a one-shot Engine.

std::optional<Witness> is_actual_cause(const CausalModel& model, const Context& ctx,
                                       const Cause& cause, const Formula& event,
                                       const CandidateSet& candidates,
                                       const SearchOptions& options = {});

std::vector<CauseWithWitness> enumerate_causes(const CausalModel& model,
                                               const Context& ctx,
                                               const Formula& event,
                                               const CandidateSet& candidates,
                                               const SearchOptions& options = {});

bool is_part_of_cause(const CausalModel& model, const Context& ctx,
                      const std::string& var, bool value, const Formula& event,
                      const CandidateSet& candidates,
                      const SearchOptions& options = {});

Rational degree_of_responsibility(const CausalModel& model, const Context& ctx,
                                  const std::string& var, bool value,
                                  const Formula& event,
                                  const CandidateSet& candidates,
                                  const SearchOptions& options = {});

/// A finite set of (model, context) worlds with exact probabilities.
struct EpistemicState {
  struct World {
    std::shared_ptr<const CausalModel> model;
    Context context;
  };
  std::vector<World> worlds;
  std::vector<Rational> probabilities;

  /// Sizes match, probabilities non-negative and summing to exactly 1.
  void validate() const;
};

/// Expected degree of responsibility over the epistemic state.
Rational degree_of_blame(const EpistemicState& state, const std::string& var,
                         bool value, const Formula& event,
                         const CandidateSet& candidates,
                         const SearchOptions& options = {});

/// Worlds sharing one model: [{"context": {...}, "prob": "1/3"}, ...];
/// probabilities as "num/den", exact decimal strings, integers, or
/// {"num": ..., "den": ...} objects. Must sum to 1.
EpistemicState parse_epistemic_state(std::shared_ptr<const CausalModel> model,
                                     const std::string& json_text);

/// {"cause": {...}, "witness": {"contingency": {...}, "alternate": {...}}}
std::string to_json(const CauseWithWitness& cw);

}  // namespace teamdiag::hp
