#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "teamdiag/hp.hpp"
#include "teamdiag/model.hpp"
#include "teamdiag/rational.hpp"

namespace teamdiag::monotone {

enum class Polarity : uint8_t {
  Positive,  // causes X = 1 of phi
  Negative,  // causes X = 0 of !phi
};

/// A cause query against a monotone model and monotone event formula.
/// Candidate variables are the only ones allowed as cause conjuncts.
struct Query {
  const CausalModel* model = nullptr;
  Formula event;
  Polarity polarity = Polarity::Negative;
  hp::CandidateSet candidates;
};

struct SearchOptions {
  /// Evaluation budget for the exact (worst-case exponential) searches.
  uint64_t max_nodes = 1ull << 22;
};

struct FindResult {
  hp::Cause cause;
  hp::Witness witness;  // contingency always empty here
  uint64_t evaluations = 0;
};

struct CheckResult {
  bool is_cause = false;
  uint64_t evaluations = 0;
};

struct ConjunctiveResult {
  /// Negative polarity: at most one cause (the unique one, when it exists).
  /// Positive polarity: all singleton but-for causes.
  std::vector<hp::Cause> causes;
  /// Responsibility of every candidate variable (0 for non-members).
  std::map<std::string, Rational> responsibility;
  uint64_t evaluations = 0;
};

/// Greedy linear-time minimal cause construction. Starts from all candidates
/// at the polarity's value, verifies the full flip changes the event, then
/// drops variables in name order whenever the reduced flip still changes it.
/// The result is an actual cause with empty contingency set.
FindResult find_cause(const Query& query, const Context& ctx);

/// Polynomial cause check: AC1 by evaluation, AC2 with the empty contingency
/// set (sufficient in monotone models), AC3 by one single-drop test per
/// conjunct. Conjuncts whose value does not match the polarity make the
/// check false, not an error.
CheckResult check_cause(const Query& query, const Context& ctx,
                        const hp::Cause& cause);

/// Exact search: is some minimal flip set containing `var` a cause?
/// Worst-case exponential; prunes with monotonicity; budgeted.
bool is_part_of_cause_exact(const Query& query, const Context& ctx,
                            const std::string& var,
                            const SearchOptions& options = {});

/// Iterative deepening on cause size; returns 1/k for the smallest cause
/// containing `var`, or 0 when there is none.
Rational responsibility_exact(const Query& query, const Context& ctx,
                              const std::string& var,
                              const SearchOptions& options = {});

/// All causes over the candidate set (every minimal flip set), sorted by
/// (size, lexicographic). Exponential worst case; budgeted.
std::vector<hp::Cause> enumerate_causes_exact(const Query& query,
                                              const Context& ctx,
                                              const SearchOptions& options = {});

/// Conjunctive fast path. Requires a conjunctive model/event and an
/// independent-source candidate set (no candidate in the dependency fan-in
/// of another). Negative polarity: the unique cause is the zero-valued
/// candidates inside the event's dependency cone, each with responsibility
/// 1/k; when flipping them all cannot change the event (a zero outside the
/// candidate set blocks it), there is no cause and all responsibilities are
/// 0. Positive polarity: the one-valued candidates in the cone are exactly
/// the singleton but-for causes, responsibility 1.
ConjunctiveResult conjunctive_cause_and_responsibility(const Query& query,
                                                       const Context& ctx);

}  // namespace teamdiag::monotone
