#include "teamdiag/monotone.hpp"

#include <algorithm>
#include <bit>
#include <unordered_map>

#include "teamdiag/error.hpp"

namespace teamdiag::monotone {

namespace {

// Shared setup for every operation: validated query, evaluator, base values,
// and the list of flip-origin candidates in name order.
struct Session {
  const CausalModel& m;
  Evaluator eval;
  Evaluator::CompiledEvent event;
  const Context& ctx;
  bool origin;                 // value cause conjuncts must hold
  bool phi_base;
  std::vector<uint8_t> actual; // VarId -> base value
  std::vector<VarId> cand;     // candidate ids, name order
  std::vector<VarId> flips;    // candidates whose actual value == origin

  Session(const Query& q, const Context& context, bool require_polarity)
      : m(*q.model), eval(m), ctx(context) {
    if (q.model == nullptr)
      raise(ErrorCode::InvalidArgument, "query has no model");
    if (!m.monotone())
      raise(ErrorCode::NotMonotone, "model equations are not monotone");
    if (!q.event.is_monotone())
      raise(ErrorCode::NotMonotone, "event formula is not monotone");
    origin = q.polarity == Polarity::Positive;
    for (const std::string& name : hp::CandidateSet::of(q.candidates.names).names) {
      VarId id = m.require_var(name);
      if (m.is_exogenous(id))
        raise(ErrorCode::InvalidArgument,
              "candidate variable '" + name + "' is exogenous");
      cand.push_back(id);
    }
    event = eval.compile_event(q.event);
    auto values = eval.evaluate(ctx);
    actual.assign(values.begin(), values.end());
    phi_base = eval.event_holds(event, values);
    if (require_polarity && phi_base != origin)
      raise(ErrorCode::PolarityMismatch,
            origin ? "positive-polarity query, but the event is false in (M,u)"
                   : "negative-polarity query, but the event is true in (M,u)");
    for (VarId id : cand)
      if ((actual[id] != 0) == origin) flips.push_back(id);
  }

  // Does pinning `ids` to the flipped value change the event's truth?
  bool flip_changes(std::span<const VarId> ids,
                    std::vector<std::pair<VarId, bool>>& pins) {
    pins.clear();
    for (VarId id : ids) pins.emplace_back(id, !origin);
    auto values = eval.evaluate(ctx, pins);
    return eval.event_holds(event, values) != phi_base;
  }
};

hp::Cause cause_from_ids(const CausalModel& m, std::span<const VarId> ids,
                         bool value) {
  hp::Cause cause;
  for (VarId id : ids) cause.conjuncts[m.name(id)] = value;
  return cause;
}

}  // namespace

FindResult find_cause(const Query& query, const Context& ctx) {
  Session s(query, ctx, /*require_polarity=*/true);
  std::vector<std::pair<VarId, bool>> pins;

  if (s.flips.empty() || !s.flip_changes(s.flips, pins))
    raise(ErrorCode::NoCauseInCandidateSet,
          "flipping every candidate does not change the event; no cause ranges "
          "over the candidate set");

  // Greedy shrink in name order; what survives is minimal.
  std::vector<VarId> kept = s.flips;
  std::vector<VarId> trial;
  for (size_t j = 0; j < s.flips.size(); ++j) {
    VarId drop = s.flips[j];
    trial.clear();
    for (VarId id : kept)
      if (id != drop) trial.push_back(id);
    if (trial.size() != kept.size() && s.flip_changes(trial, pins))
      kept.swap(trial);
  }

  FindResult out;
  out.cause = cause_from_ids(s.m, kept, s.origin);
  for (VarId id : kept) out.witness.alternate[s.m.name(id)] = !s.origin;
  out.evaluations = s.eval.eval_count();
  return out;
}

CheckResult check_cause(const Query& query, const Context& ctx,
                        const hp::Cause& cause) {
  Session s(query, ctx, /*require_polarity=*/false);
  if (cause.conjuncts.empty())
    raise(ErrorCode::InvalidArgument, "cause must be a non-empty conjunction");

  CheckResult out;
  std::vector<VarId> ids;
  for (const auto& [name, value] : cause.conjuncts) {
    VarId id = s.m.require_var(name);
    if (s.m.is_exogenous(id))
      raise(ErrorCode::InvalidArgument, "cause conjunct '" + name + "' is exogenous");
    if (std::find(s.cand.begin(), s.cand.end(), id) == s.cand.end())
      raise(ErrorCode::CandidateViolation,
            "cause conjunct '" + name + "' is outside the candidate set");
    // polarity filter: a positive (negative) cause conjoins only 1s (0s)
    if (value != s.origin) {
      out.evaluations = s.eval.eval_count();
      return out;
    }
    ids.push_back(id);
  }

  // AC1: event on the polarity's side and conjuncts at their claimed values.
  if (s.phi_base != s.origin) {
    out.evaluations = s.eval.eval_count();
    return out;
  }
  for (VarId id : ids) {
    if ((s.actual[id] != 0) != s.origin) {
      out.evaluations = s.eval.eval_count();
      return out;
    }
  }

  std::vector<std::pair<VarId, bool>> pins;
  // AC2 with empty contingency set (enough for monotone queries).
  if (!s.flip_changes(ids, pins)) {
    out.evaluations = s.eval.eval_count();
    return out;
  }
  // AC3: dropping any single conjunct must stop the flip.
  std::vector<VarId> reduced;
  for (size_t i = 0; i < ids.size(); ++i) {
    reduced.clear();
    for (size_t j = 0; j < ids.size(); ++j)
      if (j != i) reduced.push_back(ids[j]);
    if (s.flip_changes(reduced, pins)) {
      out.evaluations = s.eval.eval_count();
      return out;
    }
  }
  out.is_cause = true;
  out.evaluations = s.eval.eval_count();
  return out;
}

namespace {

// Exact subset search over the flip-origin candidates, memoized by bitmask.
struct ExactSearch {
  Session s;
  SearchOptions opt;
  std::vector<std::pair<VarId, bool>> pins;
  std::unordered_map<uint64_t, bool> memo;
  uint64_t nodes = 0;

  ExactSearch(const Query& q, const Context& ctx, const SearchOptions& options)
      : s(q, ctx, /*require_polarity=*/true), opt(options) {
    if (s.flips.size() > 64)
      raise(ErrorCode::SearchBudgetExceeded,
            "exact search supports at most 64 flip candidates, got " +
                std::to_string(s.flips.size()));
  }

  bool flips_mask(uint64_t mask) {
    auto it = memo.find(mask);
    if (it != memo.end()) return it->second;
    if (++nodes > opt.max_nodes)
      raise(ErrorCode::SearchBudgetExceeded,
            "exact cause search exceeded " + std::to_string(opt.max_nodes) +
                " evaluations");
    pins.clear();
    for (size_t i = 0; i < s.flips.size(); ++i)
      if ((mask >> i) & 1) pins.emplace_back(s.flips[i], !s.origin);
    auto values = s.eval.evaluate(s.ctx, pins);
    bool changed = s.eval.event_holds(s.event, values) != s.phi_base;
    memo.emplace(mask, changed);
    return changed;
  }

  bool minimal(uint64_t mask) {
    for (size_t i = 0; i < s.flips.size(); ++i)
      if (((mask >> i) & 1) && flips_mask(mask & ~(1ull << i))) return false;
    return true;
  }

  // Any minimal flipping subset within {included | maybe} that contains
  // `included`? `emit` (when set) collects every such subset instead.
  template <typename Emit>
  bool dfs(uint64_t included, uint64_t maybe, Emit&& emit) {
    if (!flips_mask(included | maybe)) return false;
    if (flips_mask(included)) {
      // no proper superset of a flipping set is minimal
      if (minimal(included)) return emit(included);
      return false;
    }
    if (maybe == 0) return false;
    uint64_t bit = maybe & ~(maybe - 1);  // lowest index first
    if (dfs(included | bit, maybe & ~bit, emit)) return true;
    return dfs(included, maybe & ~bit, emit);
  }
};

}  // namespace

bool is_part_of_cause_exact(const Query& query, const Context& ctx,
                            const std::string& var, const SearchOptions& options) {
  ExactSearch search(query, ctx, options);
  VarId id = search.s.m.require_var(var);
  auto it = std::find(search.s.flips.begin(), search.s.flips.end(), id);
  if (it == search.s.flips.end()) return false;  // wrong value or not a candidate
  uint64_t var_bit = 1ull << (it - search.s.flips.begin());
  uint64_t all = search.s.flips.size() == 64
                     ? ~0ull
                     : (1ull << search.s.flips.size()) - 1;
  return search.dfs(var_bit, all & ~var_bit, [](uint64_t) { return true; });
}

Rational responsibility_exact(const Query& query, const Context& ctx,
                              const std::string& var, const SearchOptions& options) {
  ExactSearch search(query, ctx, options);
  const size_t n = search.s.flips.size();
  VarId id = search.s.m.require_var(var);
  auto it = std::find(search.s.flips.begin(), search.s.flips.end(), id);
  if (it == search.s.flips.end()) return Rational(0);
  const size_t var_index = static_cast<size_t>(it - search.s.flips.begin());
  const uint64_t var_bit = 1ull << var_index;
  const uint64_t all = n == 64 ? ~0ull : (1ull << n) - 1;
  if (!search.flips_mask(all)) return Rational(0);

  // Deepening on cause size: the smallest Z containing var with
  // flips(Z) and not flips(Z \ {var}) is the smallest cause containing var.
  for (size_t k = 1; k <= n; ++k) {
    auto grow = [&](auto&& self, uint64_t mask, size_t count, size_t next) -> bool {
      if (count == k)
        return search.flips_mask(mask) && !search.flips_mask(mask & ~var_bit);
      if (search.flips_mask(mask)) return false;  // found in an earlier round
      size_t room = n - next;
      if (count + room < k) return false;
      for (size_t i = next; i < n; ++i) {
        if (i == var_index) continue;
        if (self(self, mask | (1ull << i), count + 1, i + 1)) return true;
      }
      return false;
    };
    if (grow(grow, var_bit, 1, 0)) return Rational(1, static_cast<long long>(k));
  }
  return Rational(0);
}

std::vector<hp::Cause> enumerate_causes_exact(const Query& query,
                                              const Context& ctx,
                                              const SearchOptions& options) {
  ExactSearch search(query, ctx, options);
  const size_t n = search.s.flips.size();
  const uint64_t all = n == 0 ? 0 : (n == 64 ? ~0ull : (1ull << n) - 1);
  std::vector<uint64_t> found;
  search.dfs(0, all, [&](uint64_t mask) {
    found.push_back(mask);
    return false;  // keep going
  });
  std::sort(found.begin(), found.end(), [](uint64_t a, uint64_t b) {
    int pa = std::popcount(a), pb = std::popcount(b);
    if (pa != pb) return pa < pb;
    // equal sizes: lexicographic on the ascending index sequences; the mask
    // holding the lowest differing bit comes first
    uint64_t diff = a ^ b;
    uint64_t low = diff & ~(diff - 1);
    return (a & low) != 0;
  });
  std::vector<hp::Cause> out;
  out.reserve(found.size());
  std::vector<VarId> ids;
  for (uint64_t mask : found) {
    ids.clear();
    for (size_t i = 0; i < n; ++i)
      if ((mask >> i) & 1) ids.push_back(search.s.flips[i]);
    out.push_back(cause_from_ids(search.s.m, ids, search.s.origin));
  }
  return out;
}

ConjunctiveResult conjunctive_cause_and_responsibility(const Query& query,
                                                       const Context& ctx) {
  if (query.model && !query.model->conjunctive())
    raise(ErrorCode::NotConjunctive, "model equations are not conjunctive");
  if (!query.event.is_conjunctive())
    raise(ErrorCode::NotConjunctive, "event formula is not conjunctive");
  Session s(query, ctx, /*require_polarity=*/true);
  const CausalModel& m = s.m;

  // Candidates must be independent sources: none may lie in the dependency
  // fan-in of another. One forward reachability pass over the DAG; in an
  // acyclic graph a candidate reached via a path of length >= 1 must be
  // reachable from a different candidate.
  {
    std::vector<std::vector<VarId>> children(m.num_vars());
    for (VarId w : m.endogenous())
      for (VarId d : m.direct_dependencies(w)) children[d].push_back(w);
    std::vector<bool> seen(m.num_vars(), false);
    std::vector<bool> is_cand(m.num_vars(), false);
    for (VarId c : s.cand) is_cand[c] = true;
    std::vector<VarId> stack;
    for (VarId c : s.cand)
      for (VarId w : children[c])
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
    while (!stack.empty()) {
      VarId v = stack.back();
      stack.pop_back();
      if (is_cand[v])
        raise(ErrorCode::CandidateNotIndependent,
              "candidate '" + m.name(v) +
                  "' depends on another candidate; the conjunctive fast path "
                  "needs independent sources");
      for (VarId w : children[v])
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
    }
  }

  std::vector<VarId> event_vars;
  for (const std::string& name : query.event.variables())
    event_vars.push_back(m.require_var(name));
  std::vector<bool> cone = m.dependency_cone(event_vars);

  ConjunctiveResult out;
  for (VarId id : s.cand) out.responsibility[m.name(id)] = Rational(0);

  if (query.polarity == Polarity::Negative) {
    std::vector<VarId> members;
    for (VarId id : s.cand)
      if (cone[id] && s.actual[id] == 0) members.push_back(id);
    std::vector<std::pair<VarId, bool>> pins;
    if (!members.empty() && s.flip_changes(members, pins)) {
      out.causes.push_back(cause_from_ids(m, members, false));
      Rational share(1, static_cast<long long>(members.size()));
      for (VarId id : members) out.responsibility[m.name(id)] = share;
    }
  } else {
    // In a conjunctive model a zero anywhere in the cone forces the event
    // to zero, so cone membership is exactly the single-flip test.
    for (VarId id : s.cand) {
      if (cone[id] && s.actual[id] != 0) {
        out.causes.push_back(cause_from_ids(m, {&id, 1}, true));
        out.responsibility[m.name(id)] = Rational(1);
      }
    }
  }
  out.evaluations = s.eval.eval_count();
  return out;
}

}  // namespace teamdiag::monotone
