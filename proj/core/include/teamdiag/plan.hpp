#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace teamdiag::plan {

/// A propositional literal: p or !p.
struct Literal {
  std::string prop;
  bool positive = true;

  Literal negated() const { return {prop, !positive}; }
  std::string to_text() const { return positive ? prop : "!" + prop; }
  static Literal parse(const std::string& text);

  auto operator<=>(const Literal&) const = default;
};

struct TaskDef {
  std::vector<Literal> pre;
  std::vector<Literal> post;
};

/// Propositional planning domain plus the Start/Finish convention:
/// post(Start) is the initial state, pre(Finish) the goal; pre(Start) and
/// post(Finish) are empty.
struct PlanningDomain {
  std::vector<std::string> propositions;
  std::map<std::string, TaskDef> tasks;

  const TaskDef& task(const std::string& name) const;
  void validate() const;
};

using TaskId = uint32_t;

/// Tasks bracketed by Start and Finish, an agent assignment for the middle
/// tasks, and a strict partial order stored transitively closed. Immutable
/// after build().
class TeamPlan {
 public:
  /// `order_pairs` is a generator relation; Start -> t -> Finish edges are
  /// added for every middle task before closing transitively. Cycles are
  /// rejected (CyclicDependency names one).
  static TeamPlan build(std::vector<std::string> tasks,
                        std::vector<std::string> agents,
                        std::vector<std::pair<std::string, std::string>> order_pairs,
                        std::map<std::string, std::string> alpha);

  size_t num_tasks() const { return names_.size(); }
  const std::vector<std::string>& task_names() const { return names_; }
  const std::vector<std::string>& agents() const { return agents_; }

  TaskId id(const std::string& task) const;  // UnknownTask
  const std::string& name(TaskId t) const { return names_[t]; }
  TaskId start_id() const { return start_; }
  TaskId finish_id() const { return finish_; }
  bool is_middle(TaskId t) const { return t != start_ && t != finish_; }
  std::vector<TaskId> middle_tasks() const;

  /// Agent assigned to a middle task.
  const std::string& agent_of(TaskId t) const;

  /// a strictly before b in the transitive closure.
  bool precedes(TaskId a, TaskId b) const;

 private:
  std::vector<std::string> names_;
  std::map<std::string, TaskId> index_;
  std::vector<std::string> agents_;
  std::vector<int32_t> alpha_;  // agent index, -1 for Start/Finish
  TaskId start_ = 0, finish_ = 0;
  size_t words_ = 0;
  std::vector<uint64_t> after_;  // closure bitsets, row-major
};

/// est(t) and clob(t): the minimal establishing sets of a task, and the
/// (establisher, clobberer) pairs relevant to them.
struct EstablishingSet {
  std::string task;
  std::vector<std::vector<std::string>> sets;
  std::vector<std::pair<std::string, std::string>> clob_pairs;
};

struct EstOptions {
  uint32_t precondition_cap = 12;
  /// Establisher-combination candidates examined per task before giving up.
  uint64_t combination_cap = 1ull << 16;
};

/// t' establishes literal l for t: l in pre(t), l in post(t'), t' < t, and
/// every clobberer of l is ordered before t' or after t.
bool establishes(const TeamPlan& plan, const PlanningDomain& domain,
                 const std::string& t_prime, const Literal& literal,
                 const std::string& t);

/// Tasks whose postconditions negate `literal`. Start never clobbers (it
/// runs first, automatically), nor does t itself (nothing executes between
/// a task and itself).
std::vector<std::string> clobberers(const TeamPlan& plan,
                                    const PlanningDomain& domain,
                                    const std::string& t, const Literal& literal);

/// All minimal establishing sets of t plus the clob pairs. pre(t) empty
/// yields est = {{}}. Raises UnestablishableLiteral when some precondition
/// has no establisher, PreconditionCapExceeded past the caps.
EstablishingSet establishing_sets(const TeamPlan& plan,
                                  const PlanningDomain& domain,
                                  const std::string& t,
                                  const EstOptions& options = {});

/// est/clob for every task in one pass (shared indexes; use this for large
/// plans). Results are in task-id order.
std::vector<EstablishingSet> analyze_all(const TeamPlan& plan,
                                         const PlanningDomain& domain,
                                         const EstOptions& options = {});

/// Every task (Finish included) has an establishing set.
bool achieves_goal(const TeamPlan& plan, const PlanningDomain& domain,
                   const EstOptions& options = {});

/// |est(t)| == 1 for every task.
bool is_postcondition_minimal(const TeamPlan& plan, const PlanningDomain& domain,
                              const EstOptions& options = {});

struct PlanFile {
  PlanningDomain domain;
  TeamPlan plan;
};

/// {"propositions": [...], "tasks": {name: {"pre": [...], "post": [...],
/// "agent": name|null}}, "order": [[a,b], ...], "agents": [...]};
/// literals as "p" / "!p". Start/Finish may be implicit.
PlanFile parse_plan(const std::string& json_text);
std::string serialize_plan(const PlanFile& pf);

}  // namespace teamdiag::plan
