#include "teamdiag/plan.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <span>

#include <nlohmann/json.hpp>

#include "teamdiag/error.hpp"

namespace teamdiag::plan {

namespace {
constexpr const char* kStart = "Start";
constexpr const char* kFinish = "Finish";
}  // namespace

Literal Literal::parse(const std::string& text) {
  if (text.empty() || text == "!")
    raise(ErrorCode::ParseError, "empty literal");
  if (text[0] == '!') return {text.substr(1), false};
  return {text, true};
}

const TaskDef& PlanningDomain::task(const std::string& name) const {
  auto it = tasks.find(name);
  if (it == tasks.end())
    raise(ErrorCode::UnknownTask, "task '" + name + "' is not declared");
  return it->second;
}

void PlanningDomain::validate() const {
  std::set<std::string> props(propositions.begin(), propositions.end());
  if (props.size() != propositions.size())
    raise(ErrorCode::InvalidArgument, "duplicate proposition declared");
  for (const auto& [name, def] : tasks) {
    for (const Literal& l : def.pre)
      if (!props.count(l.prop))
        raise(ErrorCode::UnknownLiteral,
              "precondition '" + l.to_text() + "' of task '" + name +
                  "' uses an undeclared proposition");
    std::set<std::string> post_props;
    for (const Literal& l : def.post) {
      if (!props.count(l.prop))
        raise(ErrorCode::UnknownLiteral,
              "postcondition '" + l.to_text() + "' of task '" + name +
                  "' uses an undeclared proposition");
      if (std::find(def.post.begin(), def.post.end(), l.negated()) != def.post.end())
        raise(ErrorCode::InvalidArgument,
              "postconditions of task '" + name + "' contain both " + l.prop +
                  " and !" + l.prop);
    }
  }
  auto start = tasks.find(kStart);
  if (start != tasks.end() && !start->second.pre.empty())
    raise(ErrorCode::InvalidArgument, "Start must have no preconditions");
  auto finish = tasks.find(kFinish);
  if (finish != tasks.end() && !finish->second.post.empty())
    raise(ErrorCode::InvalidArgument, "Finish must have no postconditions");
}

TeamPlan TeamPlan::build(std::vector<std::string> tasks,
                         std::vector<std::string> agents,
                         std::vector<std::pair<std::string, std::string>> order_pairs,
                         std::map<std::string, std::string> alpha) {
  TeamPlan p;
  p.names_ = std::move(tasks);
  for (TaskId t = 0; t < p.names_.size(); ++t)
    if (!p.index_.emplace(p.names_[t], t).second)
      raise(ErrorCode::InvalidArgument, "duplicate task '" + p.names_[t] + "'");
  auto start_it = p.index_.find(kStart);
  auto finish_it = p.index_.find(kFinish);
  if (start_it == p.index_.end() || finish_it == p.index_.end())
    raise(ErrorCode::InvalidArgument, "plan must contain Start and Finish");
  p.start_ = start_it->second;
  p.finish_ = finish_it->second;

  p.agents_ = std::move(agents);
  std::map<std::string, int32_t> agent_index;
  for (int32_t i = 0; i < static_cast<int32_t>(p.agents_.size()); ++i)
    if (!agent_index.emplace(p.agents_[i], i).second)
      raise(ErrorCode::InvalidArgument, "duplicate agent '" + p.agents_[i] + "'");

  p.alpha_.assign(p.names_.size(), -1);
  for (const auto& [task, agent] : alpha) {
    TaskId t = p.id(task);
    if (!p.is_middle(t))
      raise(ErrorCode::InvalidArgument,
            "agent assignment on '" + task + "' is not allowed");
    auto it = agent_index.find(agent);
    if (it == agent_index.end())
      raise(ErrorCode::InvalidArgument,
            "task '" + task + "' is assigned to undeclared agent '" + agent + "'");
    p.alpha_[t] = it->second;
  }
  for (TaskId t = 0; t < p.names_.size(); ++t)
    if (p.is_middle(t) && p.alpha_[t] < 0)
      raise(ErrorCode::InvalidArgument,
            "task '" + p.names_[t] + "' has no assigned agent");

  // generator edges + Start/Finish bracketing
  const size_t n = p.names_.size();
  std::vector<std::set<TaskId>> succ(n);
  for (const auto& [a, b] : order_pairs) {
    TaskId ta = p.id(a), tb = p.id(b);
    if (ta == tb)
      raise(ErrorCode::CyclicDependency, "order lists '" + a + "' before itself");
    succ[ta].insert(tb);
  }
  for (TaskId t = 0; t < n; ++t) {
    if (p.is_middle(t)) {
      succ[p.start_].insert(t);
      succ[t].insert(p.finish_);
    }
  }
  succ[p.start_].insert(p.finish_);

  // topological order, then closure by reverse sweep
  std::vector<uint32_t> pending(n, 0);
  for (TaskId t = 0; t < n; ++t)
    for (TaskId w : succ[t]) ++pending[w];
  std::vector<TaskId> order;
  std::vector<TaskId> queue;
  for (TaskId t = 0; t < n; ++t)
    if (pending[t] == 0) queue.push_back(t);
  while (!queue.empty()) {
    TaskId t = queue.back();
    queue.pop_back();
    order.push_back(t);
    for (TaskId w : succ[t])
      if (--pending[w] == 0) queue.push_back(w);
  }
  if (order.size() != n) {
    std::vector<int> state(n, 0);
    std::vector<TaskId> path;
    std::string cycle;
    auto dfs = [&](auto&& self, TaskId v) -> bool {
      state[v] = 1;
      path.push_back(v);
      for (TaskId w : succ[v]) {
        if (state[w] == 1) {
          auto it = std::find(path.begin(), path.end(), w);
          for (; it != path.end(); ++it) cycle += p.names_[*it] + " -> ";
          cycle += p.names_[w];
          return true;
        }
        if (state[w] == 0 && self(self, w)) return true;
      }
      state[v] = 2;
      path.pop_back();
      return false;
    };
    for (TaskId t = 0; t < n; ++t)
      if (state[t] == 0 && dfs(dfs, t)) break;
    raise(ErrorCode::CyclicDependency, "task order contains a cycle: " + cycle);
  }

  p.words_ = (n + 63) / 64;
  p.after_.assign(n * p.words_, 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TaskId t = *it;
    uint64_t* row = p.after_.data() + t * p.words_;
    for (TaskId w : succ[t]) {
      row[w / 64] |= 1ull << (w % 64);
      const uint64_t* wrow = p.after_.data() + w * p.words_;
      for (size_t i = 0; i < p.words_; ++i) row[i] |= wrow[i];
    }
  }
  return p;
}

TaskId TeamPlan::id(const std::string& task) const {
  auto it = index_.find(task);
  if (it == index_.end())
    raise(ErrorCode::UnknownTask, "task '" + task + "' is not in the plan");
  return it->second;
}

std::vector<TaskId> TeamPlan::middle_tasks() const {
  std::vector<TaskId> out;
  for (TaskId t = 0; t < names_.size(); ++t)
    if (is_middle(t)) out.push_back(t);
  return out;
}

const std::string& TeamPlan::agent_of(TaskId t) const {
  if (alpha_[t] < 0)
    raise(ErrorCode::UnknownTask, "task '" + names_[t] + "' has no agent");
  return agents_[alpha_[t]];
}

bool TeamPlan::precedes(TaskId a, TaskId b) const {
  return (after_[a * words_ + b / 64] >> (b % 64)) & 1;
}

namespace {

// Post-production index: literal -> producing tasks, in id order.
std::map<Literal, std::vector<TaskId>> build_post_index(const TeamPlan& plan,
                                                        const PlanningDomain& domain) {
  std::map<Literal, std::vector<TaskId>> idx;
  for (TaskId t = 0; t < plan.num_tasks(); ++t)
    for (const Literal& l : domain.task(plan.name(t)).post) idx[l].push_back(t);
  return idx;
}

std::vector<TaskId> clobberer_ids(const TeamPlan& plan,
                                  const std::map<Literal, std::vector<TaskId>>& post_index,
                                  TaskId t, const Literal& literal) {
  std::vector<TaskId> out;
  auto it = post_index.find(literal.negated());
  if (it == post_index.end()) return out;
  for (TaskId c : it->second)
    if (c != plan.start_id() && c != t) out.push_back(c);
  return out;
}

bool establishes_ids(const TeamPlan& plan, TaskId t_prime, TaskId t,
                     std::span<const TaskId> clobberers) {
  if (!plan.precedes(t_prime, t)) return false;
  for (TaskId c : clobberers)
    if (!plan.precedes(c, t_prime) && !plan.precedes(t, c)) return false;
  return true;
}

struct TaskEst {
  bool ok = true;
  Literal missing;                           // when !ok
  std::vector<std::vector<TaskId>> sets;     // minimal, sorted
  std::vector<std::pair<TaskId, TaskId>> clob;
};

TaskEst compute_est(const TeamPlan& plan, const PlanningDomain& domain,
                    const std::map<Literal, std::vector<TaskId>>& post_index,
                    TaskId t, const EstOptions& options) {
  const TaskDef& def = domain.task(plan.name(t));
  TaskEst out;
  if (def.pre.size() > options.precondition_cap)
    raise(ErrorCode::PreconditionCapExceeded,
          "task '" + plan.name(t) + "' has " + std::to_string(def.pre.size()) +
              " preconditions, cap is " + std::to_string(options.precondition_cap));
  if (def.pre.empty()) {
    out.sets.push_back({});
    return out;
  }

  // establishers per precondition literal
  std::vector<std::vector<TaskId>> choices;
  std::vector<std::vector<TaskId>> clobs;
  for (const Literal& l : def.pre) {
    std::vector<TaskId> cl = clobberer_ids(plan, post_index, t, l);
    std::vector<TaskId> est;
    if (auto it = post_index.find(l); it != post_index.end())
      for (TaskId producer : it->second)
        if (establishes_ids(plan, producer, t, cl)) est.push_back(producer);
    if (est.empty()) {
      out.ok = false;
      out.missing = l;
      return out;
    }
    choices.push_back(std::move(est));
    clobs.push_back(std::move(cl));
  }

  // candidate sets from per-literal choices, deduplicated
  std::set<std::vector<TaskId>> candidates;
  std::vector<TaskId> current;
  uint64_t produced = 0;
  auto expand = [&](auto&& self, size_t i) -> void {
    if (i == choices.size()) {
      if (++produced > options.combination_cap)
        raise(ErrorCode::PreconditionCapExceeded,
              "establisher combinations for task '" + plan.name(t) +
                  "' exceed cap of " + std::to_string(options.combination_cap));
      std::vector<TaskId> sorted = current;
      std::sort(sorted.begin(), sorted.end());
      sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
      candidates.insert(std::move(sorted));
      return;
    }
    for (TaskId choice : choices[i]) {
      current.push_back(choice);
      self(self, i + 1);
      current.pop_back();
    }
  };
  expand(expand, 0);

  // keep only the minimal ones
  for (const auto& s : candidates) {
    bool minimal = true;
    for (const auto& other : candidates) {
      if (other.size() < s.size() &&
          std::includes(s.begin(), s.end(), other.begin(), other.end())) {
        minimal = false;
        break;
      }
    }
    if (minimal) out.sets.push_back(s);
  }

  // clob(t): establishers appearing in some minimal set, paired with the
  // clobberers of the literals they establish
  std::set<std::pair<TaskId, TaskId>> pairs;
  std::set<TaskId> members;
  for (const auto& s : out.sets) members.insert(s.begin(), s.end());
  for (size_t li = 0; li < def.pre.size(); ++li) {
    for (TaskId producer : choices[li]) {
      if (!members.count(producer)) continue;
      for (TaskId c : clobs[li]) pairs.insert({producer, c});
    }
  }
  out.clob.assign(pairs.begin(), pairs.end());
  return out;
}

EstablishingSet to_named(const TeamPlan& plan, TaskId t, const TaskEst& est) {
  EstablishingSet out;
  out.task = plan.name(t);
  for (const auto& s : est.sets) {
    std::vector<std::string> names;
    for (TaskId m : s) names.push_back(plan.name(m));
    std::sort(names.begin(), names.end());
    out.sets.push_back(std::move(names));
  }
  std::sort(out.sets.begin(), out.sets.end(),
            [](const auto& a, const auto& b) {
              if (a.size() != b.size()) return a.size() < b.size();
              return a < b;
            });
  for (const auto& [s, c] : est.clob)
    out.clob_pairs.emplace_back(plan.name(s), plan.name(c));
  std::sort(out.clob_pairs.begin(), out.clob_pairs.end());
  return out;
}

}  // namespace

bool establishes(const TeamPlan& plan, const PlanningDomain& domain,
                 const std::string& t_prime, const Literal& literal,
                 const std::string& t) {
  TaskId tp = plan.id(t_prime), tt = plan.id(t);
  const TaskDef& def = domain.task(t);
  if (std::find(def.pre.begin(), def.pre.end(), literal) == def.pre.end())
    return false;
  const TaskDef& pdef = domain.task(t_prime);
  if (std::find(pdef.post.begin(), pdef.post.end(), literal) == pdef.post.end())
    return false;
  auto post_index = build_post_index(plan, domain);
  return establishes_ids(plan, tp, tt,
                         clobberer_ids(plan, post_index, tt, literal));
}

std::vector<std::string> clobberers(const TeamPlan& plan,
                                    const PlanningDomain& domain,
                                    const std::string& t, const Literal& literal) {
  TaskId tt = plan.id(t);
  bool declared = false;
  for (const std::string& prop : domain.propositions)
    declared |= prop == literal.prop;
  if (!declared)
    raise(ErrorCode::UnknownLiteral,
          "literal '" + literal.to_text() + "' uses an undeclared proposition");
  auto post_index = build_post_index(plan, domain);
  std::vector<std::string> out;
  for (TaskId c : clobberer_ids(plan, post_index, tt, literal))
    out.push_back(plan.name(c));
  std::sort(out.begin(), out.end());
  return out;
}

EstablishingSet establishing_sets(const TeamPlan& plan,
                                  const PlanningDomain& domain,
                                  const std::string& t,
                                  const EstOptions& options) {
  TaskId tt = plan.id(t);
  auto post_index = build_post_index(plan, domain);
  TaskEst est = compute_est(plan, domain, post_index, tt, options);
  if (!est.ok)
    raise(ErrorCode::UnestablishableLiteral,
          "unestablishable literal " + est.missing.to_text() + " for " + t);
  return to_named(plan, tt, est);
}

std::vector<EstablishingSet> analyze_all(const TeamPlan& plan,
                                         const PlanningDomain& domain,
                                         const EstOptions& options) {
  auto post_index = build_post_index(plan, domain);
  std::vector<EstablishingSet> out;
  for (TaskId t = 0; t < plan.num_tasks(); ++t) {
    TaskEst est = compute_est(plan, domain, post_index, t, options);
    if (!est.ok)
      raise(ErrorCode::UnestablishableLiteral,
            "unestablishable literal " + est.missing.to_text() + " for " +
                plan.name(t));
    out.push_back(to_named(plan, t, est));
  }
  return out;
}

bool achieves_goal(const TeamPlan& plan, const PlanningDomain& domain,
                   const EstOptions& options) {
  auto post_index = build_post_index(plan, domain);
  for (TaskId t = 0; t < plan.num_tasks(); ++t) {
    TaskEst est = compute_est(plan, domain, post_index, t, options);
    if (!est.ok || est.sets.empty()) return false;
  }
  return true;
}

bool is_postcondition_minimal(const TeamPlan& plan, const PlanningDomain& domain,
                              const EstOptions& options) {
  auto post_index = build_post_index(plan, domain);
  for (TaskId t = 0; t < plan.num_tasks(); ++t) {
    TaskEst est = compute_est(plan, domain, post_index, t, options);
    if (!est.ok)
      raise(ErrorCode::UnestablishableLiteral,
            "unestablishable literal " + est.missing.to_text() + " for " +
                plan.name(t));
    if (est.sets.size() != 1) return false;
  }
  return true;
}

PlanFile parse_plan(const std::string& json_text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(json_text);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    raise(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object())
    raise(ErrorCode::ParseError, "plan file must be a JSON object");
  for (const char* key : {"propositions", "tasks", "agents"})
    if (!j.contains(key))
      raise(ErrorCode::ParseError, std::string("plan file missing key '") + key + "'");

  PlanFile pf;
  for (const auto& p : j["propositions"]) {
    if (!p.is_string()) raise(ErrorCode::ParseError, "propositions must be strings");
    pf.domain.propositions.push_back(p.get<std::string>());
  }

  std::vector<std::string> task_names;
  std::vector<std::string> agents;
  std::map<std::string, std::string> alpha;
  for (const auto& a : j["agents"]) {
    if (!a.is_string()) raise(ErrorCode::ParseError, "agents must be strings");
    agents.push_back(a.get<std::string>());
  }

  if (!j["tasks"].is_object())
    raise(ErrorCode::ParseError, "'tasks' must be an object keyed by task name");
  for (const auto& [name, spec] : j["tasks"].items()) {
    TaskDef def;
    if (!spec.is_object())
      raise(ErrorCode::ParseError, "task '" + name + "' must be an object");
    if (spec.contains("pre"))
      for (const auto& l : spec["pre"])
        def.pre.push_back(Literal::parse(l.get<std::string>()));
    if (spec.contains("post"))
      for (const auto& l : spec["post"])
        def.post.push_back(Literal::parse(l.get<std::string>()));
    if (spec.contains("agent") && !spec["agent"].is_null()) {
      if (name == kStart || name == kFinish)
        raise(ErrorCode::InvalidArgument,
              "agent assignment on '" + name + "' is not allowed");
      alpha[name] = spec["agent"].get<std::string>();
    }
    pf.domain.tasks[name] = std::move(def);
    task_names.push_back(name);
  }
  if (!pf.domain.tasks.count(kStart)) {
    pf.domain.tasks[kStart] = {};
    task_names.insert(task_names.begin(), kStart);
  }
  if (!pf.domain.tasks.count(kFinish)) {
    pf.domain.tasks[kFinish] = {};
    task_names.push_back(kFinish);
  }

  std::vector<std::pair<std::string, std::string>> order;
  if (j.contains("order")) {
    for (const auto& pair : j["order"]) {
      if (!pair.is_array() || pair.size() != 2)
        raise(ErrorCode::ParseError, "order entries must be [before, after] pairs");
      order.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
    }
  }

  pf.domain.validate();
  pf.plan = TeamPlan::build(std::move(task_names), std::move(agents),
                            std::move(order), std::move(alpha));
  return pf;
}

std::string serialize_plan(const PlanFile& pf) {
  nlohmann::ordered_json j;
  std::vector<std::string> props = pf.domain.propositions;
  std::sort(props.begin(), props.end());
  j["propositions"] = props;
  j["agents"] = pf.plan.agents();
  nlohmann::ordered_json tasks = nlohmann::ordered_json::object();
  for (TaskId t = 0; t < pf.plan.num_tasks(); ++t) {
    const std::string& name = pf.plan.name(t);
    const TaskDef& def = pf.domain.task(name);
    nlohmann::ordered_json spec;
    std::vector<std::string> pre, post;
    for (const Literal& l : def.pre) pre.push_back(l.to_text());
    for (const Literal& l : def.post) post.push_back(l.to_text());
    spec["pre"] = pre;
    spec["post"] = post;
    if (pf.plan.is_middle(t)) spec["agent"] = pf.plan.agent_of(t);
    tasks[name] = std::move(spec);
  }
  j["tasks"] = std::move(tasks);
  nlohmann::ordered_json order = nlohmann::ordered_json::array();
  for (TaskId a = 0; a < pf.plan.num_tasks(); ++a)
    for (TaskId b = 0; b < pf.plan.num_tasks(); ++b)
      if (a != b && pf.plan.precedes(a, b) && pf.plan.is_middle(a) &&
          pf.plan.is_middle(b))
        order.push_back({pf.plan.name(a), pf.plan.name(b)});
  j["order"] = std::move(order);
  return j.dump(2);
}

}  // namespace teamdiag::plan
