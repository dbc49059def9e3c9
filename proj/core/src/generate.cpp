#include "teamdiag/generate.hpp"

#include <algorithm>
#include <set>

#include "teamdiag/error.hpp"

namespace teamdiag::gen {

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::string padded(const std::string& prefix, uint32_t i, int width) {
  std::string digits = std::to_string(i);
  std::string out = prefix;
  for (int pad = width - static_cast<int>(digits.size()); pad > 0; --pad)
    out += '0';
  return out + digits;
}

}  // namespace

Rng::Rng(uint64_t seed) {
  for (uint64_t& s : s_) s = splitmix64(seed);
}

uint64_t Rng::next() {
  // xoshiro256**
  uint64_t result = rotl(s_[1] * 5, 7) * 9;
  uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

uint32_t Rng::below(uint32_t bound) {
  if (bound == 0) raise(ErrorCode::InvalidArgument, "Rng::below(0)");
  return static_cast<uint32_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
}

bool Rng::chance(uint32_t permille) { return below(1000) < permille; }

namespace {

Formula random_formula(Rng& rng, const std::vector<std::string>& pool, int depth,
                       bool allow_negation) {
  if (depth == 0 || rng.chance(350)) {
    Formula leaf = Formula::var(pool[rng.below(static_cast<uint32_t>(pool.size()))]);
    if (allow_negation && rng.chance(300)) leaf = Formula::negation(leaf);
    return leaf;
  }
  uint32_t arity = 2 + rng.below(2);
  std::vector<Formula> kids;
  for (uint32_t i = 0; i < arity; ++i)
    kids.push_back(random_formula(rng, pool, depth - 1, allow_negation));
  Formula out = rng.chance(500) ? Formula::conjunction(std::move(kids))
                                : Formula::disjunction(std::move(kids));
  if (allow_negation && rng.chance(150)) out = Formula::negation(out);
  return out;
}

}  // namespace

RandomModel random_model(uint64_t seed, const ModelSpec& spec) {
  Rng rng(seed);
  const uint32_t n_exo = 1 + rng.below(spec.max_exo);
  const uint32_t n_endo =
      spec.min_endo + rng.below(spec.max_endo - spec.min_endo + 1);

  std::vector<Variable> vars;
  std::vector<std::string> exo_names, endo_names;
  for (uint32_t i = 0; i < n_exo; ++i) {
    exo_names.push_back(padded("U", i, 2));
    vars.push_back({exo_names.back(), VarKind::Exogenous});
  }
  for (uint32_t i = 0; i < n_endo; ++i) {
    endo_names.push_back(padded("V", i, 2));
    vars.push_back({endo_names.back(), VarKind::Endogenous});
  }

  std::vector<std::pair<std::string, Formula>> equations;
  std::vector<std::string> pool = exo_names;
  for (uint32_t i = 0; i < n_endo; ++i) {
    equations.emplace_back(endo_names[i],
                           random_formula(rng, pool, 2, spec.allow_negation));
    pool.push_back(endo_names[i]);
  }

  RandomModel out;
  out.model = build_model(std::move(vars), std::move(equations));

  // event over the later half of the variables, so it usually has depth
  std::vector<std::string> event_pool(endo_names.begin() + n_endo / 2,
                                      endo_names.end());
  out.event = random_formula(rng, event_pool, 2, spec.allow_negation);

  std::vector<uint8_t> ctx_bits(n_exo);
  for (uint32_t i = 0; i < n_exo; ++i) ctx_bits[i] = rng.below(2);
  out.context = Context(std::move(ctx_bits));

  for (const std::string& name : endo_names)
    if (rng.chance(500)) out.candidates.push_back(name);
  if (out.candidates.empty())
    out.candidates.push_back(endo_names[rng.below(n_endo)]);
  return out;
}

plan::PlanFile random_plan(uint64_t seed, const PlanSpec& spec) {
  Rng rng(seed);
  const uint32_t n =
      spec.min_tasks + rng.below(spec.max_tasks - spec.min_tasks + 1);
  const uint32_t n_agents = 1 + rng.below(spec.max_agents);

  plan::PlanFile pf;
  std::vector<std::string> agents;
  for (uint32_t i = 0; i < n_agents; ++i) agents.push_back(padded("a", i + 1, 1));

  std::vector<std::string> task_names{"Start"};
  std::map<std::string, std::string> alpha;
  std::vector<std::pair<std::string, std::string>> order;

  // task i produces prop i; producers[prop] lists every producing task
  std::vector<std::string> props;
  std::vector<std::vector<uint32_t>> producers;  // by prop index, task indexes
  std::vector<std::vector<uint32_t>> consumers;  // by prop index
  std::vector<plan::TaskDef> defs(n);

  for (uint32_t i = 0; i < n; ++i) {
    std::string task = padded("t", i + 1, 2);
    task_names.push_back(task);
    alpha[task] = agents[rng.below(n_agents)];
    props.push_back(padded("p", i + 1, 2));
    producers.push_back({i});
    consumers.push_back({});
    defs[i].post.push_back({props[i], true});

    if (i > 0) {
      uint32_t max_pre = std::min<uint32_t>(3, i);
      uint32_t n_pre = rng.below(max_pre + 1);
      std::set<uint32_t> chosen;
      while (chosen.size() < n_pre) chosen.insert(rng.below(i));
      for (uint32_t j : chosen) {
        defs[i].pre.push_back({props[j], true});
        consumers[j].push_back(i);
        order.emplace_back(task_names[j + 1], task);
      }
    }
  }

  // goal: a non-empty subset of propositions
  std::set<uint32_t> goal;
  uint32_t n_goal = 1 + rng.below(std::min(spec.goal_props, n));
  while (goal.size() < n_goal) goal.insert(rng.below(n));
  plan::TaskDef finish_def;
  for (uint32_t j : goal) finish_def.pre.push_back({props[j], true});

  // extra producers: a second task also produces an already-consumed
  // proposition, giving its later consumers several establishing sets
  if (!spec.postcondition_minimal && n > 1) {
    for (uint32_t j = 0; j < n; ++j) {
      if (consumers[j].empty() && !goal.count(j)) continue;
      if (!rng.chance(400)) continue;
      uint32_t e = rng.below(n - 1);
      if (e >= j) ++e;  // any task but the original producer
      defs[e].post.push_back({props[j], true});
      producers[j].push_back(e);
      // the copy helps consumers ordered after it (Finish always is)
      for (uint32_t c : consumers[j])
        if (c > e) order.emplace_back(task_names[e + 1], task_names[c + 1]);
    }
  }

  // clobbering tasks: negate a consumed, non-goal proposition; ordered after
  // every consumer, so every establishment stays intact
  uint32_t n_clobber = 0;
  for (uint32_t j = 0; j < n; ++j) {
    if (goal.count(j) || consumers[j].empty()) continue;
    if (!rng.chance(spec.clobber_permille)) continue;
    std::string task = padded("r", ++n_clobber, 2);
    task_names.push_back(task);
    alpha[task] = agents[rng.below(n_agents)];
    plan::TaskDef def;
    def.post.push_back({props[j], false});
    pf.domain.tasks[task] = def;
    for (uint32_t c : consumers[j]) order.emplace_back(task_names[c + 1], task);
  }

  task_names.push_back("Finish");
  pf.domain.propositions = props;
  pf.domain.tasks["Start"] = {};
  pf.domain.tasks["Finish"] = finish_def;
  for (uint32_t i = 0; i < n; ++i) pf.domain.tasks[task_names[i + 1]] = defs[i];

  // producers of extra copies may sit after a consumer; drop unusable order
  // duplicates introduced above
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());

  pf.domain.validate();
  pf.plan = plan::TeamPlan::build(std::move(task_names), std::move(agents),
                                  std::move(order), std::move(alpha));
  return pf;
}

plan::PlanFile chain_plan(uint32_t tasks, uint32_t agents) {
  if (tasks == 0) raise(ErrorCode::InvalidArgument, "chain_plan needs >= 1 task");
  plan::PlanFile pf;
  std::vector<std::string> agent_names;
  for (uint32_t i = 0; i < agents; ++i) agent_names.push_back(padded("a", i + 1, 1));

  std::vector<std::string> task_names{"Start"};
  std::map<std::string, std::string> alpha;
  std::vector<std::pair<std::string, std::string>> order;
  pf.domain.tasks["Start"] = {};
  for (uint32_t i = 1; i <= tasks; ++i) {
    std::string task = padded("t", i, 5);
    std::string prop = padded("p", i, 5);
    task_names.push_back(task);
    alpha[task] = agent_names[i % agents];
    pf.domain.propositions.push_back(prop);
    plan::TaskDef def;
    if (i > 1) def.pre.push_back({padded("p", i - 1, 5), true});
    def.post.push_back({prop, true});
    pf.domain.tasks[task] = def;
    if (i > 1) order.emplace_back(padded("t", i - 1, 5), task);
  }
  task_names.push_back("Finish");
  plan::TaskDef finish;
  finish.pre.push_back({padded("p", tasks, 5), true});
  pf.domain.tasks["Finish"] = finish;

  pf.domain.validate();
  pf.plan = plan::TeamPlan::build(std::move(task_names), std::move(agent_names),
                                  std::move(order), std::move(alpha));
  return pf;
}

}  // namespace teamdiag::gen
