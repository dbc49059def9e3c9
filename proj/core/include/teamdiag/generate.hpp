#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "teamdiag/model.hpp"
#include "teamdiag/plan.hpp"

namespace teamdiag::gen {

/// Small deterministic generator: same seed, same stream, on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed);
  uint64_t next();
  /// Uniform in [0, bound); bound > 0.
  uint32_t below(uint32_t bound);
  bool chance(uint32_t permille);

 private:
  uint64_t s_[4];
};

struct ModelSpec {
  uint32_t min_endo = 2;
  uint32_t max_endo = 12;
  uint32_t max_exo = 3;
  bool allow_negation = false;  // false: every equation and event monotone
};

struct RandomModel {
  CausalModel model;
  Context context;
  Formula event;                         // references endogenous variables
  std::vector<std::string> candidates;   // non-empty endogenous subset
};

RandomModel random_model(uint64_t seed, const ModelSpec& spec = {});

struct PlanSpec {
  uint32_t min_tasks = 1;  // middle tasks
  uint32_t max_tasks = 10;
  uint32_t max_agents = 3;
  bool postcondition_minimal = true;  // single producer per proposition
  uint32_t clobber_permille = 300;    // chance of adding a clobbering task
  uint32_t goal_props = 3;            // cap on |pre(Finish)|
};

/// A goal-achieving plan: each task produces a fresh proposition and may
/// consume earlier ones; extra producers (non-postmin mode) create multiple
/// establishing sets; clobbering tasks are ordered outside every window they
/// threaten, so they add noclob variables without breaking the goal.
plan::PlanFile random_plan(uint64_t seed, const PlanSpec& spec = {});

/// Start -> t1 -> ... -> tn -> Finish, each task enabling the next.
plan::PlanFile chain_plan(uint32_t tasks, uint32_t agents = 2);

}  // namespace teamdiag::gen
