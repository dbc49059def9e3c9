#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "teamdiag/formula.hpp"

namespace teamdiag {

using VarId = uint32_t;

enum class VarKind : uint8_t { Exogenous, Endogenous };

struct Variable {
  std::string name;
  VarKind kind;
};

/// One step of a compiled equation (postfix evaluation program).
struct EvalInstr {
  enum class Op : uint8_t { Const, Var, Not, And, Or };
  Op op;
  uint32_t arg;  // Const: value; Var: VarId; And/Or: operand count
};

/// Total assignment of values to the exogenous variables of one model.
class Context {
 public:
  Context() = default;
  explicit Context(std::vector<uint8_t> exo_values) : values_(std::move(exo_values)) {}

  bool value(size_t exo_index) const { return values_[exo_index] != 0; }
  size_t size() const { return values_.size(); }
  const std::vector<uint8_t>& raw() const { return values_; }
  std::vector<uint8_t>& raw() { return values_; }

  bool operator==(const Context& o) const { return values_ == o.values_; }
  bool operator<(const Context& o) const { return values_ < o.values_; }

 private:
  std::vector<uint8_t> values_;
};

/// The unique solution of the equations under a context (and optional
/// interventions): one value per variable, exogenous and endogenous.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::vector<uint8_t> values) : values_(std::move(values)) {}

  bool value(VarId id) const { return values_[id] != 0; }
  size_t size() const { return values_.size(); }
  const std::vector<uint8_t>& raw() const { return values_; }

  bool operator==(const Assignment& o) const { return values_ == o.values_; }

 private:
  std::vector<uint8_t> values_;
};

/// An intervention list [Y1 <- y1, ..., Yk <- yk]: distinct endogenous
/// variables pinned to values.
using Interventions = std::vector<std::pair<VarId, bool>>;

/// [Y <- y]phi: interventions plus an event over primitive events X=x.
struct CausalFormula {
  std::vector<std::pair<std::string, bool>> interventions;
  Formula event;
};

/// Acyclic boolean structural causal model. Immutable after construction;
/// all member queries are const and safe to call concurrently.
class CausalModel {
 public:
  size_t num_vars() const { return vars_.size(); }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::string& name(VarId id) const { return vars_[id].name; }
  bool is_exogenous(VarId id) const { return vars_[id].kind == VarKind::Exogenous; }

  std::optional<VarId> var_id(const std::string& name) const;
  /// Like var_id but raises UndeclaredVariable.
  VarId require_var(const std::string& name) const;

  const std::vector<VarId>& exogenous() const { return exo_; }
  const std::vector<VarId>& endogenous() const { return endo_; }
  /// Position of an exogenous variable within Context storage.
  size_t exo_index(VarId id) const { return exo_index_[id]; }

  const Formula& equation(VarId id) const;
  /// Variables read by the equation of `id` (sorted, deduplicated).
  const std::vector<VarId>& direct_dependencies(VarId id) const { return deps_[id]; }

  /// Endogenous variables in evaluation order (dependency-consistent,
  /// ties broken by name).
  const std::vector<VarId>& topo_order() const { return topo_; }

  bool monotone() const { return monotone_; }
  bool conjunctive() const { return conjunctive_; }

  /// Builds a Context from a name -> value map; must cover exactly the
  /// exogenous variables (PartialContext otherwise).
  Context make_context(const std::map<std::string, bool>& values) const;

  /// Builds an intervention list from names; targets must be endogenous
  /// and distinct.
  Interventions make_interventions(
      const std::vector<std::pair<std::string, bool>>& values) const;

  /// The given variables plus everything they transitively depend on;
  /// flags indexed by VarId.
  std::vector<bool> dependency_cone(const std::vector<VarId>& seeds) const;

 private:
  friend CausalModel build_model(std::vector<Variable>,
                                 std::vector<std::pair<std::string, Formula>>);
  friend class Evaluator;

  std::vector<Variable> vars_;
  std::map<std::string, VarId> index_;
  std::vector<VarId> exo_, endo_;
  std::vector<uint32_t> exo_index_;
  std::vector<Formula> equations_;        // indexed by VarId, endogenous only
  std::vector<std::vector<VarId>> deps_;  // indexed by VarId
  std::vector<VarId> topo_;
  bool monotone_ = true;
  bool conjunctive_ = true;

  // evaluation programs, one range per variable
  std::vector<EvalInstr> code_;
  std::vector<std::pair<uint32_t, uint32_t>> code_range_;
  uint32_t max_stack_ = 0;
};

/// Validates and builds a model: unique names, equations exactly for the
/// endogenous variables, references declared, dependency graph acyclic.
CausalModel build_model(std::vector<Variable> variables,
                        std::vector<std::pair<std::string, Formula>> equations);

/// Fast repeated evaluation against one model. Holds scratch buffers and an
/// evaluation counter; not thread-safe itself (use one per thread), though
/// any number of Evaluators may share a model.
class Evaluator {
 public:
  explicit Evaluator(const CausalModel& model);

  /// Solves the equations: pinned variables take their pinned value, the
  /// rest evaluate in topological order. The returned span is valid until
  /// the next call.
  std::span<const uint8_t> evaluate(const Context& ctx,
                                    std::span<const std::pair<VarId, bool>> pins = {});

  /// Event program for repeated tests; variables are resolved now.
  struct CompiledEvent {
    std::vector<EvalInstr> code;
    uint32_t max_stack = 0;
  };
  CompiledEvent compile_event(const Formula& event) const;
  bool event_holds(const CompiledEvent& event, std::span<const uint8_t> values);

  uint64_t eval_count() const { return count_; }
  void reset_count() { count_ = 0; }

  const CausalModel& model() const { return *model_; }

 private:
  const CausalModel* model_;
  std::vector<uint8_t> values_;
  std::vector<uint8_t> stack_;
  std::vector<uint32_t> pin_epoch_;
  std::vector<uint8_t> pin_value_;
  uint32_t epoch_ = 0;
  uint64_t count_ = 0;

  uint8_t run(std::span<const EvalInstr> code, std::span<const uint8_t> values);
};

/// The unique solution as a standalone Assignment (convenience wrapper
/// around Evaluator).
Assignment evaluate(const CausalModel& model, const Context& ctx,
                    const Interventions& interventions = {});

/// (M, u) |= [Y <- y]phi.
bool satisfies(const CausalModel& model, const Context& ctx,
               const CausalFormula& formula);

bool is_monotone(const CausalModel& model);
bool is_monotone_formula(const Formula& formula);
bool is_conjunctive(const CausalModel& model);
bool is_conjunctive_formula(const Formula& formula);

/// JSON form: {"endogenous": [...], "equations": {...}, "exogenous": [...]}
/// with sorted keys; parse/serialize round-trips are byte-stable.
std::string serialize_model(const CausalModel& model);
CausalModel parse_model(const std::string& json_text);

/// {"name": 0|1, ...} covering exactly the exogenous variables.
Context parse_context(const CausalModel& model, const std::string& json_text);
std::string serialize_context(const CausalModel& model, const Context& ctx);

}  // namespace teamdiag
