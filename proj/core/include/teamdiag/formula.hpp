#pragma once

#include <memory>
#include <string>
#include <vector>

namespace teamdiag {

/// Immutable boolean formula tree: constants, variable references, negation,
/// and n-ary conjunction/disjunction. Variable references are by name and are
/// resolved against a model when the formula is attached to one.
///
/// Over a boolean assignment, a variable reference reads as the primitive
/// event X=1 and its negation as X=0.
class Formula {
 public:
  enum class Kind { Const, Var, Not, And, Or };

  Formula() : Formula(constant(false)) {}

  static Formula constant(bool value);
  static Formula var(std::string name);
  static Formula negation(Formula f);
  static Formula conjunction(std::vector<Formula> args);
  static Formula disjunction(std::vector<Formula> args);

  /// X=value as a formula: var(x) when value is 1, negation(var(x)) otherwise.
  static Formula primitive_event(const std::string& name, bool value);

  Kind kind() const;
  bool const_value() const;            // Const only
  const std::string& var_name() const; // Var only
  /// Children of Not/And/Or (Not has exactly one).
  const std::vector<Formula>& args() const;

  /// Distinct variable names referenced, sorted.
  std::vector<std::string> variables() const;

  size_t node_count() const;

  /// Negation normal form: negations pushed onto variables, double negations
  /// and negated constants folded.
  Formula to_nnf() const;

  /// Collapses nested And-of-And / Or-of-Or and unwraps single-child
  /// And/Or nodes. Empty And becomes constant 1, empty Or constant 0.
  Formula flattened() const;

  /// True iff the NNF contains no negated variable.
  bool is_monotone() const;

  /// True iff monotone and the flattened NNF contains no disjunction.
  bool is_conjunctive() const;

  bool operator==(const Formula& other) const;

  /// S-expression-style JSON: ["const",0|1], ["var",name], ["not",f],
  /// ["and",f...], ["or",f...].
  std::string to_json() const;
  static Formula from_json(const std::string& text);

  std::string to_text() const;  // infix rendering for reports

  // internal: shared node handle
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<const Node>& node() const { return node_; }

 private:
  std::shared_ptr<const Node> node_;
};

}  // namespace teamdiag
