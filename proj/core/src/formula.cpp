#include "teamdiag/formula.hpp"

#include <algorithm>
#include <set>

#include "json_util.hpp"
#include "teamdiag/error.hpp"

namespace teamdiag {

struct Formula::Node {
  Kind kind;
  bool value = false;        // Const
  std::string name;          // Var
  std::vector<Formula> args; // Not/And/Or
};

namespace {

Formula make_node(Formula::Node node) {
  return Formula(std::make_shared<const Formula::Node>(std::move(node)));
}

}  // namespace

Formula Formula::constant(bool value) {
  return make_node({Kind::Const, value, {}, {}});
}

Formula Formula::var(std::string name) {
  if (name.empty()) raise(ErrorCode::InvalidArgument, "empty variable name in formula");
  return make_node({Kind::Var, false, std::move(name), {}});
}

Formula Formula::negation(Formula f) {
  return make_node({Kind::Not, false, {}, {std::move(f)}});
}

Formula Formula::conjunction(std::vector<Formula> args) {
  return make_node({Kind::And, false, {}, std::move(args)});
}

Formula Formula::disjunction(std::vector<Formula> args) {
  return make_node({Kind::Or, false, {}, std::move(args)});
}

Formula Formula::primitive_event(const std::string& name, bool value) {
  return value ? var(name) : negation(var(name));
}

Formula::Kind Formula::kind() const { return node_->kind; }
bool Formula::const_value() const { return node_->value; }
const std::string& Formula::var_name() const { return node_->name; }
const std::vector<Formula>& Formula::args() const { return node_->args; }

std::vector<std::string> Formula::variables() const {
  std::set<std::string> names;
  std::vector<const Node*> stack{node_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->kind == Kind::Var) names.insert(n->name);
    for (const Formula& a : n->args) stack.push_back(a.node().get());
  }
  return {names.begin(), names.end()};
}

size_t Formula::node_count() const {
  size_t count = 0;
  std::vector<const Node*> stack{node_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    ++count;
    for (const Formula& a : n->args) stack.push_back(a.node().get());
  }
  return count;
}

namespace {

Formula nnf_rec(const Formula& f, bool negated) {
  switch (f.kind()) {
    case Formula::Kind::Const:
      return Formula::constant(negated ? !f.const_value() : f.const_value());
    case Formula::Kind::Var:
      return negated ? Formula::negation(f) : f;
    case Formula::Kind::Not:
      return nnf_rec(f.args()[0], !negated);
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<Formula> kids;
      kids.reserve(f.args().size());
      for (const Formula& a : f.args()) kids.push_back(nnf_rec(a, negated));
      bool is_and = (f.kind() == Formula::Kind::And) != negated;
      return is_and ? Formula::conjunction(std::move(kids))
                    : Formula::disjunction(std::move(kids));
    }
  }
  raise(ErrorCode::InvalidArgument, "corrupt formula node");
}

Formula flatten_rec(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Const:
    case Formula::Kind::Var:
      return f;
    case Formula::Kind::Not:
      return Formula::negation(flatten_rec(f.args()[0]));
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<Formula> kids;
      for (const Formula& a : f.args()) {
        Formula fa = flatten_rec(a);
        if (fa.kind() == f.kind()) {
          for (const Formula& g : fa.args()) kids.push_back(g);
        } else {
          kids.push_back(std::move(fa));
        }
      }
      if (kids.empty())
        return Formula::constant(f.kind() == Formula::Kind::And);
      if (kids.size() == 1) return kids[0];
      return f.kind() == Formula::Kind::And
                 ? Formula::conjunction(std::move(kids))
                 : Formula::disjunction(std::move(kids));
    }
  }
  raise(ErrorCode::InvalidArgument, "corrupt formula node");
}

bool contains_kind(const Formula& f, Formula::Kind kind) {
  if (f.kind() == kind) return true;
  for (const Formula& a : f.args())
    if (contains_kind(a, kind)) return true;
  return false;
}

}  // namespace

Formula Formula::to_nnf() const { return nnf_rec(*this, false); }

Formula Formula::flattened() const { return flatten_rec(*this); }

bool Formula::is_monotone() const {
  return !contains_kind(to_nnf(), Kind::Not);
}

bool Formula::is_conjunctive() const {
  Formula n = to_nnf().flattened();
  return !contains_kind(n, Kind::Not) && !contains_kind(n, Kind::Or);
}

bool Formula::operator==(const Formula& other) const {
  if (node_ == other.node_) return true;
  if (kind() != other.kind()) return false;
  switch (kind()) {
    case Kind::Const: return const_value() == other.const_value();
    case Kind::Var: return var_name() == other.var_name();
    default: break;
  }
  if (args().size() != other.args().size()) return false;
  for (size_t i = 0; i < args().size(); ++i)
    if (!(args()[i] == other.args()[i])) return false;
  return true;
}

namespace detail {

nlohmann::json formula_to_json(const Formula& f) {
  nlohmann::json j = nlohmann::json::array();
  switch (f.kind()) {
    case Formula::Kind::Const:
      j.push_back("const");
      j.push_back(f.const_value() ? 1 : 0);
      return j;
    case Formula::Kind::Var:
      j.push_back("var");
      j.push_back(f.var_name());
      return j;
    case Formula::Kind::Not:
      j.push_back("not");
      j.push_back(formula_to_json(f.args()[0]));
      return j;
    case Formula::Kind::And:
    case Formula::Kind::Or:
      j.push_back(f.kind() == Formula::Kind::And ? "and" : "or");
      for (const Formula& a : f.args()) j.push_back(formula_to_json(a));
      return j;
  }
  raise(ErrorCode::InvalidArgument, "corrupt formula node");
}

Formula formula_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_string())
    raise(ErrorCode::ParseError,
          "formula must be [op, ...], got " + j.dump());
  const std::string op = j[0].get<std::string>();
  if (op == "const") {
    if (j.size() != 2 || !j[1].is_number_integer() ||
        (j[1].get<int>() != 0 && j[1].get<int>() != 1))
      raise(ErrorCode::ParseError, "bad constant: " + j.dump());
    return Formula::constant(j[1].get<int>() == 1);
  }
  if (op == "var") {
    if (j.size() != 2 || !j[1].is_string())
      raise(ErrorCode::ParseError, "bad var reference: " + j.dump());
    return Formula::var(j[1].get<std::string>());
  }
  if (op == "not") {
    if (j.size() != 2)
      raise(ErrorCode::ParseError, "'not' takes one argument: " + j.dump());
    return Formula::negation(formula_from_json(j[1]));
  }
  if (op == "and" || op == "or") {
    if (j.size() < 2)
      raise(ErrorCode::ParseError,
            "'" + op + "' needs at least one argument: " + j.dump());
    std::vector<Formula> kids;
    for (size_t i = 1; i < j.size(); ++i) kids.push_back(formula_from_json(j[i]));
    return op == "and" ? Formula::conjunction(std::move(kids))
                       : Formula::disjunction(std::move(kids));
  }
  raise(ErrorCode::ParseError, "unknown formula op '" + op + "'");
}

}  // namespace detail

std::string Formula::to_json() const {
  return detail::formula_to_json(*this).dump();
}

Formula Formula::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::ParseError, "malformed formula JSON");
  return detail::formula_from_json(j);
}

namespace {

void to_text_rec(const Formula& f, std::string& out, bool parenthesize) {
  switch (f.kind()) {
    case Formula::Kind::Const:
      out += f.const_value() ? "1" : "0";
      return;
    case Formula::Kind::Var:
      out += f.var_name();
      return;
    case Formula::Kind::Not:
      out += "!";
      to_text_rec(f.args()[0], out, true);
      return;
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      const char* sep = f.kind() == Formula::Kind::And ? " & " : " | ";
      if (parenthesize) out += "(";
      for (size_t i = 0; i < f.args().size(); ++i) {
        if (i) out += sep;
        to_text_rec(f.args()[i], out, true);
      }
      if (parenthesize) out += ")";
      return;
    }
  }
}

}  // namespace

std::string Formula::to_text() const {
  std::string out;
  to_text_rec(*this, out, false);
  return out;
}

}  // namespace teamdiag
