#include "teamdiag/model.hpp"

#include <algorithm>
#include <cassert>
#include <queue>
#include <set>

#include "json_util.hpp"
#include "teamdiag/error.hpp"

namespace teamdiag {

namespace {

// Emits a postfix program for `f`; returns its maximum stack depth.
uint32_t emit_formula(const CausalModel& model, const Formula& f,
                      std::vector<EvalInstr>& code) {
  using Op = EvalInstr::Op;
  switch (f.kind()) {
    case Formula::Kind::Const:
      code.push_back({Op::Const, f.const_value() ? 1u : 0u});
      return 1;
    case Formula::Kind::Var:
      code.push_back({Op::Var, model.require_var(f.var_name())});
      return 1;
    case Formula::Kind::Not: {
      uint32_t d = emit_formula(model, f.args()[0], code);
      code.push_back({Op::Not, 0});
      return d;
    }
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      if (f.args().empty())
        raise(ErrorCode::InvalidArgument, "empty connective in equation");
      uint32_t depth = 0;
      for (size_t i = 0; i < f.args().size(); ++i) {
        uint32_t d = emit_formula(model, f.args()[i], code);
        depth = std::max(depth, static_cast<uint32_t>(i) + d);
      }
      code.push_back({f.kind() == Formula::Kind::And ? Op::And : Op::Or,
                      static_cast<uint32_t>(f.args().size())});
      return depth;
    }
  }
  raise(ErrorCode::InvalidArgument, "corrupt formula node");
}

}  // namespace

std::optional<VarId> CausalModel::var_id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VarId CausalModel::require_var(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    raise(ErrorCode::UndeclaredVariable, "variable '" + name + "' is not declared");
  return it->second;
}

const Formula& CausalModel::equation(VarId id) const {
  if (is_exogenous(id))
    raise(ErrorCode::InvalidArgument,
          "exogenous variable '" + name(id) + "' has no equation");
  return equations_[id];
}

Context CausalModel::make_context(const std::map<std::string, bool>& values) const {
  std::vector<uint8_t> out(exo_.size(), 0);
  size_t matched = 0;
  for (const auto& [name, value] : values) {
    auto id = var_id(name);
    if (!id || is_exogenous(*id) == false)
      raise(ErrorCode::PartialContext,
            "context assigns '" + name + "', which is not an exogenous variable");
    out[exo_index_[*id]] = value ? 1 : 0;
    ++matched;
  }
  if (matched != exo_.size()) {
    for (VarId id : exo_)
      if (!values.count(name(id)))
        raise(ErrorCode::PartialContext,
              "context missing value for exogenous variable '" + name(id) + "'");
  }
  return Context(std::move(out));
}

Interventions CausalModel::make_interventions(
    const std::vector<std::pair<std::string, bool>>& values) const {
  Interventions out;
  out.reserve(values.size());
  std::set<VarId> seen;
  for (const auto& [name, value] : values) {
    VarId id = require_var(name);
    if (is_exogenous(id))
      raise(ErrorCode::InvalidArgument,
            "intervention targets exogenous variable '" + name + "'");
    if (!seen.insert(id).second)
      raise(ErrorCode::InvalidArgument,
            "duplicate intervention on variable '" + name + "'");
    out.emplace_back(id, value);
  }
  return out;
}

std::vector<bool> CausalModel::dependency_cone(const std::vector<VarId>& seeds) const {
  std::vector<bool> in_cone(num_vars(), false);
  std::vector<VarId> stack;
  for (VarId s : seeds) {
    if (!in_cone[s]) {
      in_cone[s] = true;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    VarId v = stack.back();
    stack.pop_back();
    if (is_exogenous(v)) continue;
    for (VarId d : deps_[v]) {
      if (!in_cone[d]) {
        in_cone[d] = true;
        stack.push_back(d);
      }
    }
  }
  return in_cone;
}

CausalModel build_model(std::vector<Variable> variables,
                        std::vector<std::pair<std::string, Formula>> equations) {
  CausalModel m;
  m.vars_ = std::move(variables);
  for (VarId id = 0; id < m.vars_.size(); ++id) {
    if (m.vars_[id].name.empty())
      raise(ErrorCode::InvalidArgument, "variable with empty name");
    if (!m.index_.emplace(m.vars_[id].name, id).second)
      raise(ErrorCode::InvalidArgument,
            "duplicate variable name '" + m.vars_[id].name + "'");
  }

  m.exo_index_.assign(m.vars_.size(), 0);
  for (VarId id = 0; id < m.vars_.size(); ++id) {
    if (m.vars_[id].kind == VarKind::Exogenous) {
      m.exo_index_[id] = static_cast<uint32_t>(m.exo_.size());
      m.exo_.push_back(id);
    } else {
      m.endo_.push_back(id);
    }
  }

  m.equations_.assign(m.vars_.size(), Formula());
  std::vector<bool> has_equation(m.vars_.size(), false);
  for (auto& [name, formula] : equations) {
    VarId id = m.require_var(name);
    if (m.is_exogenous(id))
      raise(ErrorCode::InvalidArgument,
            "exogenous variable '" + name + "' cannot have an equation");
    if (has_equation[id])
      raise(ErrorCode::DuplicateEquation,
            "two equations given for variable '" + name + "'");
    has_equation[id] = true;
    m.equations_[id] = std::move(formula);
  }
  for (VarId id : m.endo_)
    if (!has_equation[id])
      raise(ErrorCode::MissingEquation,
            "endogenous variable '" + m.name(id) + "' has no equation");

  // direct dependencies; also validates every referenced name
  m.deps_.assign(m.vars_.size(), {});
  for (VarId id : m.endo_) {
    std::vector<VarId> ds;
    for (const std::string& ref : m.equations_[id].variables())
      ds.push_back(m.require_var(ref));
    std::sort(ds.begin(), ds.end());
    ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
    m.deps_[id] = std::move(ds);
  }

  // Kahn's algorithm, always taking the lexicographically smallest ready
  // variable, so the order is unique and reproducible.
  std::vector<uint32_t> pending(m.vars_.size(), 0);
  std::vector<std::vector<VarId>> dependents(m.vars_.size());
  for (VarId id : m.endo_) {
    for (VarId d : m.deps_[id]) {
      if (!m.is_exogenous(d)) {
        ++pending[id];
        dependents[d].push_back(id);
      }
    }
  }
  auto name_greater = [&m](VarId a, VarId b) { return m.name(a) > m.name(b); };
  std::priority_queue<VarId, std::vector<VarId>, decltype(name_greater)> ready(
      name_greater);
  for (VarId id : m.endo_)
    if (pending[id] == 0) ready.push(id);
  while (!ready.empty()) {
    VarId v = ready.top();
    ready.pop();
    m.topo_.push_back(v);
    for (VarId w : dependents[v])
      if (--pending[w] == 0) ready.push(w);
  }
  if (m.topo_.size() != m.endo_.size()) {
    // walk the leftover nodes to name one cycle
    std::vector<int> state(m.vars_.size(), 0);  // 0 unseen, 1 on path, 2 done
    std::vector<VarId> path;
    std::string cycle;
    auto dfs = [&](auto&& self, VarId v) -> bool {
      state[v] = 1;
      path.push_back(v);
      for (VarId d : m.deps_[v]) {
        if (m.is_exogenous(d)) continue;
        if (state[d] == 1) {
          auto it = std::find(path.begin(), path.end(), d);
          for (; it != path.end(); ++it) cycle += m.name(*it) + " -> ";
          cycle += m.name(d);
          return true;
        }
        if (state[d] == 0 && self(self, d)) return true;
      }
      state[v] = 2;
      path.pop_back();
      return false;
    };
    for (VarId id : m.endo_)
      if (pending[id] > 0 && state[id] == 0 && dfs(dfs, id)) break;
    raise(ErrorCode::CyclicDependency, "equations form a cycle: " + cycle);
  }

  // evaluation programs
  m.code_range_.assign(m.vars_.size(), {0, 0});
  for (VarId id : m.endo_) {
    uint32_t begin = static_cast<uint32_t>(m.code_.size());
    uint32_t depth = emit_formula(m, m.equations_[id], m.code_);
    m.code_range_[id] = {begin, static_cast<uint32_t>(m.code_.size())};
    m.max_stack_ = std::max(m.max_stack_, depth);
  }

  for (VarId id : m.endo_) {
    if (!m.equations_[id].is_monotone()) {
      m.monotone_ = false;
      m.conjunctive_ = false;
      break;
    }
  }
  if (m.monotone_) {
    for (VarId id : m.endo_) {
      if (!m.equations_[id].is_conjunctive()) {
        m.conjunctive_ = false;
        break;
      }
    }
  }
  return m;
}

Evaluator::Evaluator(const CausalModel& model)
    : model_(&model),
      values_(model.num_vars(), 0),
      stack_(std::max<uint32_t>(model.max_stack_, 4), 0),
      pin_epoch_(model.num_vars(), 0),
      pin_value_(model.num_vars(), 0) {}

uint8_t Evaluator::run(std::span<const EvalInstr> code,
                       std::span<const uint8_t> values) {
  using Op = EvalInstr::Op;
  uint8_t* sp = stack_.data();
  for (const EvalInstr& ins : code) {
    switch (ins.op) {
      case Op::Const:
        *sp++ = static_cast<uint8_t>(ins.arg);
        break;
      case Op::Var:
        *sp++ = values[ins.arg];
        break;
      case Op::Not:
        sp[-1] ^= 1;
        break;
      case Op::And: {
        uint8_t acc = 1;
        for (uint32_t i = 0; i < ins.arg; ++i) acc &= *--sp;
        *sp++ = acc;
        break;
      }
      case Op::Or: {
        uint8_t acc = 0;
        for (uint32_t i = 0; i < ins.arg; ++i) acc |= *--sp;
        *sp++ = acc;
        break;
      }
    }
  }
  return sp[-1];
}

std::span<const uint8_t> Evaluator::evaluate(
    const Context& ctx, std::span<const std::pair<VarId, bool>> pins) {
  const CausalModel& m = *model_;
  if (ctx.size() != m.exo_.size())
    raise(ErrorCode::PartialContext,
          "context covers " + std::to_string(ctx.size()) + " variables, model has " +
              std::to_string(m.exo_.size()) + " exogenous");
  if (epoch_ == UINT32_MAX) {
    std::fill(pin_epoch_.begin(), pin_epoch_.end(), 0);
    epoch_ = 0;
  }
  ++epoch_;
  for (const auto& [id, value] : pins) {
    assert(!m.is_exogenous(id));
    pin_epoch_[id] = epoch_;
    pin_value_[id] = value ? 1 : 0;
  }
  for (size_t i = 0; i < m.exo_.size(); ++i) values_[m.exo_[i]] = ctx.value(i);
  for (VarId id : m.topo_) {
    if (pin_epoch_[id] == epoch_) {
      values_[id] = pin_value_[id];
    } else {
      auto [begin, end] = m.code_range_[id];
      values_[id] = run({m.code_.data() + begin, m.code_.data() + end}, values_);
    }
  }
  ++count_;
  return values_;
}

Evaluator::CompiledEvent Evaluator::compile_event(const Formula& event) const {
  CompiledEvent out;
  out.max_stack = emit_formula(*model_, event, out.code);
  return out;
}

bool Evaluator::event_holds(const CompiledEvent& event,
                            std::span<const uint8_t> values) {
  if (stack_.size() < event.max_stack) stack_.resize(event.max_stack);
  return run(event.code, values) != 0;
}

Assignment evaluate(const CausalModel& model, const Context& ctx,
                    const Interventions& interventions) {
  Evaluator ev(model);
  auto span = ev.evaluate(ctx, interventions);
  return Assignment(std::vector<uint8_t>(span.begin(), span.end()));
}

bool satisfies(const CausalModel& model, const Context& ctx,
               const CausalFormula& formula) {
  Interventions pins = model.make_interventions(formula.interventions);
  Evaluator ev(model);
  auto event = ev.compile_event(formula.event);
  auto values = ev.evaluate(ctx, pins);
  return ev.event_holds(event, values);
}

bool is_monotone(const CausalModel& model) { return model.monotone(); }
bool is_monotone_formula(const Formula& formula) { return formula.is_monotone(); }
bool is_conjunctive(const CausalModel& model) { return model.conjunctive(); }
bool is_conjunctive_formula(const Formula& formula) { return formula.is_conjunctive(); }

std::string serialize_model(const CausalModel& model) {
  nlohmann::json j;
  std::vector<std::string> exo, endo;
  for (VarId id : model.exogenous()) exo.push_back(model.name(id));
  for (VarId id : model.endogenous()) endo.push_back(model.name(id));
  std::sort(exo.begin(), exo.end());
  std::sort(endo.begin(), endo.end());
  j["exogenous"] = exo;
  j["endogenous"] = endo;
  nlohmann::json eqs = nlohmann::json::object();
  for (VarId id : model.endogenous())
    eqs[model.name(id)] = detail::formula_to_json(model.equation(id));
  j["equations"] = std::move(eqs);
  return j.dump(2);
}

CausalModel parse_model(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object() || !j.contains("exogenous") || !j.contains("endogenous") ||
      !j.contains("equations"))
    raise(ErrorCode::ParseError,
          "model JSON must have keys exogenous, endogenous, equations");
  std::vector<Variable> vars;
  for (const auto& n : j["exogenous"]) {
    if (!n.is_string()) raise(ErrorCode::ParseError, "exogenous names must be strings");
    vars.push_back({n.get<std::string>(), VarKind::Exogenous});
  }
  for (const auto& n : j["endogenous"]) {
    if (!n.is_string()) raise(ErrorCode::ParseError, "endogenous names must be strings");
    vars.push_back({n.get<std::string>(), VarKind::Endogenous});
  }
  std::vector<std::pair<std::string, Formula>> equations;
  for (const auto& [name, formula] : j["equations"].items())
    equations.emplace_back(name, detail::formula_from_json(formula));
  return build_model(std::move(vars), std::move(equations));
}

Context parse_context(const CausalModel& model, const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object()) raise(ErrorCode::ParseError, "context must be a JSON object");
  std::map<std::string, bool> values;
  for (const auto& [name, v] : j.items()) {
    if (v.is_boolean()) {
      values[name] = v.get<bool>();
    } else if (v.is_number_integer() &&
               (v.get<int>() == 0 || v.get<int>() == 1)) {
      values[name] = v.get<int>() == 1;
    } else {
      raise(ErrorCode::ParseError, "context value for '" + name + "' must be 0 or 1");
    }
  }
  return model.make_context(values);
}

std::string serialize_context(const CausalModel& model, const Context& ctx) {
  nlohmann::json j = nlohmann::json::object();
  for (VarId id : model.exogenous())
    j[model.name(id)] = ctx.value(model.exo_index(id)) ? 1 : 0;
  return j.dump(2);
}

}  // namespace teamdiag
