#include "dynplan/domain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>
#include <unordered_set>

namespace dynplan {

std::string FluentDecl::display() const {
  if (args.empty()) return name;
  std::string out = name + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ",";
    out += args[i];
  }
  return out + ")";
}

double State::at(FluentId f) const {
  if (f >= values_.size()) {
    throw DomainError("fluent #" + std::to_string(f) + " is not part of this state");
  }
  return values_[f];
}

void State::set(FluentId f, double v) {
  if (f >= values_.size()) {
    throw DomainError("fluent #" + std::to_string(f) + " is not part of this state");
  }
  values_[f] = v == 0.0 ? 0.0 : v;
}

std::size_t State::hash() const {
  std::size_t h = values_.size();
  for (double v : values_) {
    h ^= std::bit_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

Event::Event(std::vector<std::pair<FluentId, double>> assignments) {
  if (assignments.empty()) throw DomainError("an event must assign at least one fluent");
  std::stable_sort(assignments.begin(), assignments.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& a : assignments) {
    if (!assignments_.empty() && assignments_.back().first == a.first) {
      assignments_.back().second = a.second;
    } else {
      assignments_.push_back(a);
    }
  }
}

// ---------------------------------------------------------------------------

std::optional<FluentId> DomainTheory::find_fluent(std::string_view display_name) const {
  auto it = fluent_lookup_.find(std::string(display_name));
  if (it == fluent_lookup_.end()) return std::nullopt;
  return it->second;
}

FluentId DomainTheory::fluent_id(std::string_view display_name) const {
  if (auto f = find_fluent(display_name)) return *f;
  throw DomainError("unknown fluent '" + std::string(display_name) + "'");
}

std::optional<ActionId> DomainTheory::find_action(std::string_view name) const {
  auto it = action_lookup_.find(std::string(name));
  if (it == action_lookup_.end()) return std::nullopt;
  return it->second;
}

ActionId DomainTheory::action_id(std::string_view name) const {
  if (auto a = find_action(name)) return *a;
  throw DomainError("unknown action '" + std::string(name) + "'");
}

const Expr& DomainTheory::effect_template(ActionId a, FluentId f) const {
  static const Expr none;
  const auto& table = templates_.at(a);
  auto it = table.find(f);
  return it == table.end() ? none : it->second;
}

FluentNamer DomainTheory::namer() const {
  return [this](FluentId f) { return f < fluents_.size() ? fluents_[f].display() : "?"; };
}

std::string DomainTheory::format(std::span<const ActionId> seq) const {
  std::string out = "[";
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ", ";
    out += seq[i] < actions_.size() ? actions_[seq[i]].name : "?";
  }
  return out + "]";
}

void DomainTheory::set_initial(State s) {
  if (s.size() != fluents_.size()) throw DomainError("initial state has the wrong number of fluents");
  for (FluentId f = 0; f < s.size(); ++f) check_value(*this, f, s[f]);
  initial_ = std::move(s);
}

// ---------------------------------------------------------------------------

bool evaluate(const Formula& f, const State& s) {
  switch (f.op()) {
    case Op::constant: return f.constant_value() != 0.0;
    case Op::fluent: return s.at(f.fluent_id()) != 0.0;
    case Op::negation: return !evaluate(f.arg(0), s);
    case Op::conjunction:
      for (const Expr& a : f.args()) {
        if (!evaluate(a, s)) return false;
      }
      return true;
    case Op::disjunction:
      for (const Expr& a : f.args()) {
        if (evaluate(a, s)) return true;
      }
      return false;
    case Op::compare: return compare_values(f.cmp(), eval_num(f.arg(0), s), eval_num(f.arg(1), s));
    default: break;
  }
  throw DomainError("evaluate: expression is not a formula");
}

double eval_num(const NumExpr& e, const State& s) {
  switch (e.op()) {
    case Op::constant: return e.constant_value();
    case Op::fluent: return s.at(e.fluent_id());
    case Op::add: return eval_num(e.arg(0), s) + eval_num(e.arg(1), s);
    case Op::sub: return eval_num(e.arg(0), s) - eval_num(e.arg(1), s);
    case Op::mul: return eval_num(e.arg(0), s) * eval_num(e.arg(1), s);
    case Op::min: {
      double v = eval_num(e.arg(0), s);
      for (std::size_t i = 1; i < e.args().size(); ++i) v = std::min(v, eval_num(e.arg(i), s));
      return v;
    }
    case Op::max: {
      double v = eval_num(e.arg(0), s);
      for (std::size_t i = 1; i < e.args().size(); ++i) v = std::max(v, eval_num(e.arg(i), s));
      return v;
    }
    case Op::conditional:
      return evaluate(e.arg(0), s) ? eval_num(e.arg(1), s) : eval_num(e.arg(2), s);
    default: break;
  }
  throw DomainError("eval_num: expression is not numeric");
}

State progress(const DomainTheory& theory, const State& s, ActionId a) {
  const Action& action = theory.action(a);
  if (!evaluate(action.precondition, s)) {
    throw InapplicableActionError("action '" + action.name + "' is not applicable");
  }
  State next = s;
  for (const ConditionalEffect& eff : action.effects) {
    if (!evaluate(eff.condition, s)) continue;
    const double v = eff.value.sort() == Sort::boolean ? (evaluate(eff.value, s) ? 1.0 : 0.0)
                                                       : eval_num(eff.value, s);
    next.set(eff.target, v);
  }
  return next;
}

std::optional<State> progress_all(const DomainTheory& theory, const State& s,
                                  std::span<const ActionId> seq) {
  State cur = s;
  for (ActionId a : seq) {
    if (!evaluate(theory.action(a).precondition, cur)) return std::nullopt;
    cur = progress(theory, cur, a);
  }
  return cur;
}

void check_value(const DomainTheory& theory, FluentId f, double value) {
  if (f >= theory.fluent_count()) {
    throw DomainError("fluent #" + std::to_string(f) + " is not declared");
  }
  const FluentDecl& decl = theory.fluent(f);
  if (decl.sort == Sort::boolean) {
    if (value != 0.0 && value != 1.0) {
      throw DomainError("boolean fluent '" + decl.display() + "' assigned a non-boolean value");
    }
  } else if (!std::isfinite(value)) {
    throw DomainError("numeric fluent '" + decl.display() + "' assigned a non-finite value");
  }
}

State apply_event(const DomainTheory& theory, const State& s, const Event& e) {
  State next = s;
  for (const auto& [f, v] : e.assignments()) {
    check_value(theory, f, v);
    next.set(f, v);
  }
  return next;
}

// ---------------------------------------------------------------------------

namespace {

void check_references(const Expr& e, std::size_t fluent_count, const std::vector<FluentDecl>& decls,
                      const std::string& where) {
  for (FluentId f : collect_fluents(e)) {
    if (f >= fluent_count) throw DomainError(where + ": reference to undeclared fluent");
  }
  // Fluent leaves must carry the declared sort.
  std::vector<const ExprNode*> stack{e.get()};
  std::unordered_set<const ExprNode*> seen;
  while (!stack.empty()) {
    const ExprNode* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->op == Op::fluent && decls[n->fluent].sort != n->sort) {
      throw DomainError(where + ": fluent '" + decls[n->fluent].display() + "' used with the wrong sort");
    }
    for (const Expr& a : n->args) stack.push_back(a.get());
  }
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

State random_state_near(const State& base, const std::vector<FluentDecl>& decls, std::mt19937_64& rng) {
  State s = base;
  for (FluentId f = 0; f < decls.size(); ++f) {
    if (decls[f].sort == Sort::boolean) {
      s.set(f, (rng() & 1U) ? 1.0 : 0.0);
    } else {
      const double scale = std::max(1.0, std::fabs(base[f]));
      s.set(f, base[f] + (2.0 * uniform01(rng) - 1.0) * 2.0 * scale);
    }
  }
  return s;
}

// True if some state satisfies both conditions. Boolean-only conditions over
// few fluents are enumerated exhaustively; anything else is sampled.
bool conditions_overlap(const Formula& a, const Formula& b, const State& initial,
                        const std::vector<FluentDecl>& decls, const ValidationOptions& options) {
  if (a.is_false() || b.is_false()) return false;
  std::vector<FluentId> mentioned = collect_fluents(make_and({a, b}));
  const bool all_boolean = std::all_of(mentioned.begin(), mentioned.end(),
                                       [&](FluentId f) { return decls[f].sort == Sort::boolean; });
  if (all_boolean && mentioned.size() <= 16) {
    State s = initial;
    for (std::uint32_t mask = 0; mask < (1U << mentioned.size()); ++mask) {
      for (std::size_t i = 0; i < mentioned.size(); ++i) s.set(mentioned[i], (mask >> i) & 1U ? 1.0 : 0.0);
      if (evaluate(a, s) && evaluate(b, s)) return true;
    }
    return false;
  }
  if (evaluate(a, initial) && evaluate(b, initial)) return true;
  std::mt19937_64 rng(options.seed);
  for (std::size_t i = 0; i < options.exclusivity_samples; ++i) {
    State s = random_state_near(initial, decls, rng);
    if (evaluate(a, s) && evaluate(b, s)) return true;
  }
  return false;
}

Expr build_template(const std::vector<const ConditionalEffect*>& effects, const FluentDecl& decl,
                    FluentId target) {
  Expr acc = Expr::fluent(target, decl.sort);
  for (auto it = effects.rbegin(); it != effects.rend(); ++it) {
    const ConditionalEffect& eff = **it;
    if (decl.sort == Sort::boolean) {
      acc = make_or({make_and({eff.condition, eff.value}), make_and({make_not(eff.condition), acc})});
    } else {
      acc = make_if(eff.condition, eff.value, acc);
    }
  }
  return acc;
}

}  // namespace

DomainBuilder::DomainBuilder(std::string name) { theory_.name_ = std::move(name); }

FluentId DomainBuilder::add_fluent(FluentDecl decl, double initial_value) {
  const std::string key = decl.display();
  if (theory_.fluent_lookup_.count(key)) throw DomainError("duplicate fluent '" + key + "'");
  const auto id = static_cast<FluentId>(theory_.fluents_.size());
  theory_.fluent_lookup_.emplace(key, id);
  theory_.fluents_.push_back(std::move(decl));
  initial_.push_back(initial_value);
  return id;
}

ActionId DomainBuilder::add_action(Action action) {
  if (action.name == "finish") throw DomainError("action name 'finish' is reserved");
  if (theory_.action_lookup_.count(action.name)) {
    throw DomainError("duplicate action '" + action.name + "'");
  }
  const auto id = static_cast<ActionId>(theory_.actions_.size());
  theory_.action_lookup_.emplace(action.name, id);
  theory_.actions_.push_back(std::move(action));
  return id;
}

void DomainBuilder::set_goal(Formula goal) {
  user_goal_ = std::move(goal);
  goal_set_ = true;
}

void DomainBuilder::set_heuristic(NumExpr heuristic) { heuristic_ = std::move(heuristic); }

void DomainBuilder::set_finish_cost(NumExpr cost) { finish_cost_ = std::move(cost); }

void DomainBuilder::set_initial_value(FluentId f, double v) { initial_.at(f) = v; }

std::optional<FluentId> DomainBuilder::find_fluent(std::string_view display_name) const {
  return theory_.find_fluent(display_name);
}

DomainTheory DomainBuilder::build(const ValidationOptions& options) && {
  DomainTheory& t = theory_;
  if (!goal_set_) throw DomainError("domain '" + t.name_ + "' has no goal");
  if (t.fluent_lookup_.count("goalReached")) throw DomainError("fluent name 'goalReached' is reserved");

  FluentDecl goal_decl{"goalReached", {}, Sort::boolean, false};
  const auto user_fluents = t.fluents_.size();
  t.goal_reached_ = add_fluent(goal_decl, 0.0);

  auto require = [&](const Expr& e, Sort sort, const std::string& where) {
    if (e.is_null()) throw DomainError(where + " is missing");
    if (e.sort() != sort) throw DomainError(where + " has the wrong sort");
    check_references(e, user_fluents, t.fluents_, where);
  };

  require(user_goal_, Sort::boolean, "goal");
  require(heuristic_, Sort::numeric, "heuristic");
  require(finish_cost_, Sort::numeric, "finish cost");
  for (const Action& a : t.actions_) {
    const std::string where = "action '" + a.name + "'";
    require(a.precondition, Sort::boolean, where + " precondition");
    require(a.cost, Sort::numeric, where + " cost");
    for (const ConditionalEffect& eff : a.effects) {
      if (eff.target >= user_fluents) throw DomainError(where + ": effect on undeclared fluent");
      const FluentDecl& decl = t.fluents_[eff.target];
      require(eff.condition, Sort::boolean, where + " effect condition on " + decl.display());
      require(eff.value, decl.sort, where + " effect value on " + decl.display());
    }
  }

  Action finish;
  finish.name = "finish";
  finish.precondition = user_goal_;
  finish.effects.push_back({t.goal_reached_, Expr::truth(true), Expr::truth(true)});
  finish.cost = finish_cost_;
  t.finish_ = static_cast<ActionId>(t.actions_.size());
  t.action_lookup_.emplace("finish", t.finish_);
  t.actions_.push_back(std::move(finish));

  t.user_goal_ = user_goal_;
  const Expr reached = Expr::fluent(t.goal_reached_, Sort::boolean);
  t.goal_ = reached;
  t.heuristic_ = make_if(reached, Expr::number(0.0), heuristic_);

  State initial(initial_);
  for (FluentId f = 0; f < initial.size(); ++f) check_value(t, f, initial[f]);
  t.initial_ = initial;

  // One-step regression templates and effect-exclusivity checks.
  t.templates_.assign(t.actions_.size(), {});
  for (ActionId a = 0; a < t.actions_.size(); ++a) {
    std::map<FluentId, std::vector<const ConditionalEffect*>> by_target;
    for (const ConditionalEffect& eff : t.actions_[a].effects) by_target[eff.target].push_back(&eff);
    for (auto& [target, effects] : by_target) {
      for (std::size_t i = 0; i < effects.size(); ++i) {
        for (std::size_t j = i + 1; j < effects.size(); ++j) {
          if (conditions_overlap(effects[i]->condition, effects[j]->condition, initial, t.fluents_,
                                 options)) {
            throw DomainError("action '" + t.actions_[a].name + "' has overlapping effects on '" +
                              t.fluents_[target].display() + "'");
          }
        }
      }
      t.templates_[a].emplace(target, build_template(effects, t.fluents_[target], target));
    }
  }

  // Cost positivity over a sample of reachable states.
  std::unordered_set<State, StateHash> seen{initial};
  std::deque<State> frontier{initial};
  while (!frontier.empty() && seen.size() <= options.reachable_samples) {
    State s = std::move(frontier.front());
    frontier.pop_front();
    for (ActionId a = 0; a < t.actions_.size(); ++a) {
      const Action& act = t.actions_[a];
      if (!evaluate(act.precondition, s)) continue;
      const double c = eval_num(act.cost, s);
      if (!(c > 0.0) || !std::isfinite(c)) {
        throw DomainError("action '" + act.name + "' has non-positive cost " + std::to_string(c) +
                          " in a reachable state");
      }
      State next = progress(t, s, a);
      if (seen.size() <= options.reachable_samples && seen.insert(next).second) {
        frontier.push_back(std::move(next));
      }
    }
  }
  return std::move(theory_);
}

}  // namespace dynplan
