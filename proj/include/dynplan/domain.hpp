#pragma once

// Ground action theory: fluents, states, actions with conditional effects and
// state-dependent costs, the goal and heuristic, plus exogenous events.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dynplan/expr.hpp"

namespace dynplan {

using ActionId = std::uint32_t;
using Sequence = std::vector<ActionId>;

/// Ill-formed domain content, sort mismatches and references to fluents the
/// domain does not declare.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InapplicableActionError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Broken internal invariant (tree/open/index disagreeing with the state).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct FluentDecl {
  std::string name;
  std::vector<std::string> args;
  Sort sort = Sort::boolean;
  /// Value must stay strictly positive (prices, distances). Perturbations
  /// respect this.
  bool positive = false;

  std::string display() const;
};

/// Total assignment of values to the fluents of one domain. Boolean fluents
/// hold 0 or 1.
class State {
 public:
  State() = default;
  explicit State(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double operator[](FluentId f) const { return values_[f]; }
  double at(FluentId f) const;
  bool truth(FluentId f) const { return at(f) != 0.0; }
  void set(FluentId f, double v);
  std::span<const double> values() const { return values_; }

  friend bool operator==(const State&, const State&) = default;
  std::size_t hash() const;

 private:
  std::vector<double> values_;
};

struct StateHash {
  std::size_t operator()(const State& s) const { return s.hash(); }
};

struct ConditionalEffect {
  FluentId target = 0;
  Formula condition;
  Expr value;  // sort matches the target fluent
};

struct Action {
  std::string name;
  Formula precondition;
  std::vector<ConditionalEffect> effects;
  NumExpr cost;
};

/// Exogenous change: raw fluent assignments.
class Event {
 public:
  Event() = default;
  /// Sorted by fluent; duplicates resolved last-wins. Throws on empty input.
  explicit Event(std::vector<std::pair<FluentId, double>> assignments);

  std::span<const std::pair<FluentId, double>> assignments() const { return assignments_; }

 private:
  std::vector<std::pair<FluentId, double>> assignments_;
};

class DomainTheory {
 public:
  std::span<const FluentDecl> fluents() const { return fluents_; }
  const FluentDecl& fluent(FluentId f) const { return fluents_.at(f); }
  std::size_t fluent_count() const { return fluents_.size(); }
  std::optional<FluentId> find_fluent(std::string_view display_name) const;
  FluentId fluent_id(std::string_view display_name) const;

  std::span<const Action> actions() const { return actions_; }
  const Action& action(ActionId a) const { return actions_.at(a); }
  std::size_t action_count() const { return actions_.size(); }
  std::optional<ActionId> find_action(std::string_view name) const;
  ActionId action_id(std::string_view name) const;

  ActionId finish_action() const { return finish_; }
  FluentId goal_reached_fluent() const { return goal_reached_; }
  /// Goal as written by the domain author (the finish precondition).
  const Formula& user_goal() const { return user_goal_; }
  /// Goal used by the planners: the goalReached atom.
  const Formula& goal() const { return goal_; }
  /// Heuristic, forced to zero once goalReached holds.
  const NumExpr& heuristic() const { return heuristic_; }
  const State& initial() const { return initial_; }
  const std::string& name() const { return name_; }

  /// One-step regression of fluent `f` through action `a`, in terms of the
  /// state before `a`. Null when `a` never changes `f`.
  const Expr& effect_template(ActionId a, FluentId f) const;

  std::string fluent_name(FluentId f) const { return fluents_.at(f).display(); }
  FluentNamer namer() const;
  std::string format(const Expr& e) const { return to_string(e, namer()); }
  std::string format(std::span<const ActionId> seq) const;

  /// Replace the initial state (values are validated against sorts).
  void set_initial(State s);

 private:
  friend class DomainBuilder;

  std::string name_;
  std::vector<FluentDecl> fluents_;
  std::unordered_map<std::string, FluentId> fluent_lookup_;
  std::vector<Action> actions_;
  std::unordered_map<std::string, ActionId> action_lookup_;
  // templates_[a] maps fluent -> one-step regression template.
  std::vector<std::unordered_map<FluentId, Expr>> templates_;
  ActionId finish_ = 0;
  FluentId goal_reached_ = 0;
  Formula user_goal_;
  Formula goal_;
  NumExpr heuristic_;
  State initial_;
};

struct ValidationOptions {
  /// Random states sampled when checking effect-condition exclusivity.
  std::size_t exclusivity_samples = 256;
  /// Reachable states visited when checking cost positivity.
  std::size_t reachable_samples = 2000;
  std::uint64_t seed = 0x5eed;
};

/// Assembles a DomainTheory and performs the finish transformation: a
/// synthetic action `finish` whose precondition is the user goal and whose
/// only effect sets the Boolean fluent `goalReached`.
class DomainBuilder {
 public:
  explicit DomainBuilder(std::string name = "domain");

  FluentId add_fluent(FluentDecl decl, double initial_value = 0.0);
  ActionId add_action(Action action);
  void set_goal(Formula goal);
  void set_heuristic(NumExpr heuristic);
  void set_finish_cost(NumExpr cost);
  void set_initial_value(FluentId f, double v);

  const FluentDecl& fluent(FluentId f) const { return theory_.fluents_.at(f); }
  std::size_t fluent_count() const { return theory_.fluents_.size(); }
  std::optional<FluentId> find_fluent(std::string_view display_name) const;

  DomainTheory build(const ValidationOptions& options = {}) &&;

 private:
  DomainTheory theory_;
  std::vector<double> initial_;
  Formula user_goal_;
  NumExpr heuristic_ = Expr::number(0.0);
  NumExpr finish_cost_ = Expr::number(1.0);
  bool goal_set_ = false;
};

// --- Model checking and progression ---------------------------------------

bool evaluate(const Formula& f, const State& s);
double eval_num(const NumExpr& e, const State& s);

/// Forward application. Throws InapplicableActionError if the precondition
/// does not hold.
State progress(const DomainTheory& theory, const State& s, ActionId a);

/// Progress through a whole sequence; returns nullopt at the first
/// inapplicable action.
std::optional<State> progress_all(const DomainTheory& theory, const State& s,
                                  std::span<const ActionId> seq);

/// Overwrite the event's fluents; everything else is unchanged.
State apply_event(const DomainTheory& theory, const State& s, const Event& e);

/// Throws DomainError unless `value` is admissible for fluent `f`.
void check_value(const DomainTheory& theory, FluentId f, double value);

}  // namespace dynplan
