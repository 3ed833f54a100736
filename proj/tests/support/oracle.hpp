#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's evaluation, progression or search code; only the
// data types are shared.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dynplan/domain.hpp"
#include "dynplan/expr.hpp"

namespace oracle {

using Values = std::vector<double>;

/// Numeric value of `e` (Booleans as 0/1), straight recursion over the AST.
double value(const dynplan::Expr& e, std::span<const double> s);
bool holds(const dynplan::Expr& f, std::span<const double> s);

bool applicable(const dynplan::DomainTheory& t, std::span<const double> s, dynplan::ActionId a);
/// Effects applied simultaneously against `s`; the precondition is ignored.
Values apply(const dynplan::DomainTheory& t, std::span<const double> s, dynplan::ActionId a);
double cost(const dynplan::DomainTheory& t, std::span<const double> s, dynplan::ActionId a);

/// Cost of the sequence from `s`, or nullopt if some action is inapplicable.
std::optional<double> sequence_cost(const dynplan::DomainTheory& t, std::span<const double> s,
                                    std::span<const dynplan::ActionId> seq);

struct Optimum {
  double cost = 0.0;
  /// Lexicographically smallest optimal sequence (by action id).
  dynplan::Sequence plan;
};

/// Exhaustive depth-first search over all sequences up to `max_depth`
/// actions, stopping each branch at the first state where goalReached holds.
std::optional<Optimum> brute_force(const dynplan::DomainTheory& t, std::span<const double> s,
                                   std::size_t max_depth);

/// Uniform-cost search over states with duplicate detection; no heuristic.
/// Returns the optimal cost or nullopt if no goalReached state is reachable.
std::optional<double> uniform_cost(const dynplan::DomainTheory& t, std::span<const double> s);

// --- Random instances ---------------------------------------------------------

/// Small random domain: a few Boolean and numeric fluents, a budget fluent
/// decremented by every action (so every plan has bounded length), 2 to 4
/// actions with conditional effects and state-dependent costs, and an
/// admissible consistent heuristic. Sometimes adds a fluent nothing mentions.
dynplan::DomainTheory random_domain(std::uint64_t seed);

/// Upper bound on plan length in any state of a random domain.
inline constexpr std::size_t kRandomDepth = 7;

/// Value drawn for fluent `f` the way events on random domains are drawn.
double random_value(const dynplan::DomainTheory& t, dynplan::FluentId f, std::mt19937_64& rng);

/// Event on 1 to `max_changes` user fluents (never goalReached).
dynplan::Event random_event(const dynplan::DomainTheory& t, std::mt19937_64& rng,
                            std::size_t max_changes = 3);

/// Random total state over the user fluents; goalReached is false.
dynplan::State random_state(const dynplan::DomainTheory& t, std::mt19937_64& rng);

/// Random formula / numeric expression over the user fluents, built with
/// the raw constructors so nothing is simplified away.
dynplan::Expr random_formula(const dynplan::DomainTheory& t, std::mt19937_64& rng, int depth);
dynplan::Expr random_numexpr(const dynplan::DomainTheory& t, std::mt19937_64& rng, int depth);

}  // namespace oracle
