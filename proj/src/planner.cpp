#include "dynplan/planner.hpp"

#include <cmath>

#include "dynplan/recovery.hpp"
#include "dynplan/regression.hpp"

namespace dynplan {

const char* to_string(PlanStatus status) {
  switch (status) {
    case PlanStatus::found: return "found";
    case PlanStatus::unsolvable: return "unsolvable";
    case PlanStatus::exhausted: return "exhausted";
    case PlanStatus::suspended: return "suspended";
  }
  return "?";
}

RegressionPlanner::RegressionPlanner(const DomainTheory& theory, PlannerConfig config)
    : theory_(theory), config_(config) {}

bool RegressionPlanner::satisfies_goal(const State& state, SearchSpace& space, const OpenEntry& entry,
                                       WorkCounters& counters) const {
  if (space.tree.empty()) return false;
  const NodeId node = entry.node == kNoNode ? space.tree.root() : entry.node;
  // Fluent-wise regression is memoised on the node, so this is cheap after
  // the first time a node reaches the head.
  Expr goal = rewrite(theory_.goal(), [&](const Expr& leaf) {
    return space.tree.regressed_fluent(theory_, node, leaf.fluent_id(), counters);
  });
  ++counters.evaluations;
  return evaluate(goal, state);
}

void RegressionPlanner::expand(const State& state, SearchSpace& space, const OpenEntry& entry,
                               WorkCounters& counters) const {
  SearchTree& tree = space.tree;
  NodeId n = entry.node;
  if (n == kNoNode) {
    if (!entry.seq.empty()) throw InternalError("open entry without a tree node");
    if (tree.empty()) {
      n = tree.create_root(theory_);
      TreeNode& root = tree.node(n);
      ++counters.evaluations;
      root.h = eval_num(root.H, state);
      space.index.add(n, AnnotationKind::heuristic, mentioned_fluents(root.H));
    } else {
      n = tree.root();
    }
  }
  ++counters.expansions;
  tree.node(n).expanded = true;

  for (ActionId a = 0; a < theory_.action_count(); ++a) {
    const Action& action = theory_.action(a);
    ++counters.generations;
    NodeId child = tree.child(n, a);
    if (child == kNoNode) {
      child = tree.add_child(theory_, n, a);
      Formula P = tree.regress_at(theory_, n, action.precondition, counters);
      space.index.add(child, AnnotationKind::precondition, mentioned_fluents(P));
      tree.node(child).P = std::move(P);
    }
    ++counters.evaluations;
    const bool possible = evaluate(tree.node(child).P, state);
    tree.node(child).p = possible;
    tree.node(child).expanded = false;
    if (!possible) continue;

    if (!tree.node(child).has_cost_annotation()) {
      NumExpr C = tree.regress_at(theory_, n, action.cost, counters);
      NumExpr H = tree.regress_at(theory_, child, theory_.heuristic(), counters);
      space.index.add(child, AnnotationKind::cost, mentioned_fluents(C));
      space.index.add(child, AnnotationKind::heuristic, mentioned_fluents(H));
      TreeNode& c = tree.node(child);
      c.C = std::move(C);
      c.H = std::move(H);
    }
    TreeNode& c = tree.node(child);
    counters.evaluations += 2;
    const double cost = eval_num(c.C, state);
    if (!(cost > 0.0) || !std::isfinite(cost)) {
      throw DomainError("action '" + action.name + "' has non-positive cost " + std::to_string(cost) +
                        " after " + theory_.format(entry.seq));
    }
    c.c = cost;
    c.h = eval_num(c.H, state);
    space.open.push({entry.g + cost, c.h, child, c.seq});
  }
}

PlanResult RegressionPlanner::plan(const State& state, SearchSpace& space, WorkCounters& counters,
                                   const CheckpointHook& hook) const {
  const WorkCounters start = counters;
  PlanResult result;
  auto done = [&](PlanStatus status) {
    result.status = status;
    result.stats = counters - start;
    return result;
  };
  std::uint64_t expansions = 0;
  for (;;) {
    if (space.open.empty()) return done(PlanStatus::unsolvable);
    const OpenEntry& head = space.open.front();
    if (satisfies_goal(state, space, head, counters)) {
      result.plan = head.seq;
      result.cost = head.g;
      return done(PlanStatus::found);
    }
    if (expansions >= config_.expansion_cap) return done(PlanStatus::exhausted);
    OpenEntry entry = space.open.pop_front();
    expand(state, space, entry, counters);
    ++expansions;
    if (config_.check_consistency) {
      verify_consistency(theory_, state, space, config_.consistency_samples);
    }
    if (hook && hook() == HookAction::suspend) return done(PlanStatus::suspended);
  }
}

PlanResult plan_from_scratch(const DomainTheory& theory, const State& state, SearchSpace& space,
                             WorkCounters& counters, PlannerConfig config) {
  space = SearchSpace::fresh();
  return RegressionPlanner(theory, config).plan(state, space, counters);
}

}  // namespace dynplan
