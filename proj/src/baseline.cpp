#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

#include "dynplan/planner.hpp"

namespace dynplan {

namespace {

struct BaseNode {
  State state;
  std::uint32_t parent;
  ActionId action;
  double g;
};

struct QueueItem {
  double f;
  double h;
  std::uint64_t order;
  std::uint32_t node;
};

struct QueueAfter {
  bool operator()(const QueueItem& a, const QueueItem& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    return a.order > b.order;
  }
};

constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

}  // namespace

PlanResult plan_baseline(const DomainTheory& theory, const State& state, WorkCounters& counters,
                         const BaselineConfig& config, const CheckpointHook& hook) {
  const WorkCounters start = counters;
  PlanResult result;
  auto done = [&](PlanStatus status) {
    result.status = status;
    result.stats = counters - start;
    return result;
  };
  auto heuristic = [&](const State& s) {
    ++counters.evaluations;
    return config.heuristic ? config.heuristic(s) : eval_num(theory.heuristic(), s);
  };

  std::vector<BaseNode> nodes;
  std::priority_queue<QueueItem, std::vector<QueueItem>, QueueAfter> queue;
  std::unordered_map<State, double, StateHash> best_g;
  std::uint64_t order = 0;

  nodes.push_back({state, kNoParent, 0, 0.0});
  const double h0 = heuristic(state);
  queue.push({h0, h0, order++, 0});
  if (config.duplicate_detection) best_g.emplace(state, 0.0);

  std::uint64_t expansions = 0;
  while (!queue.empty()) {
    const QueueItem item = queue.top();
    queue.pop();
    const std::uint32_t id = item.node;
    if (config.duplicate_detection) {
      auto it = best_g.find(nodes[id].state);
      if (it != best_g.end() && it->second < nodes[id].g) continue;  // stale entry
    }
    ++counters.evaluations;
    if (evaluate(theory.goal(), nodes[id].state)) {
      Sequence plan;
      for (std::uint32_t cur = id; nodes[cur].parent != kNoParent; cur = nodes[cur].parent) {
        plan.push_back(nodes[cur].action);
      }
      std::reverse(plan.begin(), plan.end());
      result.plan = std::move(plan);
      result.cost = nodes[id].g;
      return done(PlanStatus::found);
    }
    if (expansions >= config.expansion_cap) return done(PlanStatus::exhausted);
    ++expansions;
    ++counters.expansions;

    for (ActionId a = 0; a < theory.action_count(); ++a) {
      const Action& action = theory.action(a);
      ++counters.generations;
      ++counters.evaluations;
      if (!evaluate(action.precondition, nodes[id].state)) continue;
      ++counters.evaluations;
      const double cost = eval_num(action.cost, nodes[id].state);
      if (!(cost > 0.0) || !std::isfinite(cost)) {
        throw DomainError("action '" + action.name + "' has non-positive cost " + std::to_string(cost));
      }
      // one evaluation per conditional effect (condition and value)
      counters.evaluations += action.effects.size();
      State next = progress(theory, nodes[id].state, a);
      const double g = nodes[id].g + cost;
      if (config.duplicate_detection) {
        auto [it, inserted] = best_g.try_emplace(next, g);
        if (!inserted) {
          if (it->second <= g) continue;
          it->second = g;
        }
      }
      const double h = heuristic(next);
      nodes.push_back({std::move(next), id, a, g});
      queue.push({g + h, h, order++, static_cast<std::uint32_t>(nodes.size() - 1)});
    }
    if (hook && hook() == HookAction::suspend) return done(PlanStatus::suspended);
  }
  return done(PlanStatus::unsolvable);
}

}  // namespace dynplan
