#pragma once

// Regression-annotated A* and the conventional progression A* used as the
// replanning comparator.

#include <cstdint>
#include <functional>
#include <optional>

#include "dynplan/counters.hpp"
#include "dynplan/domain.hpp"
#include "dynplan/search_space.hpp"

namespace dynplan {

enum class PlanStatus {
  found,       // head of open satisfies the goal
  unsolvable,  // open list ran empty
  exhausted,   // expansion cap reached
  suspended,   // checkpoint hook asked to stop (events pending)
};

const char* to_string(PlanStatus status);

enum class HookAction { proceed, suspend };

/// Called once per expansion, after the children were generated and before
/// the next head is examined.
using CheckpointHook = std::function<HookAction()>;

struct PlannerConfig {
  std::uint64_t expansion_cap = 1'000'000;
  /// Re-evaluate a sample of annotations after every expansion.
  bool check_consistency = false;
  std::size_t consistency_samples = 32;
};

struct PlanResult {
  PlanStatus status = PlanStatus::unsolvable;
  std::optional<Sequence> plan;
  double cost = 0.0;
  WorkCounters stats;  // work done by this call only
};

class RegressionPlanner {
 public:
  explicit RegressionPlanner(const DomainTheory& theory, PlannerConfig config = {});

  /// Runs best-first search on `space` (which must be consistent with
  /// `state`) until the head satisfies the goal, the open list empties, the
  /// cap is hit or the hook suspends. `counters` accumulates live.
  PlanResult plan(const State& state, SearchSpace& space, WorkCounters& counters,
                  const CheckpointHook& hook = {}) const;

  /// Expands one entry that has already been removed from open.
  void expand(const State& state, SearchSpace& space, const OpenEntry& entry,
              WorkCounters& counters) const;

  /// Does the goal hold after the entry's sequence (regressed check).
  bool satisfies_goal(const State& state, SearchSpace& space, const OpenEntry& entry,
                      WorkCounters& counters) const;

  const DomainTheory& theory() const { return theory_; }
  const PlannerConfig& config() const { return config_; }

 private:
  const DomainTheory& theory_;
  PlannerConfig config_;
};

/// Convenience: fresh search space, plan from scratch.
PlanResult plan_from_scratch(const DomainTheory& theory, const State& state, SearchSpace& space,
                             WorkCounters& counters, PlannerConfig config = {});

struct BaselineConfig {
  std::uint64_t expansion_cap = 1'000'000;
  bool duplicate_detection = true;
  /// Opaque heuristic; when empty the theory's heuristic expression is used.
  std::function<double(const State&)> heuristic;
};

/// Progression A* with no annotations and no retained tree.
PlanResult plan_baseline(const DomainTheory& theory, const State& state, WorkCounters& counters,
                         const BaselineConfig& config = {}, const CheckpointHook& hook = {});

}  // namespace dynplan
