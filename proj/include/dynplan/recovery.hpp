#pragma once

// Repairing a search space after the initial state changed: diff against the
// fluent index, then patch applicability, costs and heuristic values.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dynplan/counters.hpp"
#include "dynplan/domain.hpp"
#include "dynplan/search_space.hpp"

namespace dynplan {

struct Delta {
  std::vector<FluentId> changed_fluents;  // indexed fluents whose value differs
  std::vector<IndexEntry> affected;       // sorted by (node, kind), no duplicates

  bool empty() const { return affected.empty(); }
};

/// Only fluents that are keys of `index` are compared; one comparison is
/// counted per key.
Delta diff_states(const State& s1, const State& s2, const FluentIndex& index, WorkCounters& counters);

struct RecoveryStats {
  WorkCounters work;
  std::size_t changed_fluents = 0;
  std::size_t affected = 0;
  std::size_t became_impossible = 0;
  std::size_t became_possible = 0;
  std::size_t reinserted = 0;     // became-possible nodes put back into open
  std::size_t open_removed = 0;   // entries dropped below dead nodes
  std::size_t cost_changes = 0;   // c entries whose value moved
  std::size_t heuristic_updates = 0;
};

/// Brings `space` from consistency with `s1` to consistency with `s2`.
/// Formulas are regressed only for nodes that become possible and have never
/// been annotated with cost and heuristic.
RecoveryStats recover(const DomainTheory& theory, const State& s1, const State& s2, SearchSpace& space,
                      WorkCounters& counters);

/// Sum of cached costs from the root to `node`.
double get_g_value(const SearchTree& tree, NodeId node);
double get_g_value(const SearchTree& tree, std::span<const ActionId> seq);

/// Index built from scratch from the annotations present in `tree`.
FluentIndex rebuild_index(const SearchTree& tree);

struct ConsistencyReport {
  std::size_t checked = 0;
  std::vector<std::string> problems;

  bool ok() const { return problems.empty(); }
};

/// Re-evaluates annotations against `state` and checks the open list: every
/// entry's g equals get_g_value, h equals the cached h, the node is possible
/// and on a live branch; and every live child of an expanded live node is
/// either expanded or in open. Heuristic values of nodes outside the open
/// list are not checked (they are never read). `stride` > 1 checks every
/// stride-th node only.
ConsistencyReport audit(const DomainTheory& theory, const State& state, const SearchSpace& space,
                        std::size_t stride = 1);

/// Sampled audit that throws InternalError on the first problem.
void verify_consistency(const DomainTheory& theory, const State& state, const SearchSpace& space,
                        std::size_t samples);

}  // namespace dynplan
