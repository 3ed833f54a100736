#pragma once

// Recover-then-continue against planning from scratch in the changed state.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "dynplan/planner.hpp"
#include "dynplan/recovery.hpp"

struct EquivalenceOutcome {
  bool ok = true;
  std::string why;
  bool solvable = false;
  bool delta_empty = false;
  bool continued = false;
};

/// `space` must have been planned in `s1`. Checks after recover and continued
/// search: same verdict and cost (to 1e-9 relative, since
/// g is shifted by offsets rather than re-summed) as the conventional planner in `s2`,
/// identical head as the regression planner from scratch in `s2`, a clean
/// audit and an index equal to one rebuilt from the tree.
inline EquivalenceOutcome recover_matches_scratch(const dynplan::DomainTheory& t, dynplan::SearchSpace& space,
                                                  const dynplan::State& s1, const dynplan::State& s2) {
  using namespace dynplan;
  EquivalenceOutcome out;
  auto fail = [&](const std::string& why) {
    out.ok = false;
    out.why = why;
    return out;
  };
  WorkCounters c;
  const RecoveryStats stats = recover(t, s1, s2, space, c);
  out.delta_empty = stats.affected == 0;
  const ConsistencyReport after_recover = audit(t, s2, space);
  if (!after_recover.ok()) return fail("audit after recover: " + after_recover.problems.front());

  const std::uint64_t before = c.expansions;
  const PlanResult resumed = RegressionPlanner(t).plan(s2, space, c);
  out.continued = c.expansions > before;

  SearchSpace fresh;
  WorkCounters cf;
  const PlanResult scratch = plan_from_scratch(t, s2, fresh, cf);
  WorkCounters cb;
  const PlanResult base = plan_baseline(t, s2, cb);

  out.solvable = base.status == PlanStatus::found;
  if ((resumed.status == PlanStatus::found) != out.solvable) return fail("verdict differs from the baseline");
  if ((scratch.status == PlanStatus::found) != out.solvable) return fail("scratch verdict differs");
  if (out.solvable) {
    std::ostringstream os;
    os.precision(17);
    if (std::abs(resumed.cost - base.cost) > 1e-9 * std::max(1.0, std::abs(base.cost))) {
      os << "cost " << resumed.cost << " vs baseline " << base.cost;
      return fail(os.str());
    }
    if (*resumed.plan != *scratch.plan) {
      return fail("head " + t.format(*resumed.plan) + " vs scratch " + t.format(*scratch.plan));
    }
  }
  const ConsistencyReport final_audit = audit(t, s2, space);
  if (!final_audit.ok()) return fail("audit after search: " + final_audit.problems.front());
  if (!(rebuild_index(space.tree) == space.index)) return fail("index differs from the rebuilt one");
  return out;
}
