#include <algorithm>
#include <random>

#include "doctest.h"
#include "domains.hpp"
#include "dynplan/planner.hpp"
#include "dynplan/recovery.hpp"
#include "equivalence.hpp"
#include "oracle.hpp"

using namespace dynplan;

namespace {

struct Planned {
  DomainTheory theory;
  SearchSpace space;
  PlanResult result;
};

Planned planned(const std::string& name) {
  Planned p{bundled(name), {}, {}};
  WorkCounters c;
  p.result = plan_from_scratch(p.theory, p.theory.initial(), p.space, c);
  return p;
}

Sequence seq_of(const DomainTheory& t, std::initializer_list<const char*> names) {
  Sequence s;
  for (const char* n : names) s.push_back(t.action_id(n));
  return s;
}

bool has_entry(std::span<const IndexEntry> entries, NodeId node, AnnotationKind kind) {
  return std::find(entries.begin(), entries.end(), IndexEntry{node, kind}) != entries.end();
}

}  // namespace

TEST_SUITE("recovery") {
  TEST_CASE("diff of equal states is empty") {
    Planned p = planned("soccer-toy");
    WorkCounters c;
    Delta d = diff_states(p.theory.initial(), p.theory.initial(), p.space.index, c);
    CHECK(d.changed_fluents.empty());
    CHECK(d.affected.empty());
    CHECK(c.comparisons == p.space.index.keys().size());
    CHECK(c.evaluations == 0);
  }

  TEST_CASE("soccer: ball rolls away") {
    Planned p = planned("soccer-toy");
    const DomainTheory& t = p.theory;
    const State s1 = t.initial();
    const State s2 = apply_event(t, s1, Event({{t.fluent_id("distBall"), 20.0}}));
    const NodeId fin = *p.space.tree.find(seq_of(t, {"turn", "driveToGoal", "finish"}));

    WorkCounters c;
    Delta d = diff_states(s1, s2, p.space.index, c);
    CHECK(d.changed_fluents == std::vector<FluentId>{t.fluent_id("distBall")});
    CHECK(has_entry(d.affected, fin, AnnotationKind::precondition));
    CHECK(std::is_sorted(d.affected.begin(), d.affected.end()));

    RecoveryStats stats = recover(t, s1, s2, p.space, c);
    CHECK(stats.became_impossible >= 1);
    CHECK_FALSE(p.space.tree.node(fin).p);
    CHECK_FALSE(p.space.open.contains(seq_of(t, {"turn", "driveToGoal", "finish"})));
    CHECK(audit(t, s2, p.space).ok());

    WorkCounters c2;
    PlanResult r = RegressionPlanner(t).plan(s2, p.space, c2);
    REQUIRE(r.status == PlanStatus::found);
    CHECK(*r.plan == seq_of(t, {"approachBall", "turn", "driveToGoal", "finish"}));
    CHECK(r.cost == 10.0);
  }

  TEST_CASE("soccer: ball rolls closer") {
    Planned p = planned("soccer-toy");
    const DomainTheory& t = p.theory;
    const State s2 = apply_event(t, t.initial(), Event({{t.fluent_id("distBall"), 5.0}}));
    WorkCounters c;
    recover(t, t.initial(), s2, p.space, c);
    CHECK(p.space.open.front().seq == *p.result.plan);
    WorkCounters c2;
    PlanResult r = RegressionPlanner(t).plan(s2, p.space, c2);
    CHECK(*r.plan == *p.result.plan);
    CHECK(c2.expansions == 0);
  }

  TEST_CASE("unindexed change leaves everything untouched") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      DomainTheory t = oracle::random_domain(seed);
      SearchSpace space;
      WorkCounters c;
      plan_from_scratch(t, t.initial(), space, c);
      const auto keys = space.index.keys();
      for (FluentId f = 0; f < t.fluent_count(); ++f) {
        if (f == t.goal_reached_fluent() || std::binary_search(keys.begin(), keys.end(), f)) continue;
        std::mt19937_64 rng(seed);
        const double v = t.fluent(f).sort == Sort::boolean ? 1.0 - t.initial()[f]
                                                           : t.initial()[f] + 1.0 + oracle::random_value(t, f, rng);
        const State s2 = apply_event(t, t.initial(), Event({{f, v}}));
        const SearchSpace before = space;
        WorkCounters rc;
        RecoveryStats stats = recover(t, t.initial(), s2, space, rc);
        CHECK(stats.affected == 0);
        CHECK(rc.evaluations == 0);
        CHECK(rc.regressions == 0);
        CHECK(space.tree == before.tree);
        CHECK(space.open == before.open);
        CHECK(space.index == before.index);
        // Independent confirmation: no annotation changes its value.
        for (NodeId id = 0; id < space.tree.size(); ++id) {
          const TreeNode& n = space.tree.node(id);
          if (!n.P.is_null()) CHECK(oracle::holds(n.P, s2.values()) == n.p);
          if (!n.C.is_null()) CHECK(oracle::value(n.C, s2.values()) == n.c);
        }
      }
    }
  }

  TEST_CASE("g values") {
    DomainTheory t = bundled("soccer-toy");
    SearchTree tree;
    tree.create_root(t);
    CHECK(get_g_value(tree, Sequence{}) == 0.0);
    NodeId a = tree.add_child(t, tree.root(), 0);
    NodeId b = tree.add_child(t, a, 1);
    NodeId c = tree.add_child(t, b, 2);
    tree.node(a).c = 2;
    tree.node(b).c = 3;
    tree.node(c).c = 1;
    CHECK(get_g_value(tree, c) == 6.0);
    CHECK(get_g_value(tree, Sequence{0, 1, 2}) == 6.0);
    CHECK_THROWS_AS(get_g_value(tree, Sequence{3}), InternalError);
  }

  TEST_CASE("g values follow the progression after random events") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      DomainTheory t = oracle::random_domain(seed);
      std::mt19937_64 rng(seed + 5);
      SearchSpace space;
      WorkCounters c;
      State s = t.initial();
      plan_from_scratch(t, s, space, c);
      for (int k = 0; k < 3; ++k) {
        const State s2 = apply_event(t, s, oracle::random_event(t, rng));
        recover(t, s, s2, space, c);
        s = s2;
      }
      for (const OpenEntry& e : space.open.ordered()) {
        auto g = oracle::sequence_cost(t, s.values(), e.seq);
        REQUIRE(g);
        CHECK(e.g == doctest::Approx(*g).epsilon(1e-12));
        CHECK(get_g_value(space.tree, e.seq) == doctest::Approx(*g).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("rebuilt index") {
    CHECK(rebuild_index(SearchTree{}).empty());
    Planned p = planned("soccer-toy");
    const DomainTheory& t = p.theory;
    FluentIndex idx = rebuild_index(p.space.tree);
    CHECK(idx == p.space.index);
    const NodeId fin = *p.space.tree.find(seq_of(t, {"turn", "driveToGoal", "finish"}));
    CHECK(has_entry(idx.entries(t.fluent_id("distBall")), fin, AnnotationKind::precondition));
  }

  TEST_CASE("incremental index equals the rebuilt one after many recoveries") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      DomainTheory t = oracle::random_domain(seed);
      std::mt19937_64 rng(seed + 9);
      SearchSpace space;
      WorkCounters c;
      State s = t.initial();
      plan_from_scratch(t, s, space, c);
      for (int k = 0; k < 8; ++k) {
        const State s2 = apply_event(t, s, oracle::random_event(t, rng));
        recover(t, s, s2, space, c);
        RegressionPlanner(t).plan(s2, space, c);
        s = s2;
        REQUIRE(rebuild_index(space.tree) == space.index);
      }
    }
  }

  TEST_CASE("recover then continue equals planning from scratch") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      DomainTheory t = oracle::random_domain(seed);
      std::mt19937_64 rng(seed * 7 + 3);
      for (int k = 0; k < 3; ++k) {
        const State s1 = oracle::random_state(t, rng);
        SearchSpace space;
        WorkCounters c;
        plan_from_scratch(t, s1, space, c);
        const State s2 = apply_event(t, s1, oracle::random_event(t, rng));
        EquivalenceOutcome out = recover_matches_scratch(t, space, s1, s2);
        CAPTURE(seed);
        CHECK_MESSAGE(out.ok, out.why);
        ++checked;
      }
    }
    CHECK(checked == 180);
  }

  TEST_CASE("chained recoveries on bundled domains") {
    for (const char* name : {"soccer-toy", "tpp-small", "zenotravel-small"}) {
      CAPTURE(name);
      DomainTheory t = bundled(name);
      std::mt19937_64 rng(42);
      SearchSpace space;
      WorkCounters c;
      State s = t.initial();
      plan_from_scratch(t, s, space, c);
      for (int k = 0; k < 4; ++k) {
        std::vector<FluentId> numeric;
        for (FluentId f = 0; f < t.fluent_count(); ++f)
          if (t.fluent(f).sort == Sort::numeric) numeric.push_back(f);
        const FluentId f = numeric[std::uniform_int_distribution<std::size_t>(0, numeric.size() - 1)(rng)];
        // Within 25% of the original value, which keeps every bundled
        // problem solvable (tree search does not terminate on unsolvable ones).
        const double factor = 0.8 + 0.45 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const double init = t.initial()[f];
        const State s2 = apply_event(t, s, Event({{f, init == 0.0 ? 1.0 : init * factor}}));
        EquivalenceOutcome out = recover_matches_scratch(t, space, s, s2);
        CHECK_MESSAGE(out.ok, out.why);
        s = s2;
      }
    }
  }

  TEST_CASE("audit notices a stale cache") {
    Planned p = planned("soccer-toy");
    const State s2 = apply_event(p.theory, p.theory.initial(), Event({{p.theory.fluent_id("distBall"), 20.0}}));
    CHECK_FALSE(audit(p.theory, s2, p.space).ok());
    CHECK_THROWS_AS(verify_consistency(p.theory, s2, p.space, 1000), InternalError);
    CHECK_NOTHROW(verify_consistency(p.theory, p.theory.initial(), p.space, 1000));
  }
}
