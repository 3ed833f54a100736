#include <random>

#include "doctest.h"
#include "domains.hpp"
#include "dynplan/domain.hpp"
#include "oracle.hpp"

using namespace dynplan;

namespace {

State with(const DomainTheory& t, std::initializer_list<std::pair<const char*, double>> values) {
  State s = t.initial();
  for (auto [name, v] : values) s.set(t.fluent_id(name), v);
  return s;
}

}  // namespace

TEST_SUITE("domain") {
  TEST_CASE("soccer evaluation") {
    DomainTheory t = bundled("soccer-toy");
    const State s = t.initial();
    const FluentId dist = t.fluent_id("distBall");
    CHECK(evaluate(Expr::truth(true), s));
    CHECK(evaluate(Expr::raw_compare(Cmp::lt, Expr::fluent(dist, Sort::numeric), Expr::number(10)), s));
    CHECK(eval_num(Expr::number(0), s) == 0.0);
    CHECK(eval_num(Expr::fluent(dist, Sort::numeric), s) == 8.0);
  }

  TEST_CASE("soccer progression") {
    DomainTheory t = bundled("soccer-toy");
    const State s = t.initial();
    const State after = progress(t, s, t.action_id("turn"));
    CHECK(after.truth(t.fluent_id("haveBall")));
    const State far = with(t, {{"distBall", 20}});
    CHECK_FALSE(progress(t, far, t.action_id("turn")).truth(t.fluent_id("haveBall")));
    CHECK(eval_num(t.action(t.action_id("approachBall")).cost, far) == doctest::Approx(3.0));
  }

  TEST_CASE("inapplicable action throws") {
    DomainTheory t = bundled("soccer-toy");
    CHECK_THROWS_AS(progress(t, t.initial(), t.finish_action()), InapplicableActionError);
  }

  TEST_CASE("action without effects keeps the state") {
    DomainBuilder db("noop");
    FluentId g = db.add_fluent({"g", {}, Sort::boolean, false});
    db.add_action({"wait", Expr::truth(true), {}, Expr::number(1)});
    db.set_goal(Expr::fluent(g, Sort::boolean));
    DomainTheory t = std::move(db).build();
    CHECK(progress(t, t.initial(), t.action_id("wait")) == t.initial());
  }

  TEST_CASE("finish transformation") {
    DomainTheory t = bundled("soccer-toy");
    const ActionId fin = t.finish_action();
    CHECK(t.action(fin).name == "finish");
    CHECK(t.goal() == Expr::fluent(t.goal_reached_fluent(), Sort::boolean));
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
      State s = oracle::random_state(t, rng);
      if (evaluate(t.user_goal(), s)) {
        CHECK(progress(t, s, fin).truth(t.goal_reached_fluent()));
      } else {
        CHECK_FALSE(evaluate(t.action(fin).precondition, s));
      }
      State reached = s;
      reached.set(t.goal_reached_fluent(), 1.0);
      CHECK(eval_num(t.heuristic(), reached) == 0.0);
    }
  }

  TEST_CASE("evaluation and progression agree with the reference interpreter") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      DomainTheory t = oracle::random_domain(seed);
      std::mt19937_64 rng(seed * 31 + 1);
      for (int i = 0; i < 50; ++i) {
        State s = oracle::random_state(t, rng);
        Expr f = oracle::random_formula(t, rng, 3);
        Expr e = oracle::random_numexpr(t, rng, 3);
        REQUIRE(evaluate(f, s) == oracle::holds(f, s.values()));
        REQUIRE(eval_num(e, s) == oracle::value(e, s.values()));
        for (ActionId a = 0; a < t.action_count(); ++a) {
          const bool ok = oracle::applicable(t, s.values(), a);
          REQUIRE(evaluate(t.action(a).precondition, s) == ok);
          if (!ok) continue;
          const State next = progress(t, s, a);
          const auto expected = oracle::apply(t, s.values(), a);
          REQUIRE(std::vector<double>(next.values().begin(), next.values().end()) == expected);
          // Frame property: fluents without a firing effect keep their value.
          for (FluentId fl = 0; fl < t.fluent_count(); ++fl) {
            bool fires = false;
            for (const auto& eff : t.action(a).effects)
              fires = fires || (eff.target == fl && oracle::holds(eff.condition, s.values()));
            if (!fires) REQUIRE(next[fl] == s[fl]);
          }
        }
      }
    }
  }

  TEST_CASE("events") {
    DomainTheory t = bundled("soccer-toy");
    const FluentId dist = t.fluent_id("distBall");
    CHECK_THROWS(Event(std::vector<std::pair<FluentId, double>>{}));
    const Event e({{dist, 20.0}});
    const State s2 = apply_event(t, t.initial(), e);
    CHECK(s2[dist] == 20.0);
    for (FluentId f = 0; f < t.fluent_count(); ++f)
      if (f != dist) CHECK(s2[f] == t.initial()[f]);
    CHECK(apply_event(t, s2, e) == s2);
    CHECK_THROWS_AS(apply_event(t, t.initial(), Event({{t.fluent_id("haveBall"), 0.5}})), DomainError);
    const Event last({{dist, 1.0}, {dist, 2.0}});
    CHECK(last.assignments().size() == 1);
    CHECK(last.assignments()[0].second == 2.0);
  }

  TEST_CASE("disjoint events commute") {
    std::mt19937_64 rng(99);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      DomainTheory t = oracle::random_domain(seed);
      for (int i = 0; i < 20; ++i) {
        State s = oracle::random_state(t, rng);
        Event e1 = oracle::random_event(t, rng, 2);
        std::vector<std::pair<FluentId, double>> rest;
        for (FluentId f = 0; f < t.fluent_count(); ++f) {
          bool used = f == t.goal_reached_fluent();
          for (auto [g, v] : e1.assignments()) used = used || g == f;
          if (!used) rest.emplace_back(f, oracle::random_value(t, f, rng));
        }
        if (rest.empty()) continue;
        Event e2(rest);
        CHECK(apply_event(t, apply_event(t, s, e1), e2) == apply_event(t, apply_event(t, s, e2), e1));
      }
    }
  }

  TEST_CASE("builder validation") {
    auto base = [](DomainBuilder& db) {
      FluentId g = db.add_fluent({"g", {}, Sort::boolean, false});
      db.set_goal(Expr::fluent(g, Sort::boolean));
      return g;
    };
    SUBCASE("overlapping effects") {
      DomainBuilder db;
      FluentId g = base(db);
      db.add_action({"a", Expr::truth(true),
                     {{g, Expr::truth(true), Expr::truth(true)}, {g, Expr::truth(true), Expr::truth(false)}},
                     Expr::number(1)});
      CHECK_THROWS_AS(std::move(db).build(), DomainError);
    }
    SUBCASE("non-positive cost") {
      DomainBuilder db;
      base(db);
      db.add_action({"a", Expr::truth(true), {}, Expr::number(0)});
      CHECK_THROWS_AS(std::move(db).build(), DomainError);
    }
    SUBCASE("reserved name") {
      DomainBuilder db;
      base(db);
      db.add_fluent({"goalReached", {}, Sort::boolean, false});
      CHECK_THROWS_AS(std::move(db).build(), DomainError);
    }
    SUBCASE("missing goal") {
      DomainBuilder db;
      db.add_fluent({"g", {}, Sort::boolean, false});
      CHECK_THROWS_AS(std::move(db).build(), DomainError);
    }
    SUBCASE("sort mismatch in effect") {
      DomainBuilder db;
      FluentId g = base(db);
      db.add_action({"a", Expr::truth(true), {{g, Expr::truth(true), Expr::number(1)}}, Expr::number(1)});
      CHECK_THROWS_AS(std::move(db).build(), DomainError);
    }
    SUBCASE("unknown fluent") {
      DomainBuilder db;
      base(db);
      db.add_action({"a", Expr::fluent(42, Sort::boolean), {}, Expr::number(1)});
      CHECK_THROWS_AS(std::move(db).build(), DomainError);
    }
  }
}
