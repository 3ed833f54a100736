#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>

namespace oracle {

using dynplan::Action;
using dynplan::ActionId;
using dynplan::Cmp;
using dynplan::DomainTheory;
using dynplan::Expr;
using dynplan::FluentId;
using dynplan::Op;
using dynplan::Sort;

namespace {

constexpr double kTol = 1e-9;

bool cmp(Cmp c, double a, double b) {
  switch (c) {
    case Cmp::lt: return a < b - kTol;
    case Cmp::le: return !(a > b + kTol);
    case Cmp::eq: return !(a > b + kTol) && !(a < b - kTol);
    case Cmp::ne: return a > b + kTol || a < b - kTol;
    case Cmp::ge: return !(a < b - kTol);
    case Cmp::gt: return a > b + kTol;
  }
  throw std::logic_error("bad comparison");
}

}  // namespace

double value(const Expr& e, std::span<const double> s) {
  auto a = e.args();
  switch (e.op()) {
    case Op::constant: return e.constant_value();
    case Op::fluent: return s[e.fluent_id()];
    case Op::negation: return value(a[0], s) != 0.0 ? 0.0 : 1.0;
    case Op::conjunction:
      for (const Expr& x : a)
        if (value(x, s) == 0.0) return 0.0;
      return 1.0;
    case Op::disjunction:
      for (const Expr& x : a)
        if (value(x, s) != 0.0) return 1.0;
      return 0.0;
    case Op::compare: return cmp(e.cmp(), value(a[0], s), value(a[1], s)) ? 1.0 : 0.0;
    case Op::add: return value(a[0], s) + value(a[1], s);
    case Op::sub: return value(a[0], s) - value(a[1], s);
    case Op::mul: return value(a[0], s) * value(a[1], s);
    case Op::min: {
      double m = std::numeric_limits<double>::infinity();
      for (const Expr& x : a) m = std::min(m, value(x, s));
      return m;
    }
    case Op::max: {
      double m = -std::numeric_limits<double>::infinity();
      for (const Expr& x : a) m = std::max(m, value(x, s));
      return m;
    }
    case Op::conditional: return value(a[0], s) != 0.0 ? value(a[1], s) : value(a[2], s);
  }
  throw std::logic_error("bad op");
}

bool holds(const Expr& f, std::span<const double> s) { return value(f, s) != 0.0; }

bool applicable(const DomainTheory& t, std::span<const double> s, ActionId a) {
  return holds(t.action(a).precondition, s);
}

Values apply(const DomainTheory& t, std::span<const double> s, ActionId a) {
  Values out(s.begin(), s.end());
  for (const auto& eff : t.action(a).effects) {
    if (holds(eff.condition, s)) out[eff.target] = value(eff.value, s);
  }
  return out;
}

double cost(const DomainTheory& t, std::span<const double> s, ActionId a) {
  return value(t.action(a).cost, s);
}

std::optional<double> sequence_cost(const DomainTheory& t, std::span<const double> s,
                                    std::span<const ActionId> seq) {
  Values cur(s.begin(), s.end());
  double total = 0.0;
  for (ActionId a : seq) {
    if (!applicable(t, cur, a)) return std::nullopt;
    total += cost(t, cur, a);
    cur = apply(t, cur, a);
  }
  return total;
}

namespace {

struct Dfs {
  const DomainTheory& t;
  std::size_t max_depth;
  FluentId reached;
  std::optional<Optimum> best;
  dynplan::Sequence path;

  void run(const Values& s, double g) {
    if (best && g > best->cost + kTol) return;
    if (s[reached] != 0.0) {
      // Visiting in lexicographic order, so only strictly cheaper replaces.
      if (!best || g < best->cost - kTol) best = Optimum{g, path};
      return;
    }
    if (path.size() == max_depth) return;
    for (ActionId a = 0; a < t.action_count(); ++a) {
      if (!applicable(t, s, a)) continue;
      path.push_back(a);
      run(apply(t, s, a), g + cost(t, s, a));
      path.pop_back();
    }
  }
};

}  // namespace

std::optional<Optimum> brute_force(const DomainTheory& t, std::span<const double> s,
                                   std::size_t max_depth) {
  Dfs dfs{t, max_depth, t.goal_reached_fluent(), std::nullopt, {}};
  dfs.run(Values(s.begin(), s.end()), 0.0);
  return dfs.best;
}

std::optional<double> uniform_cost(const DomainTheory& t, std::span<const double> s) {
  using Item = std::pair<double, Values>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
  std::map<Values, double> best;
  Values start(s.begin(), s.end());
  best[start] = 0.0;
  frontier.emplace(0.0, std::move(start));
  const FluentId reached = t.goal_reached_fluent();
  while (!frontier.empty()) {
    auto [g, cur] = frontier.top();
    frontier.pop();
    if (g > best[cur]) continue;
    if (cur[reached] != 0.0) return g;
    for (ActionId a = 0; a < t.action_count(); ++a) {
      if (!applicable(t, cur, a)) continue;
      Values next = apply(t, cur, a);
      const double g2 = g + cost(t, cur, a);
      auto it = best.find(next);
      if (it != best.end() && it->second <= g2) continue;
      best[next] = g2;
      frontier.emplace(g2, std::move(next));
    }
  }
  return std::nullopt;
}

// --- Random instances ---------------------------------------------------------

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(std::mt19937_64& rng) { return pick(rng, 2) == 1; }

double half_steps(std::mt19937_64& rng, int lo, int hi) {
  return 0.5 * static_cast<double>(std::uniform_int_distribution<int>(lo, hi)(rng));
}

struct Builder {
  std::mt19937_64 rng;
  std::vector<FluentId> bools;
  std::vector<FluentId> nums;
  FluentId budget = 0;

  Expr b(FluentId f) { return Expr::fluent(f, Sort::boolean); }
  Expr x(FluentId f) { return Expr::fluent(f, Sort::numeric); }

  Expr literal() {
    if (nums.empty() || coin(rng)) {
      Expr atom = b(bools[pick(rng, bools.size())]);
      return coin(rng) ? atom : Expr::raw(Op::negation, Sort::boolean, {atom});
    }
    static constexpr Cmp kCmps[] = {Cmp::lt, Cmp::le, Cmp::ge, Cmp::gt};
    return Expr::raw_compare(kCmps[pick(rng, 4)], x(nums[pick(rng, nums.size())]),
                             Expr::number(half_steps(rng, 1, 7)));
  }

  Expr conjunction(std::vector<Expr> parts) {
    if (parts.size() == 1) return parts[0];
    return Expr::raw(Op::conjunction, Sort::boolean, std::move(parts));
  }

  Expr numeric_value(FluentId target) {
    switch (pick(rng, 4)) {
      case 0: return Expr::number(half_steps(rng, 0, 8));
      case 1: return Expr::raw(Op::add, Sort::numeric, {x(target), Expr::number(half_steps(rng, 1, 4))});
      case 2:
        return Expr::raw(Op::max, Sort::numeric,
                         {Expr::number(0.0),
                          Expr::raw(Op::sub, Sort::numeric, {x(target), Expr::number(half_steps(rng, 1, 4))})});
      default: {
        FluentId other = nums[pick(rng, nums.size())];
        return Expr::raw(Op::add, Sort::numeric, {x(target), x(other)});
      }
    }
  }
};

}  // namespace

dynplan::DomainTheory random_domain(std::uint64_t seed) {
  Builder g{std::mt19937_64(seed), {}, {}, 0};
  auto& rng = g.rng;
  dynplan::DomainBuilder db("random-" + std::to_string(seed));

  const std::size_t nb = 1 + pick(rng, 3);
  const std::size_t nn = std::min<std::size_t>(pick(rng, 3), 4 - nb);
  for (std::size_t i = 0; i < nb; ++i) {
    g.bools.push_back(db.add_fluent({"b" + std::to_string(i), {}, Sort::boolean, false},
                                    coin(rng) ? 1.0 : 0.0));
  }
  for (std::size_t i = 0; i < nn; ++i) {
    g.nums.push_back(db.add_fluent({"x" + std::to_string(i), {}, Sort::numeric, false}, half_steps(rng, 0, 8)));
  }
  g.budget = db.add_fluent({"budget", {}, Sort::numeric, false}, 5.0);
  if (coin(rng)) db.add_fluent({"junk", {}, Sort::numeric, false}, half_steps(rng, 0, 8));

  const std::size_t na = 2 + pick(rng, 3);
  double min_base = std::numeric_limits<double>::infinity();
  static constexpr double kBases[] = {1.0, 1.5, 2.0, 3.0};
  for (std::size_t i = 0; i < na; ++i) {
    Action a;
    a.name = "a" + std::to_string(i);
    std::vector<Expr> pre{Expr::raw_compare(Cmp::ge, g.x(g.budget), Expr::number(1.0))};
    for (std::size_t k = pick(rng, 3); k > 0; --k) pre.push_back(g.literal());
    a.precondition = g.conjunction(std::move(pre));

    a.effects.push_back({g.budget, Expr::truth(true),
                         Expr::raw(Op::sub, Sort::numeric, {g.x(g.budget), Expr::number(1.0)})});
    std::vector<FluentId> targets(g.bools);
    targets.insert(targets.end(), g.nums.begin(), g.nums.end());
    std::shuffle(targets.begin(), targets.end(), rng);
    const std::size_t ne = std::min<std::size_t>(targets.size(), 1 + pick(rng, 2));
    for (std::size_t k = 0; k < ne; ++k) {
      const FluentId target = targets[k];
      const bool boolean = std::find(g.bools.begin(), g.bools.end(), target) != g.bools.end();
      auto val = [&]() -> Expr {
        if (!boolean) return g.numeric_value(target);
        switch (pick(rng, 3)) {
          case 0: return Expr::truth(true);
          case 1: return Expr::truth(false);
          default: return g.literal();
        }
      };
      switch (pick(rng, 3)) {
        case 0: a.effects.push_back({target, Expr::truth(true), val()}); break;
        case 1: a.effects.push_back({target, g.literal(), val()}); break;
        default: {
          Expr c = g.literal();
          a.effects.push_back({target, c, val()});
          a.effects.push_back({target, Expr::raw(Op::negation, Sort::boolean, {c}), val()});
        }
      }
    }

    const double base = kBases[pick(rng, 4)];
    min_base = std::min(min_base, base);
    if (!g.nums.empty() && coin(rng)) {
      const double coef = coin(rng) ? 0.5 : 1.0;
      a.cost = Expr::raw(Op::add, Sort::numeric,
                         {Expr::number(base), Expr::raw(Op::mul, Sort::numeric,
                                                        {Expr::number(coef), g.x(g.nums[pick(rng, g.nums.size())])})});
    } else {
      a.cost = Expr::number(base);
    }
    db.add_action(std::move(a));
  }

  std::vector<Expr> goal;
  for (std::size_t k = 1 + pick(rng, 2); k > 0; --k) goal.push_back(g.literal());
  const Expr user_goal = g.conjunction(std::move(goal));
  db.set_goal(user_goal);

  const double m = 0.5 * static_cast<double>(pick(rng, static_cast<std::size_t>(2 * min_base) + 1));
  Expr estimate = Expr::number(m);
  if (!g.nums.empty() && coin(rng)) {
    estimate = Expr::raw(Op::min, Sort::numeric, {estimate, g.x(g.nums[pick(rng, g.nums.size())])});
  }
  db.set_heuristic(Expr::raw(Op::conditional, Sort::numeric, {user_goal, Expr::number(0.0), estimate}));
  db.set_finish_cost(Expr::number(coin(rng) ? 0.5 : 1.0));
  return std::move(db).build();
}

double random_value(const DomainTheory& t, FluentId f, std::mt19937_64& rng) {
  const auto& decl = t.fluent(f);
  if (decl.sort == Sort::boolean) return coin(rng) ? 1.0 : 0.0;
  if (decl.name == "budget") return static_cast<double>(pick(rng, 6));
  return half_steps(rng, decl.positive ? 1 : 0, 16);
}

dynplan::Event random_event(const DomainTheory& t, std::mt19937_64& rng, std::size_t max_changes) {
  std::vector<FluentId> user;
  for (FluentId f = 0; f < t.fluent_count(); ++f)
    if (f != t.goal_reached_fluent()) user.push_back(f);
  std::shuffle(user.begin(), user.end(), rng);
  const std::size_t n = std::min(user.size(), 1 + pick(rng, max_changes));
  std::vector<std::pair<FluentId, double>> changes;
  for (std::size_t i = 0; i < n; ++i) changes.emplace_back(user[i], random_value(t, user[i], rng));
  return dynplan::Event(std::move(changes));
}

dynplan::State random_state(const DomainTheory& t, std::mt19937_64& rng) {
  std::vector<double> v(t.fluent_count(), 0.0);
  for (FluentId f = 0; f < t.fluent_count(); ++f)
    if (f != t.goal_reached_fluent()) v[f] = random_value(t, f, rng);
  return dynplan::State(std::move(v));
}

namespace {

std::vector<FluentId> user_fluents(const DomainTheory& t, Sort sort) {
  std::vector<FluentId> out;
  for (FluentId f = 0; f < t.fluent_count(); ++f)
    if (f != t.goal_reached_fluent() && t.fluent(f).sort == sort) out.push_back(f);
  return out;
}

}  // namespace

Expr random_numexpr(const DomainTheory& t, std::mt19937_64& rng, int depth) {
  const auto nums = user_fluents(t, Sort::numeric);
  if (depth <= 0 || pick(rng, 4) == 0) {
    if (nums.empty() || coin(rng)) return Expr::number(half_steps(rng, 0, 10));
    return Expr::fluent(nums[pick(rng, nums.size())], Sort::numeric);
  }
  switch (pick(rng, 6)) {
    case 0: return Expr::raw(Op::add, Sort::numeric, {random_numexpr(t, rng, depth - 1), random_numexpr(t, rng, depth - 1)});
    case 1: return Expr::raw(Op::sub, Sort::numeric, {random_numexpr(t, rng, depth - 1), random_numexpr(t, rng, depth - 1)});
    case 2: return Expr::raw(Op::mul, Sort::numeric, {random_numexpr(t, rng, depth - 1), random_numexpr(t, rng, depth - 1)});
    case 3: return Expr::raw(Op::min, Sort::numeric, {random_numexpr(t, rng, depth - 1), random_numexpr(t, rng, depth - 1)});
    case 4: return Expr::raw(Op::max, Sort::numeric, {random_numexpr(t, rng, depth - 1), random_numexpr(t, rng, depth - 1)});
    default:
      return Expr::raw(Op::conditional, Sort::numeric,
                       {random_formula(t, rng, depth - 1), random_numexpr(t, rng, depth - 1),
                        random_numexpr(t, rng, depth - 1)});
  }
}

Expr random_formula(const DomainTheory& t, std::mt19937_64& rng, int depth) {
  const auto bools = user_fluents(t, Sort::boolean);
  if (depth <= 0 || pick(rng, 4) == 0) {
    if (!bools.empty() && coin(rng)) return Expr::fluent(bools[pick(rng, bools.size())], Sort::boolean);
    static constexpr Cmp kCmps[] = {Cmp::lt, Cmp::le, Cmp::eq, Cmp::ne, Cmp::ge, Cmp::gt};
    return Expr::raw_compare(kCmps[pick(rng, 6)], random_numexpr(t, rng, 1), random_numexpr(t, rng, 1));
  }
  switch (pick(rng, 3)) {
    case 0: return Expr::raw(Op::negation, Sort::boolean, {random_formula(t, rng, depth - 1)});
    case 1:
      return Expr::raw(Op::conjunction, Sort::boolean,
                       {random_formula(t, rng, depth - 1), random_formula(t, rng, depth - 1)});
    default:
      return Expr::raw(Op::disjunction, Sort::boolean,
                       {random_formula(t, rng, depth - 1), random_formula(t, rng, depth - 1)});
  }
}

}  // namespace oracle
