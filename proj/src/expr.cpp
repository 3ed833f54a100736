#include "dynplan/expr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace dynplan {

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_node(const ExprNode& n) {
  std::size_t h = mix(static_cast<std::size_t>(n.op), static_cast<std::size_t>(n.sort));
  h = mix(h, static_cast<std::size_t>(n.cmp));
  h = mix(h, std::bit_cast<std::uint64_t>(n.value));
  h = mix(h, n.fluent);
  for (const Expr& a : n.args) h = mix(h, a.hash());
  return h;
}

void require_sort(const Expr& e, Sort sort, const char* where) {
  if (e.is_null()) throw std::invalid_argument(std::string(where) + ": null operand");
  if (e.sort() != sort) {
    throw std::invalid_argument(std::string(where) + ": operand has wrong sort");
  }
}

}  // namespace

bool compare_values(Cmp cmp, double lhs, double rhs) {
  switch (cmp) {
    case Cmp::lt: return lhs < rhs - kEpsilon;
    case Cmp::le: return lhs <= rhs + kEpsilon;
    case Cmp::eq: return std::fabs(lhs - rhs) <= kEpsilon;
    case Cmp::ne: return std::fabs(lhs - rhs) > kEpsilon;
    case Cmp::ge: return lhs >= rhs - kEpsilon;
    case Cmp::gt: return lhs > rhs + kEpsilon;
  }
  return false;
}

Cmp negate(Cmp cmp) {
  switch (cmp) {
    case Cmp::lt: return Cmp::ge;
    case Cmp::le: return Cmp::gt;
    case Cmp::eq: return Cmp::ne;
    case Cmp::ne: return Cmp::eq;
    case Cmp::ge: return Cmp::lt;
    case Cmp::gt: return Cmp::le;
  }
  return Cmp::eq;
}

const char* to_string(Cmp cmp) {
  switch (cmp) {
    case Cmp::lt: return "<";
    case Cmp::le: return "<=";
    case Cmp::eq: return "=";
    case Cmp::ne: return "!=";
    case Cmp::ge: return ">=";
    case Cmp::gt: return ">";
  }
  return "?";
}

Expr Expr::finish(ExprNode node) {
  node.hash = hash_node(node);
  return Expr(std::make_shared<const ExprNode>(std::move(node)));
}

Expr Expr::truth(bool value) {
  static const Expr t = [] {
    ExprNode n;
    n.op = Op::constant;
    n.sort = Sort::boolean;
    n.value = 1.0;
    return finish(std::move(n));
  }();
  static const Expr f = [] {
    ExprNode n;
    n.op = Op::constant;
    n.sort = Sort::boolean;
    n.value = 0.0;
    return finish(std::move(n));
  }();
  return value ? t : f;
}

Expr Expr::number(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("numeric constant must be finite");
  ExprNode n;
  n.op = Op::constant;
  n.sort = Sort::numeric;
  n.value = value == 0.0 ? 0.0 : value;  // normalise -0
  return finish(std::move(n));
}

Expr Expr::fluent(FluentId id, Sort sort) {
  ExprNode n;
  n.op = Op::fluent;
  n.sort = sort;
  n.fluent = id;
  return finish(std::move(n));
}

Expr Expr::raw(Op op, Sort sort, std::vector<Expr> args) {
  switch (op) {
    case Op::constant:
    case Op::fluent:
    case Op::compare:
      throw std::invalid_argument("Expr::raw: use the dedicated constructor");
    case Op::negation:
      if (args.size() != 1) throw std::invalid_argument("negation takes one operand");
      [[fallthrough]];
    case Op::conjunction:
    case Op::disjunction:
      if (sort != Sort::boolean) throw std::invalid_argument("connective must be boolean");
      for (const Expr& a : args) require_sort(a, Sort::boolean, "connective");
      break;
    case Op::add:
    case Op::sub:
    case Op::mul:
      if (args.size() != 2) throw std::invalid_argument("arithmetic takes two operands");
      [[fallthrough]];
    case Op::min:
    case Op::max:
      if (sort != Sort::numeric) throw std::invalid_argument("arithmetic must be numeric");
      if (args.empty()) throw std::invalid_argument("min/max need operands");
      for (const Expr& a : args) require_sort(a, Sort::numeric, "arithmetic");
      break;
    case Op::conditional:
      if (sort != Sort::numeric || args.size() != 3) {
        throw std::invalid_argument("conditional is numeric with three operands");
      }
      require_sort(args[0], Sort::boolean, "conditional guard");
      require_sort(args[1], Sort::numeric, "conditional branch");
      require_sort(args[2], Sort::numeric, "conditional branch");
      break;
  }
  ExprNode n;
  n.op = op;
  n.sort = sort;
  n.args = std::move(args);
  return finish(std::move(n));
}

Expr Expr::raw_compare(Cmp cmp, Expr lhs, Expr rhs) {
  require_sort(lhs, Sort::numeric, "comparison");
  require_sort(rhs, Sort::numeric, "comparison");
  ExprNode n;
  n.op = Op::compare;
  n.sort = Sort::boolean;
  n.cmp = cmp;
  n.args = {std::move(lhs), std::move(rhs)};
  return finish(std::move(n));
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  const ExprNode& x = *a.node_;
  const ExprNode& y = *b.node_;
  if (x.hash != y.hash || x.op != y.op || x.sort != y.sort || x.cmp != y.cmp ||
      x.fluent != y.fluent || x.args.size() != y.args.size()) {
    return false;
  }
  if (std::bit_cast<std::uint64_t>(x.value) != std::bit_cast<std::uint64_t>(y.value)) return false;
  for (std::size_t i = 0; i < x.args.size(); ++i) {
    if (!(x.args[i] == y.args[i])) return false;
  }
  return true;
}

std::size_t Expr::node_count() const {
  std::unordered_set<const ExprNode*> seen;
  std::vector<const ExprNode*> stack;
  if (node_) stack.push_back(node_.get());
  while (!stack.empty()) {
    const ExprNode* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    for (const Expr& a : n->args) stack.push_back(a.get());
  }
  return seen.size();
}

// ---------------------------------------------------------------------------
// Folding builders

namespace {

bool contains(const std::vector<Expr>& v, const Expr& e) {
  return std::any_of(v.begin(), v.end(), [&](const Expr& x) { return x == e; });
}

// Shared body of make_and / make_or. `unit` is the neutral constant, the
// opposite constant is absorbing.
Expr make_junction(Op op, std::vector<Expr> fs) {
  const bool unit = op == Op::conjunction;
  std::vector<Expr> out;
  out.reserve(fs.size());
  std::vector<Expr> pending(std::move(fs));
  // Flatten nested junctions of the same kind, preserving operand order.
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const Expr& f = pending[i];
    require_sort(f, Sort::boolean, op == Op::conjunction ? "and" : "or");
    if (f.is_constant()) {
      if (f.is_true() == unit) continue;
      return Expr::truth(!unit);
    }
    if (f.op() == op) {
      for (const Expr& a : f.args()) {
        if (a.is_constant()) {
          if (a.is_true() == unit) continue;
          return Expr::truth(!unit);
        }
        if (!contains(out, a)) out.push_back(a);
      }
      continue;
    }
    if (!contains(out, f)) out.push_back(f);
  }
  // Complementary pair: x and not x.
  for (const Expr& f : out) {
    if (f.op() == Op::negation && contains(out, f.arg(0))) return Expr::truth(!unit);
  }
  if (out.empty()) return Expr::truth(unit);
  if (out.size() == 1) return out.front();
  return Expr::raw(op, Sort::boolean, std::move(out));
}

Expr make_extremum(Op op, std::vector<Expr> es) {
  std::vector<Expr> out;
  bool have_const = false;
  double folded = 0.0;
  auto absorb = [&](const Expr& e) {
    if (e.is_constant()) {
      const double v = e.constant_value();
      if (!have_const) {
        folded = v;
        have_const = true;
      } else {
        folded = op == Op::min ? std::min(folded, v) : std::max(folded, v);
      }
    } else if (!contains(out, e)) {
      out.push_back(e);
    }
  };
  for (const Expr& e : es) {
    require_sort(e, Sort::numeric, "min/max");
    if (e.op() == op) {
      for (const Expr& a : e.args()) absorb(a);
    } else {
      absorb(e);
    }
  }
  if (have_const) out.push_back(Expr::number(folded));
  if (out.empty()) throw std::invalid_argument("min/max need operands");
  if (out.size() == 1) return out.front();
  return Expr::raw(op, Sort::numeric, std::move(out));
}

bool is_number(const Expr& e, double v) { return e.is_constant() && e.constant_value() == v; }

}  // namespace

Expr make_not(Expr f) {
  require_sort(f, Sort::boolean, "not");
  if (f.is_constant()) return Expr::truth(!f.is_true());
  if (f.op() == Op::negation) return f.arg(0);
  if (f.op() == Op::compare) return make_compare(negate(f.cmp()), f.arg(0), f.arg(1));
  return Expr::raw(Op::negation, Sort::boolean, {std::move(f)});
}

Expr make_and(std::vector<Expr> fs) { return make_junction(Op::conjunction, std::move(fs)); }

Expr make_or(std::vector<Expr> fs) { return make_junction(Op::disjunction, std::move(fs)); }

Expr make_compare(Cmp cmp, Expr lhs, Expr rhs) {
  require_sort(lhs, Sort::numeric, "comparison");
  require_sort(rhs, Sort::numeric, "comparison");
  if (lhs.is_constant() && rhs.is_constant()) {
    return Expr::truth(compare_values(cmp, lhs.constant_value(), rhs.constant_value()));
  }
  if (lhs == rhs) {
    return Expr::truth(cmp == Cmp::eq || cmp == Cmp::le || cmp == Cmp::ge);
  }
  return Expr::raw_compare(cmp, std::move(lhs), std::move(rhs));
}

Expr make_add(Expr a, Expr b) {
  require_sort(a, Sort::numeric, "+");
  require_sort(b, Sort::numeric, "+");
  if (a.is_constant() && b.is_constant()) return Expr::number(a.constant_value() + b.constant_value());
  if (is_number(a, 0.0)) return b;
  if (is_number(b, 0.0)) return a;
  return Expr::raw(Op::add, Sort::numeric, {std::move(a), std::move(b)});
}

Expr make_sub(Expr a, Expr b) {
  require_sort(a, Sort::numeric, "-");
  require_sort(b, Sort::numeric, "-");
  if (a.is_constant() && b.is_constant()) return Expr::number(a.constant_value() - b.constant_value());
  if (is_number(b, 0.0)) return a;
  if (a == b) return Expr::number(0.0);
  return Expr::raw(Op::sub, Sort::numeric, {std::move(a), std::move(b)});
}

Expr make_mul(Expr a, Expr b) {
  require_sort(a, Sort::numeric, "*");
  require_sort(b, Sort::numeric, "*");
  if (a.is_constant() && b.is_constant()) return Expr::number(a.constant_value() * b.constant_value());
  if (is_number(a, 0.0) || is_number(b, 0.0)) return Expr::number(0.0);
  if (is_number(a, 1.0)) return b;
  if (is_number(b, 1.0)) return a;
  return Expr::raw(Op::mul, Sort::numeric, {std::move(a), std::move(b)});
}

Expr make_min(std::vector<Expr> es) { return make_extremum(Op::min, std::move(es)); }

Expr make_max(std::vector<Expr> es) { return make_extremum(Op::max, std::move(es)); }

Expr make_if(Expr guard, Expr then_expr, Expr else_expr) {
  require_sort(guard, Sort::boolean, "if");
  require_sort(then_expr, Sort::numeric, "if");
  require_sort(else_expr, Sort::numeric, "if");
  if (guard.is_constant()) return guard.is_true() ? then_expr : else_expr;
  if (then_expr == else_expr) return then_expr;
  if (guard.op() == Op::negation) {
    return make_if(guard.arg(0), std::move(else_expr), std::move(then_expr));
  }
  if (then_expr.op() == Op::conditional && then_expr.arg(0) == guard) {
    Expr inner = then_expr.arg(1);
    return make_if(std::move(guard), std::move(inner), std::move(else_expr));
  }
  if (else_expr.op() == Op::conditional && else_expr.arg(0) == guard) {
    Expr inner = else_expr.arg(2);
    return make_if(std::move(guard), std::move(then_expr), std::move(inner));
  }
  return Expr::raw(Op::conditional, Sort::numeric,
                   {std::move(guard), std::move(then_expr), std::move(else_expr)});
}

// ---------------------------------------------------------------------------

namespace {

struct Rewriter {
  const std::function<Expr(const Expr&)>& leaf;
  std::unordered_map<const ExprNode*, Expr> memo;

  Expr operator()(const Expr& e) {
    if (e.op() == Op::constant) return e;
    if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
    Expr out;
    switch (e.op()) {
      case Op::constant: out = e; break;
      case Op::fluent: out = leaf(e); break;
      case Op::negation: out = make_not((*this)(e.arg(0))); break;
      case Op::conjunction:
      case Op::disjunction:
      case Op::min:
      case Op::max: {
        std::vector<Expr> args;
        args.reserve(e.args().size());
        for (const Expr& a : e.args()) args.push_back((*this)(a));
        if (e.op() == Op::conjunction) out = make_and(std::move(args));
        else if (e.op() == Op::disjunction) out = make_or(std::move(args));
        else if (e.op() == Op::min) out = make_min(std::move(args));
        else out = make_max(std::move(args));
        break;
      }
      case Op::compare: out = make_compare(e.cmp(), (*this)(e.arg(0)), (*this)(e.arg(1))); break;
      case Op::add: out = make_add((*this)(e.arg(0)), (*this)(e.arg(1))); break;
      case Op::sub: out = make_sub((*this)(e.arg(0)), (*this)(e.arg(1))); break;
      case Op::mul: out = make_mul((*this)(e.arg(0)), (*this)(e.arg(1))); break;
      case Op::conditional: {
        Expr guard = (*this)(e.arg(0));
        if (guard.is_constant()) {
          out = (*this)(guard.is_true() ? e.arg(1) : e.arg(2));
        } else {
          out = make_if(std::move(guard), (*this)(e.arg(1)), (*this)(e.arg(2)));
        }
        break;
      }
    }
    memo.emplace(e.get(), out);
    return out;
  }
};

void print(std::ostream& os, const Expr& e, const FluentNamer& namer) {
  auto list = [&](const char* head) {
    os << '(' << head;
    for (const Expr& a : e.args()) {
      os << ' ';
      print(os, a, namer);
    }
    os << ')';
  };
  switch (e.op()) {
    case Op::constant:
      if (e.sort() == Sort::boolean) os << (e.is_true() ? "true" : "false");
      else os << e.constant_value();
      break;
    case Op::fluent: os << (namer ? namer(e.fluent_id()) : "f" + std::to_string(e.fluent_id())); break;
    case Op::negation: list("not"); break;
    case Op::conjunction: list("and"); break;
    case Op::disjunction: list("or"); break;
    case Op::compare: list(to_string(e.cmp())); break;
    case Op::add: list("+"); break;
    case Op::sub: list("-"); break;
    case Op::mul: list("*"); break;
    case Op::min: list("min"); break;
    case Op::max: list("max"); break;
    case Op::conditional: list("if"); break;
  }
}

}  // namespace

Expr rewrite(const Expr& e, const std::function<Expr(const Expr&)>& leaf) {
  Rewriter r{leaf, {}};
  return r(e);
}

std::vector<FluentId> collect_fluents(const Expr& e) {
  std::vector<FluentId> out;
  std::unordered_set<const ExprNode*> seen;
  std::vector<const ExprNode*> stack;
  if (!e.is_null()) stack.push_back(e.get());
  while (!stack.empty()) {
    const ExprNode* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->op == Op::fluent) out.push_back(n->fluent);
    for (const Expr& a : n->args) stack.push_back(a.get());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string to_string(const Expr& e, const FluentNamer& namer) {
  if (e.is_null()) return "<null>";
  std::ostringstream os;
  print(os, e, namer);
  return os.str();
}

}  // namespace dynplan
