#pragma once

// Ground expression language shared by formulas and numeric expressions.
//
// Both sorts live in one immutable AST so that regression can rewrite
// numeric sub-terms inside comparisons (and formulas inside conditionals)
// without a second tree type. Nodes are reference counted and freely shared;
// an Expr is a cheap handle.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dynplan {

using FluentId = std::uint32_t;

/// Tolerance used for numeric equality and ordering ties everywhere.
inline constexpr double kEpsilon = 1e-9;

enum class Sort : std::uint8_t { boolean, numeric };

enum class Op : std::uint8_t {
  constant,
  fluent,
  negation,
  conjunction,
  disjunction,
  compare,
  add,
  sub,
  mul,
  min,
  max,
  conditional,  // numeric if-then-else: args = {guard, then, else}
};

enum class Cmp : std::uint8_t { lt, le, eq, ne, ge, gt };

/// Comparison under the global tolerance.
bool compare_values(Cmp cmp, double lhs, double rhs);
Cmp negate(Cmp cmp);
const char* to_string(Cmp cmp);

class Expr;

struct ExprNode {
  Op op = Op::constant;
  Sort sort = Sort::boolean;
  Cmp cmp = Cmp::eq;
  double value = 0.0;
  FluentId fluent = 0;
  std::vector<Expr> args;
  std::size_t hash = 0;
};

class Expr {
 public:
  Expr() = default;

  static Expr truth(bool value);
  static Expr number(double value);
  static Expr fluent(FluentId id, Sort sort);

  // Raw constructors: build exactly the node requested, no folding. The
  // loader and tests use these; regression uses the folding builders below.
  static Expr raw(Op op, Sort sort, std::vector<Expr> args);
  static Expr raw_compare(Cmp cmp, Expr lhs, Expr rhs);

  bool is_null() const { return node_ == nullptr; }
  explicit operator bool() const { return node_ != nullptr; }

  Op op() const { return node_->op; }
  Sort sort() const { return node_->sort; }
  Cmp cmp() const { return node_->cmp; }
  FluentId fluent_id() const { return node_->fluent; }
  double constant_value() const { return node_->value; }
  std::span<const Expr> args() const { return node_->args; }
  const Expr& arg(std::size_t i) const { return node_->args[i]; }
  std::size_t hash() const { return node_ ? node_->hash : 0; }
  const ExprNode* get() const { return node_.get(); }

  bool is_constant() const { return node_ && node_->op == Op::constant; }
  bool is_true() const { return is_constant() && sort() == Sort::boolean && node_->value != 0.0; }
  bool is_false() const { return is_constant() && sort() == Sort::boolean && node_->value == 0.0; }

  /// Structural equality.
  friend bool operator==(const Expr& a, const Expr& b);

  /// Number of distinct nodes reachable from this one.
  std::size_t node_count() const;

 private:
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  static Expr finish(ExprNode node);

  std::shared_ptr<const ExprNode> node_;
};

using Formula = Expr;
using NumExpr = Expr;

// Folding builders. Each applies local simplification rules: constant
// folding, neutral/absorbing elements, double negation, flattening of nested
// conjunctions/disjunctions, duplicate removal, constant-guard pruning.
Expr make_not(Expr f);
Expr make_and(std::vector<Expr> fs);
Expr make_or(std::vector<Expr> fs);
Expr make_compare(Cmp cmp, Expr lhs, Expr rhs);
Expr make_add(Expr a, Expr b);
Expr make_sub(Expr a, Expr b);
Expr make_mul(Expr a, Expr b);
Expr make_min(std::vector<Expr> es);
Expr make_max(std::vector<Expr> es);
Expr make_if(Expr guard, Expr then_expr, Expr else_expr);

/// Rebuilds `e` through the folding builders, using `leaf` to map fluent
/// references. Shared sub-terms are rewritten once.
Expr rewrite(const Expr& e, const std::function<Expr(const Expr& fluent_leaf)>& leaf);

/// Sorted, duplicate-free list of fluents appearing in `e`.
std::vector<FluentId> collect_fluents(const Expr& e);

using FluentNamer = std::function<std::string(FluentId)>;
std::string to_string(const Expr& e, const FluentNamer& namer);

}  // namespace dynplan

template <>
struct std::hash<dynplan::Expr> {
  std::size_t operator()(const dynplan::Expr& e) const noexcept { return e.hash(); }
};
