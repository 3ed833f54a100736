#pragma once

// Symbolic regression through actions. Everything here is syntactic: no
// function reads a State.

#include <span>
#include <vector>

#include "dynplan/domain.hpp"
#include "dynplan/expr.hpp"

namespace dynplan {

/// Rewrites `f` so that it holds (or evaluates) before `a` exactly as `f`
/// does after `a`, whenever `a` is applicable. Boolean atoms F become
/// (c and v) or (not c and F); numeric references become if(c, v, F).
Expr regress_step(const DomainTheory& theory, const Expr& f, ActionId a);

/// Regression through a whole sequence, last action first, then simplified.
Expr regress_seq(const DomainTheory& theory, const Expr& f, std::span<const ActionId> seq);

/// Equivalence-preserving syntactic simplification (see make_* builders).
Expr simplify(const Expr& f);

/// Fluents syntactically present in `f`.
std::vector<FluentId> mentioned_fluents(const Expr& f);

struct RegressedFormula {
  Expr formula;
  Sequence over;
  std::vector<FluentId> mentioned;
};

RegressedFormula regress(const DomainTheory& theory, const Expr& f, std::span<const ActionId> seq);

}  // namespace dynplan
