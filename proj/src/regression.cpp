#include "dynplan/regression.hpp"

namespace dynplan {

Expr regress_step(const DomainTheory& theory, const Expr& f, ActionId a) {
  return rewrite(f, [&](const Expr& leaf) {
    const Expr& t = theory.effect_template(a, leaf.fluent_id());
    return t.is_null() ? leaf : t;
  });
}

Expr regress_seq(const DomainTheory& theory, const Expr& f, std::span<const ActionId> seq) {
  Expr cur = f;
  for (auto it = seq.rbegin(); it != seq.rend(); ++it) cur = regress_step(theory, cur, *it);
  return simplify(cur);
}

Expr simplify(const Expr& f) {
  return rewrite(f, [](const Expr& leaf) { return leaf; });
}

std::vector<FluentId> mentioned_fluents(const Expr& f) { return collect_fluents(f); }

RegressedFormula regress(const DomainTheory& theory, const Expr& f, std::span<const ActionId> seq) {
  RegressedFormula out;
  out.formula = regress_seq(theory, f, seq);
  out.over.assign(seq.begin(), seq.end());
  out.mentioned = mentioned_fluents(out.formula);
  return out;
}

}  // namespace dynplan
