#include <bit>

#include "dynplan/search_space.hpp"

namespace dynplan {

NodeId SearchTree::create_root(const DomainTheory& theory) {
  if (!nodes_.empty()) throw InternalError("search tree already has a root");
  TreeNode root;
  root.p = true;
  root.c = 0.0;
  root.H = theory.heuristic();
  nodes_.push_back(std::move(root));
  memo_.emplace_back();
  return 0;
}

NodeId SearchTree::add_child(const DomainTheory& theory, NodeId parent, ActionId a) {
  TreeNode& par = nodes_.at(parent);
  if (par.children.empty()) par.children.assign(theory.action_count(), kNoNode);
  if (par.children.at(a) != kNoNode) throw InternalError("child already generated");
  const auto id = static_cast<NodeId>(nodes_.size());
  TreeNode child;
  child.parent = parent;
  child.action = a;
  child.seq = par.seq;
  child.seq.push_back(a);
  nodes_[parent].children[a] = id;
  nodes_.push_back(std::move(child));
  memo_.emplace_back();
  return id;
}

NodeId SearchTree::child(NodeId parent, ActionId a) const {
  const TreeNode& par = nodes_.at(parent);
  if (par.children.empty()) return kNoNode;
  return par.children.at(a);
}

std::optional<NodeId> SearchTree::find(std::span<const ActionId> seq) const {
  if (nodes_.empty()) return std::nullopt;
  NodeId cur = root();
  for (ActionId a : seq) {
    const TreeNode& n = nodes_[cur];
    if (n.children.empty() || a >= n.children.size() || n.children[a] == kNoNode) return std::nullopt;
    cur = n.children[a];
  }
  return cur;
}

Expr SearchTree::regressed_fluent(const DomainTheory& theory, NodeId id, FluentId f,
                                  WorkCounters& counters) {
  for (const auto& [key, e] : memo_[id]) {
    if (key == f) return e;
  }
  Expr out;
  const TreeNode& n = nodes_[id];
  if (n.parent == kNoNode) {
    out = Expr::fluent(f, theory.fluent(f).sort);
  } else {
    const Expr& t = theory.effect_template(n.action, f);
    const NodeId parent = n.parent;
    if (t.is_null()) {
      out = regressed_fluent(theory, parent, f, counters);
    } else {
      ++counters.regressions;
      out = rewrite(t, [&](const Expr& leaf) {
        return regressed_fluent(theory, parent, leaf.fluent_id(), counters);
      });
    }
  }
  memo_[id].emplace_back(f, out);
  return out;
}

Expr SearchTree::regress_at(const DomainTheory& theory, NodeId id, const Expr& e,
                            WorkCounters& counters) {
  ++counters.regressions;
  return rewrite(e, [&](const Expr& leaf) {
    return regressed_fluent(theory, id, leaf.fluent_id(), counters);
  });
}

bool SearchTree::on_live_branch(NodeId id) const {
  NodeId cur = id;
  while (cur != kNoNode) {
    const TreeNode& n = nodes_.at(cur);
    if (!n.p) return false;
    if (n.parent != kNoNode && !nodes_[n.parent].expanded) return false;
    cur = n.parent;
  }
  return true;
}

bool operator==(const SearchTree& a, const SearchTree& b) {
  if (a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const TreeNode& x = a.nodes_[i];
    const TreeNode& y = b.nodes_[i];
    if (x.parent != y.parent || x.action != y.action || x.seq != y.seq || x.p != y.p ||
        x.expanded != y.expanded || x.children != y.children) {
      return false;
    }
    if (!(x.P == y.P) || !(x.C == y.C) || !(x.H == y.H)) return false;
    if (std::bit_cast<std::uint64_t>(x.c) != std::bit_cast<std::uint64_t>(y.c) ||
        std::bit_cast<std::uint64_t>(x.h) != std::bit_cast<std::uint64_t>(y.h)) {
      return false;
    }
  }
  return true;
}

SearchSpace SearchSpace::fresh() {
  SearchSpace s;
  s.open.push({0.0, std::numeric_limits<double>::infinity(), kNoNode, {}});
  return s;
}

}  // namespace dynplan
