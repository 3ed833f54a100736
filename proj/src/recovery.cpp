#include "dynplan/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dynplan/regression.hpp"

namespace dynplan {

namespace {

bool close(double a, double b) {
  if (a == b) return true;
  return std::fabs(a - b) <= kEpsilon * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

}  // namespace

Delta diff_states(const State& s1, const State& s2, const FluentIndex& index, WorkCounters& counters) {
  Delta d;
  for (FluentId f : index.keys()) {
    ++counters.comparisons;
    if (s1.at(f) != s2.at(f)) d.changed_fluents.push_back(f);
  }
  for (FluentId f : d.changed_fluents) {
    std::span<const IndexEntry> e = index.entries(f);
    d.affected.insert(d.affected.end(), e.begin(), e.end());
  }
  std::sort(d.affected.begin(), d.affected.end());
  d.affected.erase(std::unique(d.affected.begin(), d.affected.end()), d.affected.end());
  return d;
}

double get_g_value(const SearchTree& tree, NodeId node) {
  double g = 0.0;
  for (NodeId cur = node; cur != kNoNode; cur = tree.node(cur).parent) g += tree.node(cur).c;
  return g;
}

double get_g_value(const SearchTree& tree, std::span<const ActionId> seq) {
  if (seq.empty() && tree.empty()) return 0.0;
  auto node = tree.find(seq);
  if (!node) throw InternalError("get_g_value: sequence not in the search tree");
  return get_g_value(tree, *node);
}

RecoveryStats recover(const DomainTheory& theory, const State& s1, const State& s2, SearchSpace& space,
                      WorkCounters& counters) {
  const WorkCounters start = counters;
  RecoveryStats stats;
  SearchTree& tree = space.tree;
  OpenList& open = space.open;

  const Delta delta = diff_states(s1, s2, space.index, counters);
  stats.changed_fluents = delta.changed_fluents.size();
  stats.affected = delta.affected.size();

  // Nodes whose c and h were evaluated fresh while handling preconditions.
  std::vector<NodeId> refreshed;

  for (const IndexEntry& e : delta.affected) {
    if (e.kind != AnnotationKind::precondition) continue;
    TreeNode& n = tree.node(e.node);
    ++counters.evaluations;
    const bool now = evaluate(n.P, s2);
    if (now == n.p) continue;
    n.p = now;
    if (!now) {
      ++stats.became_impossible;
      n.expanded = false;
      stats.open_removed += open.erase_prefix(n.seq);
      continue;
    }
    ++stats.became_possible;
    const NodeId id = e.node;
    const NodeId parent = n.parent;
    if (!n.has_cost_annotation()) {
      NumExpr C = tree.regress_at(theory, parent, theory.action(n.action).cost, counters);
      NumExpr H = tree.regress_at(theory, id, theory.heuristic(), counters);
      space.index.add(id, AnnotationKind::cost, mentioned_fluents(C));
      space.index.add(id, AnnotationKind::heuristic, mentioned_fluents(H));
      TreeNode& m = tree.node(id);
      m.C = std::move(C);
      m.H = std::move(H);
    }
    TreeNode& m = tree.node(id);
    counters.evaluations += 2;
    const double c = eval_num(m.C, s2);
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw DomainError("action '" + theory.action(m.action).name + "' has non-positive cost " +
                        std::to_string(c) + " in the changed state");
    }
    m.c = c;
    m.h = eval_num(m.H, s2);
    refreshed.push_back(id);
    if (tree.node(parent).expanded && tree.on_live_branch(parent)) {
      open.push({get_g_value(tree, parent) + m.c, m.h, id, m.seq});
      ++stats.reinserted;
    }
  }
  std::sort(refreshed.begin(), refreshed.end());
  auto is_refreshed = [&](NodeId id) { return std::binary_search(refreshed.begin(), refreshed.end(), id); };

  for (const IndexEntry& e : delta.affected) {
    if (e.kind != AnnotationKind::cost || is_refreshed(e.node)) continue;
    TreeNode& n = tree.node(e.node);
    ++counters.evaluations;
    const double c = eval_num(n.C, s2);
    if (c == n.c) continue;
    if (n.p && !(c > 0.0 && std::isfinite(c))) {
      throw DomainError("action '" + theory.action(n.action).name + "' has non-positive cost " +
                        std::to_string(c) + " in the changed state");
    }
    ++stats.cost_changes;
    const double offset = c - n.c;
    n.c = c;
    open.add_offset_prefix(n.seq, offset);
  }

  for (const IndexEntry& e : delta.affected) {
    if (e.kind != AnnotationKind::heuristic || is_refreshed(e.node)) continue;
    TreeNode& n = tree.node(e.node);
    if (!open.contains(n.seq)) continue;
    ++counters.evaluations;
    n.h = eval_num(n.H, s2);
    open.set_h(n.seq, n.h);
    ++stats.heuristic_updates;
  }

  stats.work = counters - start;
  return stats;
}

FluentIndex rebuild_index(const SearchTree& tree) {
  FluentIndex index;
  for (NodeId id = 0; id < tree.size(); ++id) {
    const TreeNode& n = tree.node(id);
    if (!n.P.is_null()) index.add(id, AnnotationKind::precondition, mentioned_fluents(n.P));
    if (!n.C.is_null()) index.add(id, AnnotationKind::cost, mentioned_fluents(n.C));
    if (!n.H.is_null()) index.add(id, AnnotationKind::heuristic, mentioned_fluents(n.H));
  }
  return index;
}

ConsistencyReport audit(const DomainTheory& theory, const State& state, const SearchSpace& space,
                        std::size_t stride) {
  ConsistencyReport report;
  const SearchTree& tree = space.tree;
  if (stride == 0) stride = 1;
  auto problem = [&](NodeId id, const std::string& what) {
    std::ostringstream os;
    os << "node " << id << " " << theory.format(tree.node(id).seq) << ": " << what;
    report.problems.push_back(os.str());
  };

  for (NodeId id = 0; id < tree.size(); id += static_cast<NodeId>(stride)) {
    const TreeNode& n = tree.node(id);
    ++report.checked;
    if (!n.P.is_null() && evaluate(n.P, state) != n.p) problem(id, "cached p is stale");
    if (!n.C.is_null() && !close(eval_num(n.C, state), n.c)) problem(id, "cached c is stale");
    if (n.p && n.parent != kNoNode && n.C.is_null()) problem(id, "possible node without cost annotation");
    if (n.expanded && tree.on_live_branch(id)) {
      for (NodeId child : n.children) {
        if (child == kNoNode) continue;
        const TreeNode& k = tree.node(child);
        if (k.p && !k.expanded && !space.open.contains(k.seq)) problem(child, "live child lost from open");
      }
    }
  }

  std::size_t i = 0;
  for (const OpenEntry& e : space.open.ordered()) {
    if (i++ % stride != 0) continue;
    if (e.node == kNoNode) {
      if (!e.seq.empty() || !tree.empty()) report.problems.push_back("open entry without node");
      continue;
    }
    const TreeNode& n = tree.node(e.node);
    ++report.checked;
    if (n.seq != e.seq) problem(e.node, "open entry sequence mismatch");
    if (!tree.on_live_branch(e.node)) problem(e.node, "open entry not on a live branch");
    if (n.expanded) problem(e.node, "expanded node still in open");
    if (!close(e.g, get_g_value(tree, e.node))) problem(e.node, "open g differs from branch cost");
    if (e.h != n.h) problem(e.node, "open h differs from cached h");
    if (!n.H.is_null() && !close(eval_num(n.H, state), n.h)) problem(e.node, "cached h is stale");
  }
  if (!space.open.is_sorted()) report.problems.push_back("open list out of order");
  return report;
}

void verify_consistency(const DomainTheory& theory, const State& state, const SearchSpace& space,
                        std::size_t samples) {
  const std::size_t total = space.tree.size() + space.open.size();
  const std::size_t stride = samples == 0 ? 1 : std::max<std::size_t>(1, total / samples);
  ConsistencyReport r = audit(theory, state, space, stride);
  if (!r.ok()) throw InternalError("inconsistent search space: " + r.problems.front());
}

}  // namespace dynplan
