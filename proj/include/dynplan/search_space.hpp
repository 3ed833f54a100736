#pragma once

// The persistent structures of one planning episode: the annotated search
// tree, the open list and the fluent index.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "dynplan/counters.hpp"
#include "dynplan/domain.hpp"

namespace dynplan {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class AnnotationKind : char { precondition = 'p', cost = 'c', heuristic = 'h' };

/// One generated action sequence. P/C/H are regressed to the root state and
/// never change once built; p/c/h are their values in the current initial
/// state.
struct TreeNode {
  NodeId parent = kNoNode;
  ActionId action = 0;
  Sequence seq;
  Formula P;  // null at the root
  NumExpr C;  // null until the action was found possible
  NumExpr H;
  bool p = false;
  double c = 0.0;
  double h = 0.0;
  /// Children generated and tracked (in open or expanded themselves).
  bool expanded = false;
  std::vector<NodeId> children;  // indexed by ActionId once expanded

  bool has_cost_annotation() const { return !C.is_null(); }
};

class SearchTree {
 public:
  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  NodeId root() const { return 0; }

  NodeId create_root(const DomainTheory& theory);
  NodeId add_child(const DomainTheory& theory, NodeId parent, ActionId a);
  NodeId child(NodeId parent, ActionId a) const;
  std::optional<NodeId> find(std::span<const ActionId> seq) const;

  TreeNode& node(NodeId id) { return nodes_.at(id); }
  const TreeNode& node(NodeId id) const { return nodes_.at(id); }

  /// Fluent `f` after executing node `id`'s sequence, expressed over the root
  /// state. Built incrementally from the parent's entries and memoised.
  Expr regressed_fluent(const DomainTheory& theory, NodeId id, FluentId f, WorkCounters& counters);

  /// `e` evaluated after node `id`'s sequence, expressed over the root state.
  Expr regress_at(const DomainTheory& theory, NodeId id, const Expr& e, WorkCounters& counters);

  /// All branch nodes from the root are live: p holds and every ancestor is
  /// expanded.
  bool on_live_branch(NodeId id) const;

  /// Compares node structure and cached values, ignoring memo tables.
  friend bool operator==(const SearchTree& a, const SearchTree& b);

 private:
  std::vector<TreeNode> nodes_;
  std::vector<std::vector<std::pair<FluentId, Expr>>> memo_;
};

struct OpenEntry {
  double g = 0.0;
  double h = 0.0;
  NodeId node = kNoNode;
  Sequence seq;

  double f() const { return g + h; }
  friend bool operator==(const OpenEntry&, const OpenEntry&) = default;
};

/// Open list ordered by (g + h, sequence). g + h is compared on a 1e-9 grid;
/// ties go to the lexicographically smaller action sequence. Entries are also
/// indexed by sequence so that prefix queries visit only the matching range.
class OpenList {
 public:
  OpenList() = default;
  OpenList(const OpenList& other);
  OpenList& operator=(const OpenList& other);
  OpenList(OpenList&&) noexcept = default;
  OpenList& operator=(OpenList&&) noexcept = default;

  bool empty() const { return by_seq_.empty(); }
  std::size_t size() const { return by_seq_.size(); }

  void push(OpenEntry entry);
  const OpenEntry& front() const;
  OpenEntry pop_front();

  const OpenEntry* find(std::span<const ActionId> seq) const;
  bool contains(std::span<const ActionId> seq) const { return find(seq) != nullptr; }

  /// Removes every entry whose sequence starts with `prefix`.
  std::size_t erase_prefix(std::span<const ActionId> prefix);
  /// Adds `offset` to g of every entry whose sequence starts with `prefix`.
  std::size_t add_offset_prefix(std::span<const ActionId> prefix, double offset);
  bool set_h(std::span<const ActionId> seq, double h);

  /// Entries in priority order.
  std::vector<OpenEntry> ordered() const;
  bool is_sorted() const;

  friend bool operator==(const OpenList& a, const OpenList& b);

 private:
  using Map = std::map<Sequence, OpenEntry>;
  struct Ref {
    std::int64_t key;
    Map::const_iterator it;
  };
  struct RefLess {
    bool operator()(const Ref& a, const Ref& b) const {
      if (a.key != b.key) return a.key < b.key;
      return a.it->first < b.it->first;
    }
  };

  static std::int64_t priority_key(const OpenEntry& e);
  void reinsert(Map::iterator it, double g, double h);
  template <typename Fn>
  std::size_t for_prefix(std::span<const ActionId> prefix, Fn&& fn);
  void rebuild_order();

  Map by_seq_;
  std::set<Ref, RefLess> order_;
};

struct IndexEntry {
  NodeId node = kNoNode;
  AnnotationKind kind = AnnotationKind::precondition;
  friend auto operator<=>(const IndexEntry&, const IndexEntry&) = default;
};

/// Ground fluent -> annotations that mention it.
class FluentIndex {
 public:
  void add(NodeId node, AnnotationKind kind, std::span<const FluentId> mentioned);
  std::span<const IndexEntry> entries(FluentId f) const;
  std::vector<FluentId> keys() const;
  std::size_t entry_count() const;
  bool empty() const { return entry_count() == 0; }

  friend bool operator==(const FluentIndex& a, const FluentIndex& b);

 private:
  std::vector<std::vector<IndexEntry>> by_fluent_;
};

struct SearchSpace {
  SearchTree tree;
  OpenList open;
  FluentIndex index;

  /// Empty tree and the single open entry (0, inf, []).
  static SearchSpace fresh();
};

}  // namespace dynplan
