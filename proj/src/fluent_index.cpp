#include <algorithm>

#include "dynplan/search_space.hpp"

namespace dynplan {

void FluentIndex::add(NodeId node, AnnotationKind kind, std::span<const FluentId> mentioned) {
  for (FluentId f : mentioned) {
    if (f >= by_fluent_.size()) by_fluent_.resize(f + 1);
    by_fluent_[f].push_back({node, kind});
  }
}

std::span<const IndexEntry> FluentIndex::entries(FluentId f) const {
  if (f >= by_fluent_.size()) return {};
  return by_fluent_[f];
}

std::vector<FluentId> FluentIndex::keys() const {
  std::vector<FluentId> out;
  for (FluentId f = 0; f < by_fluent_.size(); ++f) {
    if (!by_fluent_[f].empty()) out.push_back(f);
  }
  return out;
}

std::size_t FluentIndex::entry_count() const {
  std::size_t n = 0;
  for (const auto& v : by_fluent_) n += v.size();
  return n;
}

bool operator==(const FluentIndex& a, const FluentIndex& b) {
  const std::size_t n = std::max(a.by_fluent_.size(), b.by_fluent_.size());
  for (FluentId f = 0; f < n; ++f) {
    std::span<const IndexEntry> x = a.entries(f);
    std::span<const IndexEntry> y = b.entries(f);
    if (x.size() != y.size()) return false;
    std::vector<IndexEntry> sx(x.begin(), x.end());
    std::vector<IndexEntry> sy(y.begin(), y.end());
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    if (sx != sy) return false;
  }
  return true;
}

}  // namespace dynplan
