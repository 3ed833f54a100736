#include <algorithm>
#include <bit>
#include <cmath>

#include "dynplan/search_space.hpp"

namespace dynplan {

namespace {

bool has_prefix(const Sequence& seq, std::span<const ActionId> prefix) {
  return seq.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), seq.begin());
}

}  // namespace

OpenList::OpenList(const OpenList& other) : by_seq_(other.by_seq_) { rebuild_order(); }

OpenList& OpenList::operator=(const OpenList& other) {
  if (this != &other) {
    by_seq_ = other.by_seq_;
    rebuild_order();
  }
  return *this;
}

void OpenList::rebuild_order() {
  order_.clear();
  for (auto it = by_seq_.cbegin(); it != by_seq_.cend(); ++it) order_.insert({priority_key(it->second), it});
}

std::int64_t OpenList::priority_key(const OpenEntry& e) {
  const double f = e.f();
  if (std::isnan(f)) throw InternalError("open entry with NaN priority");
  constexpr double limit = 9.0e9;
  if (f >= limit) return std::numeric_limits<std::int64_t>::max();
  if (f <= -limit) return std::numeric_limits<std::int64_t>::min();
  return std::llround(f / kEpsilon);
}

void OpenList::push(OpenEntry entry) {
  Sequence key = entry.seq;
  auto [it, inserted] = by_seq_.emplace(std::move(key), std::move(entry));
  if (!inserted) throw InternalError("sequence already in the open list");
  order_.insert({priority_key(it->second), it});
}

const OpenEntry& OpenList::front() const {
  if (order_.empty()) throw InternalError("front() on an empty open list");
  return order_.begin()->it->second;
}

OpenEntry OpenList::pop_front() {
  if (order_.empty()) throw InternalError("pop_front() on an empty open list");
  auto ref = order_.begin();
  auto it = ref->it;
  OpenEntry out = it->second;
  order_.erase(ref);
  by_seq_.erase(it);
  return out;
}

const OpenEntry* OpenList::find(std::span<const ActionId> seq) const {
  auto it = by_seq_.find(Sequence(seq.begin(), seq.end()));
  return it == by_seq_.end() ? nullptr : &it->second;
}

template <typename Fn>
std::size_t OpenList::for_prefix(std::span<const ActionId> prefix, Fn&& fn) {
  std::size_t n = 0;
  auto it = by_seq_.lower_bound(Sequence(prefix.begin(), prefix.end()));
  while (it != by_seq_.end() && has_prefix(it->first, prefix)) {
    auto next = std::next(it);
    fn(it);
    ++n;
    it = next;
  }
  return n;
}

std::size_t OpenList::erase_prefix(std::span<const ActionId> prefix) {
  return for_prefix(prefix, [&](Map::iterator it) {
    order_.erase({priority_key(it->second), it});
    by_seq_.erase(it);
  });
}

void OpenList::reinsert(Map::iterator it, double g, double h) {
  order_.erase({priority_key(it->second), it});
  it->second.g = g;
  it->second.h = h;
  order_.insert({priority_key(it->second), it});
}

std::size_t OpenList::add_offset_prefix(std::span<const ActionId> prefix, double offset) {
  return for_prefix(prefix, [&](Map::iterator it) { reinsert(it, it->second.g + offset, it->second.h); });
}

bool OpenList::set_h(std::span<const ActionId> seq, double h) {
  auto it = by_seq_.find(Sequence(seq.begin(), seq.end()));
  if (it == by_seq_.end()) return false;
  reinsert(it, it->second.g, h);
  return true;
}

std::vector<OpenEntry> OpenList::ordered() const {
  std::vector<OpenEntry> out;
  out.reserve(order_.size());
  for (const Ref& r : order_) out.push_back(r.it->second);
  return out;
}

bool OpenList::is_sorted() const {
  if (order_.size() != by_seq_.size()) return false;
  std::int64_t prev = std::numeric_limits<std::int64_t>::min();
  for (const Ref& r : order_) {
    const std::int64_t k = priority_key(r.it->second);
    if (k != r.key || k < prev) return false;
    prev = k;
  }
  return true;
}

bool operator==(const OpenList& a, const OpenList& b) {
  if (a.by_seq_.size() != b.by_seq_.size()) return false;
  auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
  for (auto x = a.order_.begin(), y = b.order_.begin(); x != a.order_.end(); ++x, ++y) {
    const OpenEntry& ex = x->it->second;
    const OpenEntry& ey = y->it->second;
    if (ex.seq != ey.seq || ex.node != ey.node || bits(ex.g) != bits(ey.g) || bits(ex.h) != bits(ey.h)) {
      return false;
    }
  }
  return true;
}

}  // namespace dynplan
