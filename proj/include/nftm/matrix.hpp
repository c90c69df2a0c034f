#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nftm/error.hpp"

namespace nftm {

using Addr = std::uint32_t;
using Count = std::uint64_t;

// (src, dst) position in the 2^32 x 2^32 traffic matrix. Ordering is
// row-major lexicographic and is the canonical order everywhere.
struct Coord {
  Addr src{};
  Addr dst{};

  friend constexpr auto operator<=>(const Coord&, const Coord&) = default;

  constexpr std::uint64_t key() const noexcept {
    return (std::uint64_t{src} << 32) | dst;
  }
};

struct Entry {
  Coord coord;
  Count count{};

  friend constexpr bool operator==(const Entry&, const Entry&) = default;
};

struct Triple {
  Addr src{};
  Addr dst{};
  Count count{};
};

inline Count checked_add(Count a, Count b) {
  Count r;
  if (__builtin_add_overflow(a, b, &r)) throw CountOverflow();
  return r;
}

// Hypersparse source x destination packet-count matrix stored as a
// canonical-ordered coordinate list. Entries are strictly ascending and
// every count is >= 1; a missing entry is the only representation of zero.
class TrafficMatrix {
public:
  TrafficMatrix() = default;

  // Takes ownership of entries that are already canonical. Throws
  // std::invalid_argument if they are not.
  static TrafficMatrix from_sorted(std::vector<Entry> entries) {
    TrafficMatrix m;
    m.entries_ = std::move(entries);
    if (!m.is_canonical())
      throw std::invalid_argument("entries are not canonical (ascending, unique, count >= 1)");
    return m;
  }

  // Skips the canonical check; callers that built the sequence by a merge
  // or filter of canonical input use this.
  static TrafficMatrix from_sorted_unchecked(std::vector<Entry> entries) noexcept {
    TrafficMatrix m;
    m.entries_ = std::move(entries);
    return m;
  }

  std::span<const Entry> entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  Count valid_packets() const {
    Count total = 0;
    for (const auto& e : entries_) total = checked_add(total, e.count);
    return total;
  }

  bool is_canonical() const noexcept {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].count == 0) return false;
      if (i > 0 && !(entries_[i - 1].coord < entries_[i].coord)) return false;
    }
    return true;
  }

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  friend bool operator==(const TrafficMatrix&, const TrafficMatrix&) = default;

private:
  std::vector<Entry> entries_;
};

// Sorts and coalesces (src, dst, count) triples. Duplicates are summed;
// zero counts are dropped.
inline TrafficMatrix matrix_from_triples(std::vector<Triple> triples) {
  std::sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  std::vector<Entry> out;
  out.reserve(triples.size());
  for (const auto& t : triples) {
    if (t.count == 0) continue;
    if (!out.empty() && out.back().coord.src == t.src && out.back().coord.dst == t.dst)
      out.back().count = checked_add(out.back().count, t.count);
    else
      out.push_back({{t.src, t.dst}, t.count});
  }
  return TrafficMatrix::from_sorted_unchecked(std::move(out));
}

inline TrafficMatrix matrix_from_triples(std::initializer_list<Triple> triples) {
  return matrix_from_triples(std::vector<Triple>(triples));
}

// Entrywise sum by linear merge.
inline TrafficMatrix matrix_add(const TrafficMatrix& a, const TrafficMatrix& b) {
  auto x = a.entries();
  auto y = b.entries();
  std::vector<Entry> out;
  out.reserve(x.size() + y.size());
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i].coord < y[j].coord) {
      out.push_back(x[i++]);
    } else if (y[j].coord < x[i].coord) {
      out.push_back(y[j++]);
    } else {
      out.push_back({x[i].coord, checked_add(x[i].count, y[j].count)});
      ++i;
      ++j;
    }
  }
  out.insert(out.end(), x.begin() + static_cast<std::ptrdiff_t>(i), x.end());
  out.insert(out.end(), y.begin() + static_cast<std::ptrdiff_t>(j), y.end());
  return TrafficMatrix::from_sorted_unchecked(std::move(out));
}

inline TrafficMatrix zero_norm(const TrafficMatrix& a) {
  std::vector<Entry> out(a.begin(), a.end());
  for (auto& e : out) e.count = 1;
  return TrafficMatrix::from_sorted_unchecked(std::move(out));
}

// Inclusive address interval.
struct Interval {
  Addr lo{};
  Addr hi{};

  friend constexpr bool operator==(const Interval&, const Interval&) = default;

  std::uint64_t size() const noexcept { return std::uint64_t{hi} - lo + 1; }
};

// Named set of disjoint ascending address intervals. Acts as the diagonal
// selector of a subrange product.
class SubrangeSpec {
public:
  SubrangeSpec() = default;

  // Intervals may arrive in any order and may overlap or touch; they are
  // normalized into a disjoint ascending set.
  SubrangeSpec(std::string name, std::vector<Interval> intervals)
      : name_(std::move(name)), intervals_(normalize(std::move(intervals))) {}

  static SubrangeSpec full(std::string name = "all") {
    return SubrangeSpec(std::move(name), {{0, std::numeric_limits<Addr>::max()}});
  }

  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  std::span<const Interval> intervals() const noexcept { return intervals_; }
  bool empty() const noexcept { return intervals_.empty(); }

  std::uint64_t address_count() const noexcept {
    std::uint64_t n = 0;
    for (const auto& iv : intervals_) n += iv.size();
    return n;
  }

  bool contains(Addr a) const noexcept {
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), a,
                               [](Addr v, const Interval& iv) { return v < iv.lo; });
    if (it == intervals_.begin()) return false;
    return a <= std::prev(it)->hi;
  }

  bool overlaps(const SubrangeSpec& other) const noexcept {
    std::size_t i = 0, j = 0;
    const auto& x = intervals_;
    const auto& y = other.intervals_;
    while (i < x.size() && j < y.size()) {
      if (x[i].hi < y[j].lo) ++i;
      else if (y[j].hi < x[i].lo) ++j;
      else return true;
    }
    return false;
  }

  SubrangeSpec complement(std::string name) const {
    std::vector<Interval> out;
    std::uint64_t next = 0;
    for (const auto& iv : intervals_) {
      if (iv.lo > next) out.push_back({static_cast<Addr>(next), iv.lo - 1});
      next = std::uint64_t{iv.hi} + 1;
    }
    if (next <= std::numeric_limits<Addr>::max())
      out.push_back({static_cast<Addr>(next), std::numeric_limits<Addr>::max()});
    return SubrangeSpec(std::move(name), std::move(out));
  }

  SubrangeSpec united(const SubrangeSpec& other, std::string name) const {
    std::vector<Interval> all(intervals_);
    all.insert(all.end(), other.intervals_.begin(), other.intervals_.end());
    return SubrangeSpec(std::move(name), std::move(all));
  }

  friend bool operator==(const SubrangeSpec&, const SubrangeSpec&) = default;

private:
  static std::vector<Interval> normalize(std::vector<Interval> v) {
    for (auto& iv : v)
      if (iv.lo > iv.hi) throw std::invalid_argument("interval with lo > hi");
    std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> out;
    for (const auto& iv : v) {
      if (!out.empty() && std::uint64_t{iv.lo} <= std::uint64_t{out.back().hi} + 1)
        out.back().hi = std::max(out.back().hi, iv.hi);
      else
        out.push_back(iv);
    }
    return out;
  }

  std::string name_;
  std::vector<Interval> intervals_;
};

// Entries with src in rows and dst in cols; order preserved. Row membership
// is looked up once per source run since entries are grouped by source.
inline TrafficMatrix select_subrange(const TrafficMatrix& a, const SubrangeSpec& rows,
                                     const SubrangeSpec& cols) {
  std::vector<Entry> out;
  auto e = a.entries();
  std::size_t i = 0;
  while (i < e.size()) {
    const Addr src = e[i].coord.src;
    std::size_t run_end = i;
    while (run_end < e.size() && e[run_end].coord.src == src) ++run_end;
    if (rows.contains(src)) {
      for (; i < run_end; ++i)
        if (cols.contains(e[i].coord.dst)) out.push_back(e[i]);
    }
    i = run_end;
  }
  return TrafficMatrix::from_sorted_unchecked(std::move(out));
}

// A - select_subrange(A, r, r): drops entries with both endpoints in r.
inline TrafficMatrix exclude_subrange(const TrafficMatrix& a, const SubrangeSpec& r) {
  std::vector<Entry> out;
  out.reserve(a.nnz());
  for (const auto& e : a)
    if (!(r.contains(e.coord.src) && r.contains(e.coord.dst))) out.push_back(e);
  return TrafficMatrix::from_sorted_unchecked(std::move(out));
}

}  // namespace nftm
