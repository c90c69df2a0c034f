#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "nftm/matrix.hpp"
#include "nftm/parallel.hpp"
#include "nftm/ranges.hpp"
#include "nftm/window.hpp"

namespace nftm {

// Sparse vector over addresses, ascending by address, no zero values.
using SparseVector = std::vector<std::pair<Addr, Count>>;

struct Distributions {
  SparseVector source_packets;       // A 1
  SparseVector source_fanout;        // |A|_0 1
  SparseVector destination_packets;  // 1^T A
  SparseVector destination_fanin;    // 1^T |A|_0

  friend bool operator==(const Distributions&, const Distributions&) = default;
};

inline constexpr std::array<std::string_view, 4> kDistributionNames{
    "source_packets", "source_fanout", "destination_packets", "destination_fanin"};

// The nine scalar aggregates of a traffic matrix.
struct NetworkQuantities {
  Count valid_packets = 0;
  Count unique_links = 0;
  Count max_link_packets = 0;
  Count unique_sources = 0;
  Count max_source_packets = 0;
  Count max_source_fanout = 0;
  Count unique_destinations = 0;
  Count max_destination_packets = 0;
  Count max_destination_fanin = 0;

  std::optional<Distributions> distributions;

  static constexpr std::size_t kScalarCount = 9;
  static constexpr std::array<std::string_view, kScalarCount> kScalarNames{
      "valid_packets",       "unique_links",        "max_link_packets",
      "unique_sources",      "max_source_packets",  "max_source_fanout",
      "unique_destinations", "max_destination_packets", "max_destination_fanin"};

  std::array<Count, kScalarCount> scalars() const {
    return {valid_packets,       unique_links,       max_link_packets,
            unique_sources,      max_source_packets, max_source_fanout,
            unique_destinations, max_destination_packets, max_destination_fanin};
  }

  void set_scalars(const std::array<Count, kScalarCount>& s) {
    valid_packets = s[0];
    unique_links = s[1];
    max_link_packets = s[2];
    unique_sources = s[3];
    max_source_packets = s[4];
    max_source_fanout = s[5];
    unique_destinations = s[6];
    max_destination_packets = s[7];
    max_destination_fanin = s[8];
  }

  bool same_scalars(const NetworkQuantities& o) const { return scalars() == o.scalars(); }

  friend bool operator==(const NetworkQuantities&, const NetworkQuantities&) = default;
};

namespace detail {

struct DestinationTally {
  Count unique = 0;
  Count max_packets = 0;
  Count max_fanin = 0;
  SparseVector packets;
  SparseVector fanin;
};

// Column reductions over the entries whose destination falls in
// [lo, hi]. Sorting the (dst, count) pairs groups each column.
inline DestinationTally tally_destinations(std::span<const Entry> entries, std::uint64_t lo, std::uint64_t hi,
                                           bool keep) {
  std::vector<std::pair<Addr, Count>> cols;
  for (const auto& e : entries)
    if (e.coord.dst >= lo && e.coord.dst <= hi) cols.emplace_back(e.coord.dst, e.count);
  std::sort(cols.begin(), cols.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  DestinationTally t;
  std::size_t i = 0;
  while (i < cols.size()) {
    const Addr dst = cols[i].first;
    Count packets = 0, fanin = 0;
    for (; i < cols.size() && cols[i].first == dst; ++i) {
      packets = checked_add(packets, cols[i].second);
      ++fanin;
    }
    ++t.unique;
    t.max_packets = std::max(t.max_packets, packets);
    t.max_fanin = std::max(t.max_fanin, fanin);
    if (keep) {
      t.packets.emplace_back(dst, packets);
      t.fanin.emplace_back(dst, fanin);
    }
  }
  return t;
}

}  // namespace detail

// All nine aggregates in integer arithmetic. Row reductions run over the
// source-grouped entries directly; column reductions are split into
// `threads` contiguous destination bands reduced independently.
inline NetworkQuantities compute_quantities(const TrafficMatrix& a, bool keep_distributions = false,
                                            unsigned threads = 1) {
  NetworkQuantities q;
  auto e = a.entries();
  q.unique_links = e.size();
  if (keep_distributions) q.distributions.emplace();

  std::size_t i = 0;
  while (i < e.size()) {
    const Addr src = e[i].coord.src;
    Count packets = 0, fanout = 0;
    for (; i < e.size() && e[i].coord.src == src; ++i) {
      packets = checked_add(packets, e[i].count);
      q.max_link_packets = std::max(q.max_link_packets, e[i].count);
      ++fanout;
    }
    q.valid_packets = checked_add(q.valid_packets, packets);
    ++q.unique_sources;
    q.max_source_packets = std::max(q.max_source_packets, packets);
    q.max_source_fanout = std::max(q.max_source_fanout, fanout);
    if (keep_distributions) {
      q.distributions->source_packets.emplace_back(src, packets);
      q.distributions->source_fanout.emplace_back(src, fanout);
    }
  }

  const unsigned bands = std::max(1u, threads);
  std::vector<detail::DestinationTally> tallies(bands);
  const std::uint64_t span = (std::uint64_t{1} << 32) / bands + 1;
  parallel_for(bands, bands, [&](std::size_t b) {
    const std::uint64_t lo = b * span;
    const std::uint64_t hi = std::min<std::uint64_t>((b + 1) * span - 1, 0xFFFFFFFFull);
    tallies[b] = detail::tally_destinations(e, lo, hi, keep_distributions);
  });
  for (auto& t : tallies) {
    q.unique_destinations += t.unique;
    q.max_destination_packets = std::max(q.max_destination_packets, t.max_packets);
    q.max_destination_fanin = std::max(q.max_destination_fanin, t.max_fanin);
    if (keep_distributions) {
      auto& d = *q.distributions;
      d.destination_packets.insert(d.destination_packets.end(), t.packets.begin(), t.packets.end());
      d.destination_fanin.insert(d.destination_fanin.end(), t.fanin.begin(), t.fanin.end());
    }
  }
  return q;
}

// Full-matrix quantities plus the 3 x 3 grid of source-range x
// destination-range cells.
struct SubrangeGrid {
  GridRanges ranges;
  NetworkQuantities full;
  std::array<std::array<NetworkQuantities, 3>, 3> cells;

  bool ranges_overlap() const {
    return ranges[0].overlaps(ranges[1]) || ranges[0].overlaps(ranges[2]) || ranges[1].overlaps(ranges[2]);
  }

  friend bool operator==(const SubrangeGrid&, const SubrangeGrid&) = default;
};

// The nine cell matrices in one pass over the entries. Overlapping ranges
// place an entry in every cell whose selectors both contain it.
inline std::array<std::array<TrafficMatrix, 3>, 3> split_grid(const TrafficMatrix& a, const GridRanges& ranges) {
  std::array<std::array<std::vector<Entry>, 3>, 3> parts;
  std::array<bool, 3> in_row{};
  Addr current_src = 0;
  bool have_src = false;
  for (const auto& e : a) {
    if (!have_src || e.coord.src != current_src) {
      current_src = e.coord.src;
      have_src = true;
      for (std::size_t r = 0; r < 3; ++r) in_row[r] = ranges[r].contains(current_src);
    }
    for (std::size_t c = 0; c < 3; ++c) {
      if (!ranges[c].contains(e.coord.dst)) continue;
      for (std::size_t r = 0; r < 3; ++r)
        if (in_row[r]) parts[r][c].push_back(e);
    }
  }
  std::array<std::array<TrafficMatrix, 3>, 3> out;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) out[r][c] = TrafficMatrix::from_sorted_unchecked(std::move(parts[r][c]));
  return out;
}

inline SubrangeGrid analyze_matrix(const TrafficMatrix& m, const GridRanges& ranges, bool keep_distributions = false,
                                   unsigned threads = 1) {
  SubrangeGrid g;
  g.ranges = ranges;
  auto cells = split_grid(m, ranges);
  // Task 0 is the full matrix, 1..9 the cells in row-major order.
  parallel_for(10, threads, [&](std::size_t k) {
    if (k == 0)
      g.full = compute_quantities(m, keep_distributions);
    else
      g.cells[(k - 1) / 3][(k - 1) % 3] = compute_quantities(cells[(k - 1) / 3][(k - 1) % 3], keep_distributions);
  });
  return g;
}

inline SubrangeGrid analyze_window(const Window& w, const GridRanges& ranges, bool keep_distributions = false,
                                   unsigned threads = 1) {
  return analyze_matrix(w.matrix, ranges, keep_distributions, threads);
}

}  // namespace nftm
