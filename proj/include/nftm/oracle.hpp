#pragma once

#include <algorithm>
#include <map>
#include <span>

#include "nftm/matrix.hpp"
#include "nftm/quantities.hpp"

namespace nftm {

// Map-based reference for the nine scalars, sharing nothing with
// compute_quantities. Used by the benchmark's pre-flight self check.
inline NetworkQuantities brute_force_quantities(std::span<const Entry> entries) {
  std::map<Addr, Count> src_pk, src_fo, dst_pk, dst_fi;
  NetworkQuantities q;
  for (const auto& e : entries) {
    q.valid_packets += e.count;
    q.unique_links += 1;
    q.max_link_packets = std::max(q.max_link_packets, e.count);
    src_pk[e.coord.src] += e.count;
    src_fo[e.coord.src] += 1;
    dst_pk[e.coord.dst] += e.count;
    dst_fi[e.coord.dst] += 1;
  }
  auto max_of = [](const std::map<Addr, Count>& m) {
    Count best = 0;
    for (const auto& [k, v] : m) best = std::max(best, v);
    return best;
  };
  q.unique_sources = src_pk.size();
  q.max_source_packets = max_of(src_pk);
  q.max_source_fanout = max_of(src_fo);
  q.unique_destinations = dst_pk.size();
  q.max_destination_packets = max_of(dst_pk);
  q.max_destination_fanin = max_of(dst_fi);
  return q;
}

}  // namespace nftm
