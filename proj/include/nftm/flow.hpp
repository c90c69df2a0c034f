#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nftm/error.hpp"
#include "nftm/matrix.hpp"
#include "nftm/ranges.hpp"

namespace nftm {

using EpochSeconds = std::int64_t;

// One netflow entry. end >= start, and at least one direction carries
// packets.
struct FlowRecord {
  EpochSeconds start{};
  EpochSeconds end{};
  Addr src{};
  Addr dst{};
  Count fwd_pkts{};
  Count rev_pkts{};

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

struct BinnedFlow {
  EpochSeconds tbin{};
  std::vector<Entry> allocations;
};

// A header line is recognized by a non-numeric first field.
inline bool is_flow_csv_header(std::string_view line) {
  auto comma = line.find(',');
  auto first = trim(line.substr(0, comma));
  if (first.empty()) return false;
  if (first.front() == '-' || first.front() == '+') first.remove_prefix(1);
  return first.empty() || first.find_first_not_of("0123456789") != std::string_view::npos;
}

// Parses "start,end,src,dst,fwd_pkts,rev_pkts".
inline FlowRecord parse_flow_csv(std::string_view line, std::size_t lineno = 0) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    fields.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (fields.size() != 6)
    throw ParseError(lineno, "expected 6 fields, got " + std::to_string(fields.size()));

  auto time_field = [&](std::string_view f, const char* what) {
    EpochSeconds v{};
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc{} || p != f.data() + f.size())
      throw ParseError(lineno, std::string("bad ") + what + " '" + std::string(f) + "'");
    return v;
  };
  auto addr_field = [&](std::string_view f, const char* what) {
    auto a = parse_addr(f);
    if (!a) throw ParseError(lineno, std::string("bad ") + what + " address '" + std::string(f) + "'");
    return *a;
  };
  auto count_field = [&](std::string_view f, const char* what) {
    auto c = parse_uint<Count>(f);
    if (!c) throw ParseError(lineno, std::string("bad ") + what + " '" + std::string(f) + "'");
    return *c;
  };

  FlowRecord r{time_field(fields[0], "start"), time_field(fields[1], "end"),
               addr_field(fields[2], "source"), addr_field(fields[3], "destination"),
               count_field(fields[4], "fwd_pkts"), count_field(fields[5], "rev_pkts")};
  if (r.end < r.start) throw ParseError(lineno, "end precedes start");
  if (r.fwd_pkts == 0 && r.rev_pkts == 0) throw ParseError(lineno, "record carries no packets");
  if (r.end - r.start >= std::int64_t{1} << 32) throw ParseError(lineno, "flow duration exceeds 2^32 seconds");
  return r;
}

// Per-bin packet counts for one direction of a record spread evenly over
// `tbins` one-second bins. Index 0 is the first bin.
//
// pkts >= tbins: every bin gets floor(pkts/tbins); the extra packets go to
// the first bin (extra == 1), to the first and last bins (extra == 2), or to
// first, last and extra-2 interior bins at ceil(k*(tbins-1)/(extra-1)),
// k = 1..extra-2. pkts < tbins: single packets at floor(k*tbins/pkts).
//
// Returned as sparse (bin offset, count) pairs in ascending offset order.
inline std::vector<std::pair<std::uint64_t, Count>> spread_packets(Count pkts, std::uint64_t tbins) {
  std::vector<std::pair<std::uint64_t, Count>> out;
  if (pkts == 0 || tbins == 0) return out;
  if (pkts < tbins) {
    out.reserve(pkts);
    for (Count k = 0; k < pkts; ++k)
      out.emplace_back(static_cast<std::uint64_t>((static_cast<unsigned __int128>(k) * tbins) / pkts), 1);
    return out;
  }
  const Count base = pkts / tbins;
  const Count extra = pkts - base * tbins;
  out.reserve(tbins);
  for (std::uint64_t b = 0; b < tbins; ++b) out.emplace_back(b, base);
  if (extra >= 1) out.front().second += 1;
  if (extra >= 2) out.back().second += 1;
  for (Count k = 1; k + 2 <= extra; ++k) {
    // ceil(k * (tbins-1) / (extra-1))
    const unsigned __int128 num = static_cast<unsigned __int128>(k) * (tbins - 1);
    const auto idx = static_cast<std::uint64_t>((num + (extra - 1) - 1) / (extra - 1));
    out[idx].second += 1;
  }
  return out;
}

// Splits one record into per-second allocations. The reverse direction is
// emitted as (dst, src).
inline std::vector<BinnedFlow> normalize_flow(const FlowRecord& rec) {
  const auto tbins = static_cast<std::uint64_t>(rec.end - rec.start) + 1;
  auto fwd = spread_packets(rec.fwd_pkts, tbins);
  auto rev = spread_packets(rec.rev_pkts, tbins);
  std::vector<BinnedFlow> out;
  out.reserve(std::max(fwd.size(), rev.size()));
  std::size_t i = 0, j = 0;
  while (i < fwd.size() || j < rev.size()) {
    const std::uint64_t bf = i < fwd.size() ? fwd[i].first : UINT64_MAX;
    const std::uint64_t br = j < rev.size() ? rev[j].first : UINT64_MAX;
    const std::uint64_t b = std::min(bf, br);
    BinnedFlow bin{rec.start + static_cast<EpochSeconds>(b), {}};
    if (bf == b) bin.allocations.push_back({{rec.src, rec.dst}, fwd[i++].second});
    if (br == b) bin.allocations.push_back({{rec.dst, rec.src}, rev[j++].second});
    out.push_back(std::move(bin));
  }
  return out;
}

// Accumulates binned allocations into one traffic matrix per second.
//
// Seconds stay open until the number of open seconds exceeds the budget;
// then every open second before the most recent record's start is
// finalized. Input sorted by start time therefore streams in bounded
// memory. A later allocation into an already finalized second is an error.
class SecondAccumulator {
public:
  using Output = std::pair<EpochSeconds, TrafficMatrix>;

  explicit SecondAccumulator(std::size_t max_open_seconds = 1u << 16)
      : max_open_(max_open_seconds) {}

  // Adds all bins of one record. `sink` receives finalized seconds in
  // ascending order.
  template <typename Sink>
  void add(std::span<const BinnedFlow> bins, Sink&& sink) {
    if (bins.empty()) return;
    for (const auto& b : bins) {
      if (emitted_any_ && b.tbin <= last_emitted_)
        throw DataError("second " + std::to_string(b.tbin) +
                        " was already finalized: open-second budget exceeded on unsorted input; "
                        "sort flow records by start time or raise the budget");
      auto& cell = open_[b.tbin];
      for (const auto& a : b.allocations) cell.push_back({a.coord.src, a.coord.dst, a.count});
    }
    if (open_.size() > max_open_) {
      flush_before(bins.front().tbin, sink);
      if (open_.size() > max_open_)
        throw DataError("more than " + std::to_string(max_open_) +
                        " seconds open at once; sort flow records by start time or raise the budget");
    }
  }

  template <typename Sink>
  void flush_before(EpochSeconds t, Sink&& sink) {
    while (!open_.empty() && open_.begin()->first < t) emit_front(sink);
  }

  template <typename Sink>
  void finish(Sink&& sink) {
    while (!open_.empty()) emit_front(sink);
  }

  std::size_t open_seconds() const noexcept { return open_.size(); }

private:
  template <typename Sink>
  void emit_front(Sink& sink) {
    auto node = open_.extract(open_.begin());
    last_emitted_ = node.key();
    emitted_any_ = true;
    sink(Output{node.key(), matrix_from_triples(std::move(node.mapped()))});
  }

  std::size_t max_open_;
  std::map<EpochSeconds, std::vector<Triple>> open_;
  EpochSeconds last_emitted_{};
  bool emitted_any_ = false;
};

// Batch form: one matrix per distinct second, ascending.
inline std::vector<std::pair<EpochSeconds, TrafficMatrix>> bins_to_matrices(
    std::span<const BinnedFlow> flows) {
  std::map<EpochSeconds, std::vector<Triple>> by_second;
  for (const auto& b : flows)
    for (const auto& a : b.allocations) by_second[b.tbin].push_back({a.coord.src, a.coord.dst, a.count});
  std::vector<std::pair<EpochSeconds, TrafficMatrix>> out;
  out.reserve(by_second.size());
  for (auto& [t, triples] : by_second) out.emplace_back(t, matrix_from_triples(std::move(triples)));
  return out;
}

}  // namespace nftm
