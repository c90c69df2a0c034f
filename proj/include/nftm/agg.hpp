#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nftm/bytes.hpp"
#include "nftm/error.hpp"
#include "nftm/quantities.hpp"
#include "nftm/window.hpp"

namespace nftm {

// Aggregate container for one analyzed window.
//
//   header:  "AGG1" | version u16 = 1 | flags u16 (bit 0: window complete)
//            | level u64 | seq u64 | t_start i64 | t_end i64 | leaf_nv u64
//            | section_count u64
//   section: name_len u16 | name | kind u8 | mandatory u8
//            | element_count u64 | byte_length u64 | payload
//
// Section kinds:
//   1 scalars   9 x u64 in NetworkQuantities::kScalarNames order
//   2 sparse    element_count x (index u64, value u64), ascending index
//   3 range     label_len u16 | label | element_count x (lo u64, hi u64)
//
// Sections are written in order: "full", "cell.R.C" for R, C in 0..2, then
// distribution vectors "<cell>.<distribution>" when retained, then the
// three grid ranges "range.K" (optional sections). Readers skip unknown
// optional sections by byte length.
//
// A bulk file starts with "AGGM" | version u16 | reserved u16, holds AGG1
// records back to back, and ends with an index: count x (offset u64,
// length u64) | count u64 | "AGGX".
namespace agg {
inline constexpr char kMagic[4] = {'A', 'G', 'G', '1'};
inline constexpr char kBulkMagic[4] = {'A', 'G', 'G', 'M'};
inline constexpr char kIndexMagic[4] = {'A', 'G', 'G', 'X'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint16_t kFlagComplete = 0x1;
inline constexpr std::uint8_t kKindScalars = 1;
inline constexpr std::uint8_t kKindSparse = 2;
inline constexpr std::uint8_t kKindRange = 3;
}  // namespace agg

struct WindowMeta {
  std::uint64_t level = 0;
  std::uint64_t seq = 0;
  EpochSeconds t_start = 0;
  EpochSeconds t_end = 0;
  Count leaf_nv = 0;
  bool complete = false;

  static WindowMeta of(const Window& w, Count leaf_nv) {
    return {w.level, w.seq, w.t_start, w.t_end, leaf_nv, w.complete};
  }

  friend bool operator==(const WindowMeta&, const WindowMeta&) = default;
};

struct AggregateRecord {
  SubrangeGrid grid;
  WindowMeta meta;

  friend bool operator==(const AggregateRecord&, const AggregateRecord&) = default;
};

inline std::string cell_section_name(std::size_t r, std::size_t c) {
  return "cell." + std::to_string(r) + "." + std::to_string(c);
}

namespace detail {

inline void put_section_head(std::string& out, std::string_view name, std::uint8_t kind, bool mandatory,
                             std::uint64_t elements, std::uint64_t bytes) {
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
  out.append(name);
  out.push_back(static_cast<char>(kind));
  out.push_back(static_cast<char>(mandatory ? 1 : 0));
  put_le<std::uint64_t>(out, elements);
  put_le<std::uint64_t>(out, bytes);
}

inline void put_scalars(std::string& out, std::string_view name, const NetworkQuantities& q) {
  put_section_head(out, name, agg::kKindScalars, true, NetworkQuantities::kScalarCount,
                   8 * NetworkQuantities::kScalarCount);
  for (auto v : q.scalars()) put_le<std::uint64_t>(out, v);
}

inline void put_sparse(std::string& out, const std::string& name, const SparseVector& v) {
  put_section_head(out, name, agg::kKindSparse, true, v.size(), 16 * v.size());
  for (const auto& [i, x] : v) {
    put_le<std::uint64_t>(out, i);
    put_le<std::uint64_t>(out, x);
  }
}

inline void put_distributions(std::string& out, const std::string& prefix, const NetworkQuantities& q,
                              std::uint64_t& sections) {
  if (!q.distributions) return;
  const auto& d = *q.distributions;
  const SparseVector* vs[4] = {&d.source_packets, &d.source_fanout, &d.destination_packets, &d.destination_fanin};
  for (std::size_t k = 0; k < 4; ++k) {
    put_sparse(out, prefix + "." + std::string(kDistributionNames[k]), *vs[k]);
    ++sections;
  }
}

inline void put_range(std::string& out, std::size_t k, const SubrangeSpec& r) {
  const auto ivs = r.intervals();
  put_section_head(out, "range." + std::to_string(k), agg::kKindRange, false, ivs.size(),
                   2 + r.name().size() + 16 * ivs.size());
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(r.name().size()));
  out.append(r.name());
  for (const auto& iv : ivs) {
    put_le<std::uint64_t>(out, iv.lo);
    put_le<std::uint64_t>(out, iv.hi);
  }
}

// Bounds-checked little-endian cursor over an in-memory buffer.
class Cursor {
public:
  Cursor(std::string_view bytes, std::uint64_t base, std::uint64_t record)
      : bytes_(bytes), base_(base), record_(record) {}

  std::uint64_t offset() const noexcept { return base_ + pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  [[noreturn]] void fail(const std::string& what) const { throw FormatError("AGG", record_, offset(), what); }

  const unsigned char* take(std::size_t n, const char* what) {
    if (remaining() < n) fail(std::string("truncated ") + what);
    auto p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += n;
    return p;
  }

  template <typename T>
  T get(const char* what) {
    return get_le<T>(take(sizeof(T), what));
  }

  std::string_view str(std::size_t n, const char* what) {
    auto p = take(n, what);
    return {reinterpret_cast<const char*>(p), n};
  }

private:
  std::string_view bytes_;
  std::uint64_t base_;
  std::uint64_t record_;
  std::size_t pos_ = 0;
};

inline NetworkQuantities* quantities_for(SubrangeGrid& g, std::string_view cell) {
  if (cell == "full") return &g.full;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      if (cell == cell_section_name(r, c)) return &g.cells[r][c];
  return nullptr;
}

}  // namespace detail

// Serializes one record. Output is a pure function of the input.
inline std::string write_aggregates(const SubrangeGrid& grid, const WindowMeta& meta) {
  std::string body;
  std::uint64_t sections = 0;
  detail::put_scalars(body, "full", grid.full);
  ++sections;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      detail::put_scalars(body, cell_section_name(r, c), grid.cells[r][c]);
      ++sections;
    }
  detail::put_distributions(body, "full", grid.full, sections);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) detail::put_distributions(body, cell_section_name(r, c), grid.cells[r][c], sections);
  for (std::size_t k = 0; k < 3; ++k) {
    detail::put_range(body, k, grid.ranges[k]);
    ++sections;
  }

  std::string out(agg::kMagic, 4);
  put_le<std::uint16_t>(out, agg::kVersion);
  put_le<std::uint16_t>(out, meta.complete ? agg::kFlagComplete : 0);
  put_le<std::uint64_t>(out, meta.level);
  put_le<std::uint64_t>(out, meta.seq);
  put_le<std::int64_t>(out, meta.t_start);
  put_le<std::int64_t>(out, meta.t_end);
  put_le<std::uint64_t>(out, meta.leaf_nv);
  put_le<std::uint64_t>(out, sections);
  out += body;
  return out;
}

// Parses one AGG1 record. `base` and `record` only affect error reports.
inline AggregateRecord read_aggregates(std::string_view bytes, std::uint64_t base = 0, std::uint64_t record = 0) {
  detail::Cursor cur(bytes, base, record);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), agg::kMagic, 4) != 0) cur.fail("bad magic (not an AGG1 record)");
  cur.take(4, "magic");
  const auto version = cur.get<std::uint16_t>("version");
  if (version != agg::kVersion) cur.fail("unsupported version " + std::to_string(version));
  const auto flags = cur.get<std::uint16_t>("flags");

  AggregateRecord rec;
  rec.meta.complete = (flags & agg::kFlagComplete) != 0;
  rec.meta.level = cur.get<std::uint64_t>("level");
  rec.meta.seq = cur.get<std::uint64_t>("seq");
  rec.meta.t_start = cur.get<std::int64_t>("t_start");
  rec.meta.t_end = cur.get<std::int64_t>("t_end");
  rec.meta.leaf_nv = cur.get<std::uint64_t>("leaf_nv");
  const auto sections = cur.get<std::uint64_t>("section count");

  std::array<bool, 10> seen{};
  std::array<std::array<std::optional<SparseVector>, 4>, 10> dists;
  for (std::uint64_t s = 0; s < sections; ++s) {
    const auto name_len = cur.get<std::uint16_t>("section name length");
    const std::string name(cur.str(name_len, "section name"));
    const auto kind = cur.get<std::uint8_t>("section kind");
    const bool mandatory = cur.get<std::uint8_t>("section flags") != 0;
    const auto elements = cur.get<std::uint64_t>("element count");
    const auto byte_len = cur.get<std::uint64_t>("byte length");
    if (byte_len > cur.remaining()) cur.fail("truncated section '" + name + "'");
    const auto payload_at = cur.offset();
    detail::Cursor body(std::string_view(reinterpret_cast<const char*>(cur.take(byte_len, "section")), byte_len),
                        payload_at, record);

    auto dot = name.find('.', name.rfind("cell.", 0) == 0 ? 8 : 0);
    const std::string cell = name.substr(0, dot == std::string::npos ? name.size() : dot);
    NetworkQuantities* q = detail::quantities_for(rec.grid, cell);
    const std::size_t slot =
        !q || q == &rec.grid.full ? 0 : static_cast<std::size_t>(q - &rec.grid.cells[0][0]) + 1;

    if (kind == agg::kKindScalars && q && dot == std::string::npos) {
      if (elements != NetworkQuantities::kScalarCount || byte_len != 8 * elements)
        body.fail("scalar block '" + name + "' has wrong size");
      std::array<Count, NetworkQuantities::kScalarCount> v{};
      for (auto& x : v) x = body.get<std::uint64_t>("scalar");
      q->set_scalars(v);
      seen[slot] = true;
      continue;
    }
    if (kind == agg::kKindSparse && q && dot != std::string::npos) {
      const auto dist = std::string_view(name).substr(dot + 1);
      std::size_t which = 4;
      for (std::size_t k = 0; k < 4; ++k)
        if (dist == kDistributionNames[k]) which = k;
      if (which < 4) {
        if (byte_len != 16 * elements) body.fail("sparse vector '" + name + "' has wrong size");
        SparseVector v;
        v.reserve(elements);
        for (std::uint64_t i = 0; i < elements; ++i) {
          const auto idx = body.get<std::uint64_t>("index");
          const auto val = body.get<std::uint64_t>("value");
          if (idx > 0xFFFFFFFFull || (!v.empty() && idx <= v.back().first))
            body.fail("sparse vector '" + name + "' indices not ascending 32-bit");
          v.emplace_back(static_cast<Addr>(idx), val);
        }
        dists[slot][which] = std::move(v);
        continue;
      }
    }
    if (kind == agg::kKindRange && name.size() == 7 && name.rfind("range.", 0) == 0 && name[6] >= '0' &&
        name[6] <= '2') {
      const auto label_len = body.get<std::uint16_t>("range label length");
      std::string label(body.str(label_len, "range label"));
      std::vector<Interval> ivs;
      for (std::uint64_t i = 0; i < elements; ++i) {
        const auto lo = body.get<std::uint64_t>("range lo");
        const auto hi = body.get<std::uint64_t>("range hi");
        if (lo > hi || hi > 0xFFFFFFFFull) body.fail("bad interval in '" + name + "'");
        ivs.push_back({static_cast<Addr>(lo), static_cast<Addr>(hi)});
      }
      rec.grid.ranges[static_cast<std::size_t>(name[6] - '0')] = SubrangeSpec(std::move(label), std::move(ivs));
      continue;
    }
    if (mandatory) body.fail("unknown mandatory section '" + name + "'");
  }
  for (std::size_t k = 0; k < 10; ++k)
    if (!seen[k]) cur.fail("missing scalar section " + (k == 0 ? std::string("full") : cell_section_name((k - 1) / 3, (k - 1) % 3)));

  for (std::size_t k = 0; k < 10; ++k) {
    const auto& d = dists[k];
    const bool any = d[0] || d[1] || d[2] || d[3];
    if (!any) continue;
    if (!(d[0] && d[1] && d[2] && d[3])) cur.fail("incomplete distribution set");
    NetworkQuantities& q = k == 0 ? rec.grid.full : rec.grid.cells[(k - 1) / 3][(k - 1) % 3];
    q.distributions = Distributions{*d[0], *d[1], *d[2], *d[3]};
  }
  if (cur.remaining() != 0) cur.fail("trailing bytes after last section");
  return rec;
}

// Bulk writer: many records in one file with an index at the end.
class AggBulkWriter {
public:
  explicit AggBulkWriter(std::ostream& out) : out_(out) {
    std::string h(agg::kBulkMagic, 4);
    put_le<std::uint16_t>(h, agg::kVersion);
    put_le<std::uint16_t>(h, 0);
    emit(h);
  }

  void append(const SubrangeGrid& grid, const WindowMeta& meta) {
    auto rec = write_aggregates(grid, meta);
    index_.emplace_back(offset_, rec.size());
    emit(rec);
  }

  void finish() {
    std::string tail;
    for (const auto& [off, len] : index_) {
      put_le<std::uint64_t>(tail, off);
      put_le<std::uint64_t>(tail, len);
    }
    put_le<std::uint64_t>(tail, index_.size());
    tail.append(agg::kIndexMagic, 4);
    emit(tail);
    out_.flush();
  }

  std::size_t records() const noexcept { return index_.size(); }

private:
  void emit(const std::string& s) {
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out_) throw DataError("aggregate write failed");
    offset_ += s.size();
  }

  std::ostream& out_;
  std::uint64_t offset_ = 0;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> index_;
};

// Reads either a single AGG1 record or a bulk file.
inline std::vector<AggregateRecord> read_aggregate_file(std::string_view bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), agg::kMagic, 4) == 0) return {read_aggregates(bytes)};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), agg::kBulkMagic, 4) != 0)
    throw FormatError("AGG", 0, 0, "bad magic (neither AGG1 nor AGGM)");
  const auto version = get_le<std::uint16_t>(reinterpret_cast<const unsigned char*>(bytes.data() + 4));
  if (version != agg::kVersion) throw FormatError("AGG", 0, 4, "unsupported version " + std::to_string(version));
  if (bytes.size() < 20 || std::memcmp(bytes.data() + bytes.size() - 4, agg::kIndexMagic, 4) != 0)
    throw FormatError("AGG", 0, bytes.size(), "truncated bulk file (missing index trailer)");
  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto count = get_le<std::uint64_t>(base + bytes.size() - 12);
  if (count > (bytes.size() - 20) / 16) throw FormatError("AGG", 0, bytes.size() - 12, "index count out of range");
  const std::size_t index_at = bytes.size() - 12 - 16 * count;
  std::vector<AggregateRecord> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto off = get_le<std::uint64_t>(base + index_at + 16 * i);
    const auto len = get_le<std::uint64_t>(base + index_at + 16 * i + 8);
    if (off < 8 || off > index_at || len > index_at - off)
      throw FormatError("AGG", i, index_at + 16 * i, "index entry out of bounds");
    out.push_back(read_aggregates(bytes.substr(off, len), off, i));
  }
  return out;
}

}  // namespace nftm
