#pragma once

#include <boost/crc.hpp>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nftm/bytes.hpp"
#include "nftm/error.hpp"
#include "nftm/flow.hpp"
#include "nftm/matrix.hpp"

namespace nftm {

// Time Matrix List container.
//
//   header:  "TML1" | version u16 = 1 | flags u16
//   entry:   t i64 | del_count i32 | ins_count i32
//            | D: del_count x u32 positions into the previous canonical set
//            | I: ins_count x (src u32, dst u32), canonical order
//            | V: current-set-size x u64 counts, canonical order
//            | CRC32C u32 over the entry bytes (flags bit 0 only)
//
// All integers little-endian.
namespace tml {
inline constexpr char kMagic[4] = {'T', 'M', 'L', '1'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint16_t kFlagCrc = 0x1;
inline constexpr std::size_t kHeaderBytes = 8;

using Crc32c = boost::crc_optimal<32, 0x1EDC6F41, 0xFFFFFFFF, 0xFFFFFFFF, true, true>;
}  // namespace tml

using TimedMatrix = std::pair<EpochSeconds, TrafficMatrix>;

class TmlWriter {
public:
  explicit TmlWriter(std::ostream& out, std::uint16_t flags = 0) : out_(out), flags_(flags) {
    if (flags & ~tml::kFlagCrc) throw std::invalid_argument("unknown TML flag bits");
    std::string h(tml::kMagic, 4);
    put_le<std::uint16_t>(h, tml::kVersion);
    put_le<std::uint16_t>(h, flags_);
    out_.write(h.data(), static_cast<std::streamsize>(h.size()));
  }

  void write(EpochSeconds t, const TrafficMatrix& m) {
    if (entries_ > 0 && t <= last_t_)
      throw DataError("TML timestamps must be strictly ascending (" + std::to_string(t) + " after " +
                      std::to_string(last_t_) + ")");
    std::vector<std::uint32_t> deleted;
    std::vector<Coord> inserted;
    auto cur = m.entries();
    std::size_t i = 0, j = 0;
    while (i < prev_.size() || j < cur.size()) {
      if (j == cur.size() || (i < prev_.size() && prev_[i] < cur[j].coord)) {
        deleted.push_back(static_cast<std::uint32_t>(i++));
      } else if (i == prev_.size() || cur[j].coord < prev_[i]) {
        inserted.push_back(cur[j++].coord);
      } else {
        ++i;
        ++j;
      }
    }
    constexpr auto kMax = static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max());
    if (deleted.size() > kMax || inserted.size() > kMax || cur.size() > std::numeric_limits<std::uint32_t>::max())
      throw DataError("matrix too large for TML 32-bit counts");

    buf_.clear();
    buf_.reserve(16 + 4 * deleted.size() + 8 * inserted.size() + 8 * cur.size() + 4);
    put_le<std::int64_t>(buf_, t);
    put_le<std::int32_t>(buf_, static_cast<std::int32_t>(deleted.size()));
    put_le<std::int32_t>(buf_, static_cast<std::int32_t>(inserted.size()));
    for (auto p : deleted) put_le<std::uint32_t>(buf_, p);
    for (const auto& c : inserted) {
      put_le<std::uint32_t>(buf_, c.src);
      put_le<std::uint32_t>(buf_, c.dst);
    }
    for (const auto& e : cur) put_le<std::uint64_t>(buf_, e.count);
    if (flags_ & tml::kFlagCrc) {
      tml::Crc32c crc;
      crc.process_bytes(buf_.data(), buf_.size());
      put_le<std::uint32_t>(buf_, crc.checksum());
    }
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out_) throw DataError("TML write failed");

    prev_.clear();
    prev_.reserve(cur.size());
    for (const auto& e : cur) prev_.push_back(e.coord);
    last_t_ = t;
    ++entries_;
  }

  std::uint64_t entries() const noexcept { return entries_; }

private:
  std::ostream& out_;
  std::uint16_t flags_;
  std::vector<Coord> prev_;
  std::string buf_;
  EpochSeconds last_t_ = 0;
  std::uint64_t entries_ = 0;
};

class TmlReader {
public:
  explicit TmlReader(std::istream& in) : in_(in) {
    unsigned char h[tml::kHeaderBytes];
    if (!in_.read(h, sizeof h)) fail("truncated header");
    if (std::memcmp(h, tml::kMagic, 4) != 0) fail("bad magic (not a TML stream)", 0);
    const auto version = get_le<std::uint16_t>(h + 4);
    if (version != tml::kVersion) fail("unsupported version " + std::to_string(version), 4);
    flags_ = get_le<std::uint16_t>(h + 6);
    if (flags_ & ~tml::kFlagCrc) fail("unknown flag bits", 6);
  }

  std::uint16_t flags() const noexcept { return flags_; }
  std::uint64_t entries_read() const noexcept { return entry_; }
  std::uint64_t bytes_read() const noexcept { return in_.offset(); }

  // Next (t, matrix), or nullopt at a clean end of stream.
  std::optional<TimedMatrix> next() {
    if (in_.at_eof()) return std::nullopt;
    crc_.reset();

    unsigned char fixed[16];
    read_field(fixed, sizeof fixed, "entry header");
    const auto t = get_le<std::int64_t>(fixed);
    const auto del = get_le<std::int32_t>(fixed + 8);
    const auto ins = get_le<std::int32_t>(fixed + 12);
    const std::uint64_t fixed_at = in_.offset() - 16;
    if (entry_ > 0 && t <= last_t_) fail("timestamp not ascending", fixed_at);
    if (del < 0) fail("negative delete count", fixed_at + 8);
    if (ins < 0) fail("negative insert count", fixed_at + 12);
    if (static_cast<std::size_t>(del) > prev_.size())
      fail("delete count " + std::to_string(del) + " exceeds set size " + std::to_string(prev_.size()),
           fixed_at + 8);

    // D: positional deletes against the previous canonical sequence.
    std::vector<Coord> survivors;
    survivors.reserve(prev_.size() - static_cast<std::size_t>(del));
    {
      std::size_t cursor = 0;
      std::int64_t last_pos = -1;
      for_each_chunk<4>(static_cast<std::size_t>(del), "delete list", [&](const unsigned char* p, std::uint64_t at) {
        const auto pos = get_le<std::uint32_t>(p);
        if (pos >= prev_.size())
          fail("delete position out of range (" + std::to_string(pos) + " >= " + std::to_string(prev_.size()) + ")",
               at);
        if (static_cast<std::int64_t>(pos) <= last_pos) fail("delete positions not ascending", at);
        last_pos = pos;
        while (cursor < pos) survivors.push_back(prev_[cursor++]);
        ++cursor;
      });
      while (cursor < prev_.size()) survivors.push_back(prev_[cursor++]);
    }

    // I: merged into the survivors.
    std::vector<Coord> current;
    current.reserve(survivors.size() + std::min<std::size_t>(static_cast<std::size_t>(ins), 1u << 16));
    {
      std::size_t k = 0;
      std::optional<Coord> last_ins;
      for_each_chunk<8>(static_cast<std::size_t>(ins), "insert list", [&](const unsigned char* p, std::uint64_t at) {
        const Coord c{get_le<std::uint32_t>(p), get_le<std::uint32_t>(p + 4)};
        if (last_ins && !(*last_ins < c)) fail("inserted coordinates out of canonical order", at);
        last_ins = c;
        while (k < survivors.size() && survivors[k] < c) current.push_back(survivors[k++]);
        if (k < survivors.size() && survivors[k] == c) fail("inserted coordinate already present", at);
        current.push_back(c);
      });
      while (k < survivors.size()) current.push_back(survivors[k++]);
    }

    // V: one count per current coordinate.
    std::vector<Entry> entries(current.size());
    {
      std::size_t n = 0;
      for_each_chunk<8>(current.size(), "value list", [&](const unsigned char* p, std::uint64_t at) {
        const auto v = get_le<std::uint64_t>(p);
        if (v == 0) fail("zero count in value list", at);
        entries[n] = {current[n], v};
        ++n;
      });
    }

    if (flags_ & tml::kFlagCrc) {
      const auto computed = crc_.checksum();
      unsigned char c[4];
      if (!in_.read(c, 4)) fail("truncated checksum");
      if (get_le<std::uint32_t>(c) != computed) fail("checksum mismatch", in_.offset() - 4);
    }

    prev_ = std::move(current);
    last_t_ = t;
    ++entry_;
    return TimedMatrix{t, TrafficMatrix::from_sorted_unchecked(std::move(entries))};
  }

private:
  [[noreturn]] void fail(const std::string& what) { fail(what, in_.offset()); }
  [[noreturn]] void fail(const std::string& what, std::uint64_t at) {
    throw FormatError("TML", entry_, at, what);
  }

  void read_field(unsigned char* dst, std::size_t n, const char* what) {
    if (!in_.read(dst, n)) fail(std::string("truncated ") + what);
    crc_.process_bytes(dst, n);
  }

  // Reads `count` fixed-width records in bounded chunks so a corrupt count
  // cannot force a huge allocation before the stream runs out.
  template <std::size_t Width, typename Fn>
  void for_each_chunk(std::size_t count, const char* what, Fn&& fn) {
    constexpr std::size_t kChunk = 8192;
    scratch_.resize(kChunk * Width);
    while (count > 0) {
      const std::size_t n = std::min(count, kChunk);
      const std::uint64_t start = in_.offset();
      read_field(scratch_.data(), n * Width, what);
      for (std::size_t i = 0; i < n; ++i) fn(scratch_.data() + i * Width, start + i * Width);
      count -= n;
    }
  }

  struct Reader : CountingReader {
    using CountingReader::CountingReader;
    bool read(unsigned char* dst, std::size_t n) { return CountingReader::read(dst, n); }
  } in_;
  std::uint16_t flags_ = 0;
  std::vector<Coord> prev_;
  EpochSeconds last_t_ = 0;
  std::uint64_t entry_ = 0;
  tml::Crc32c crc_;
  std::vector<unsigned char> scratch_;
};

inline std::string tml_encode(std::span<const TimedMatrix> seq, std::uint16_t flags = 0) {
  std::ostringstream out;
  TmlWriter w(out, flags);
  for (const auto& [t, m] : seq) w.write(t, m);
  return std::move(out).str();
}

inline std::vector<TimedMatrix> tml_decode(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  TmlReader r(in);
  std::vector<TimedMatrix> out;
  while (auto e = r.next()) out.push_back(std::move(*e));
  return out;
}

struct TmlStats {
  std::uint64_t entries = 0;
  Count total_packets = 0;
  std::uint64_t total_bytes = 0;
  // 8 * total_bytes / total_packets; +infinity when there are no packets.
  double bits_per_packet = std::numeric_limits<double>::infinity();
};

inline TmlStats tml_stats(std::istream& in) {
  TmlReader r(in);
  TmlStats s;
  while (auto e = r.next()) s.total_packets = checked_add(s.total_packets, e->second.valid_packets());
  s.entries = r.entries_read();
  s.total_bytes = r.bytes_read();
  if (s.total_packets > 0)
    s.bits_per_packet = 8.0 * static_cast<double>(s.total_bytes) / static_cast<double>(s.total_packets);
  return s;
}

inline TmlStats tml_stats(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  return tml_stats(in);
}

}  // namespace nftm
