#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nftm/error.hpp"
#include "nftm/matrix.hpp"

namespace nftm {

inline std::string_view trim(std::string_view s) {
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_uint(std::string_view s) {
  T v{};
  if (s.empty()) return std::nullopt;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Dotted quad ("10.0.0.1") or plain decimal ("167772161").
inline std::optional<Addr> parse_addr(std::string_view s) {
  s = trim(s);
  if (s.find('.') == std::string_view::npos) return parse_uint<Addr>(s);
  Addr out = 0;
  for (int octet = 0; octet < 4; ++octet) {
    auto dot = s.find('.');
    if ((octet < 3) == (dot == std::string_view::npos)) return std::nullopt;
    auto part = s.substr(0, dot);
    if (part.size() > 3) return std::nullopt;
    auto v = parse_uint<unsigned>(part);
    if (!v || *v > 255) return std::nullopt;
    out = (out << 8) | *v;
    s = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  }
  return out;
}

inline std::string format_addr(Addr a) {
  return std::to_string(a >> 24) + '.' + std::to_string((a >> 16) & 0xff) + '.' +
         std::to_string((a >> 8) & 0xff) + '.' + std::to_string(a & 0xff);
}

// "a.b.c.d/len", a single address, or an inclusive "lo-hi" span.
inline std::optional<Interval> parse_cidr(std::string_view s) {
  s = trim(s);
  if (auto dash = s.find('-'); dash != std::string_view::npos) {
    auto lo = parse_addr(s.substr(0, dash));
    auto hi = parse_addr(s.substr(dash + 1));
    if (!lo || !hi || *lo > *hi) return std::nullopt;
    return Interval{*lo, *hi};
  }
  auto slash = s.find('/');
  auto base = parse_addr(s.substr(0, slash));
  if (!base) return std::nullopt;
  if (slash == std::string_view::npos) return Interval{*base, *base};
  auto len = parse_uint<unsigned>(s.substr(slash + 1));
  if (!len || *len > 32) return std::nullopt;
  const std::uint32_t host = *len == 0 ? 0xFFFFFFFFu : (*len == 32 ? 0u : (1u << (32 - *len)) - 1u);
  return Interval{*base & ~host, *base | host};
}

inline SubrangeSpec subrange_from_cidrs(std::string name, const std::vector<std::string>& cidrs) {
  std::vector<Interval> ivs;
  for (const auto& c : cidrs) {
    auto iv = parse_cidr(c);
    if (!iv) throw DataError("bad CIDR '" + c + "'");
    ivs.push_back(*iv);
  }
  return SubrangeSpec(std::move(name), std::move(ivs));
}

// The three source/destination categories of the subrange grid.
using GridRanges = std::array<SubrangeSpec, 3>;

inline constexpr std::array<std::string_view, 3> kGridSectionNames{"nonroutable", "bogon", "other"};

inline SubrangeSpec default_nonroutable() {
  return subrange_from_cidrs("nonroutable", {"10.0.0.0/8", "172.16.0.0/12", "192.168.0.0/16",
                                             "127.0.0.0/8", "169.254.0.0/16", "0.0.0.0/8"});
}

inline SubrangeSpec default_bogon() { return subrange_from_cidrs("bogon", {"240.0.0.0/4"}); }

inline GridRanges default_grid_ranges() {
  auto nr = default_nonroutable();
  auto bg = default_bogon();
  auto other = nr.united(bg, "").complement("other");
  return {std::move(nr), std::move(bg), std::move(other)};
}

// True when the three ranges are pairwise disjoint and cover all 2^32
// addresses.
inline bool ranges_partition_space(const GridRanges& r) {
  if (r[0].overlaps(r[1]) || r[0].overlaps(r[2]) || r[1].overlaps(r[2])) return false;
  return r[0].address_count() + r[1].address_count() + r[2].address_count() == (std::uint64_t{1} << 32);
}

// Range config grammar (one item per line):
//
//   # comment
//   [nonroutable]
//   10.0.0.0/8
//   [bogon]
//   240.0.0.0/4
//   192.0.2.0-192.0.2.255
//   [other]
//   complement
//
// Items are CIDR blocks, single addresses or inclusive lo-hi spans. A
// section that never appears keeps its default; "complement" (only valid in
// [other]) means everything outside the first two sections, which is also
// the default for [other].
inline GridRanges parse_ranges_config(std::istream& in) {
  std::array<std::optional<std::vector<Interval>>, 3> sections;
  bool other_complement = true;
  int current = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = trim(s.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError(lineno, "unterminated section header");
      auto name = trim(s.substr(1, s.size() - 2));
      current = -1;
      for (int k = 0; k < 3; ++k)
        if (name == kGridSectionNames[static_cast<std::size_t>(k)]) current = k;
      if (current < 0) throw ParseError(lineno, "unknown section '" + std::string(name) + "'");
      sections[static_cast<std::size_t>(current)].emplace();
      if (current == 2) other_complement = false;
      continue;
    }
    if (current < 0) throw ParseError(lineno, "range outside of a section");
    if (s == "complement") {
      if (current != 2) throw ParseError(lineno, "'complement' is only valid in [other]");
      other_complement = true;
      continue;
    }
    auto iv = parse_cidr(s);
    if (!iv) throw ParseError(lineno, "bad range '" + std::string(s) + "'");
    sections[static_cast<std::size_t>(current)]->push_back(*iv);
  }
  GridRanges out = default_grid_ranges();
  for (std::size_t k = 0; k < 2; ++k)
    if (sections[k]) out[k] = SubrangeSpec(std::string(kGridSectionNames[k]), *sections[k]);
  if (other_complement) {
    auto rest = out[0].united(out[1], "").complement("other");
    if (sections[2]) rest = rest.united(SubrangeSpec("", *sections[2]), "other");
    out[2] = std::move(rest);
  } else {
    out[2] = SubrangeSpec("other", *sections[2]);
  }
  return out;
}

}  // namespace nftm
