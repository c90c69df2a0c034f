#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nftm/error.hpp"
#include "nftm/matrix.hpp"
#include "nftm/ranges.hpp"

namespace nftm {

struct AnonKey {
  std::array<std::uint64_t, 2> key{};
  unsigned rounds = 4;

  // 32 hex digits, most significant first.
  static AnonKey from_hex(std::string_view hex, unsigned rounds = 4) {
    hex = trim(hex);
    if (hex.size() != 32) throw DataError("anonymization key must be 32 hex digits");
    AnonKey k;
    k.rounds = rounds;
    for (std::size_t i = 0; i < 32; ++i) {
      const char c = hex[i];
      unsigned v;
      if (c >= '0' && c <= '9') v = static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') v = static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v = static_cast<unsigned>(c - 'A' + 10);
      else throw DataError("anonymization key contains a non-hex character");
      auto& word = k.key[i / 16];
      word = (word << 4) | v;
    }
    return k;
  }
};

inline constexpr const char* kAnonKeyEnv = "NFTM_ANON_KEY";

// Key from a key file when given, else from the environment. Keys are never
// taken from the command line.
inline AnonKey load_anon_key(const std::optional<std::string>& key_file, unsigned rounds = 4) {
  if (key_file) {
    std::ifstream in(*key_file);
    if (!in) throw DataError("cannot open key file " + *key_file);
    std::string line;
    std::getline(in, line);
    return AnonKey::from_hex(line, rounds);
  }
  if (const char* env = std::getenv(kAnonKeyEnv)) return AnonKey::from_hex(env, rounds);
  throw DataError(std::string("no anonymization key: set ") + kAnonKeyEnv + " or pass a key file");
}

// Keyed balanced Feistel network over 32-bit addresses. Any round function
// gives a bijection; the mixer only has to scramble.
class AddressPermutation {
public:
  explicit AddressPermutation(const AnonKey& k) : round_keys_(k.rounds) {
    if (k.rounds == 0) throw std::invalid_argument("Feistel rounds must be >= 1");
    std::uint64_t state = k.key[0] ^ mix(k.key[1]);
    for (auto& rk : round_keys_) {
      state += 0x9E3779B97F4A7C15ull;
      rk = mix(state ^ k.key[1]);
    }
  }

  Addr forward(Addr a) const noexcept {
    std::uint32_t left = a >> 16, right = a & 0xffff;
    for (auto rk : round_keys_) {
      const std::uint32_t next = left ^ round(right, rk);
      left = right;
      right = next;
    }
    return (left << 16) | right;
  }

  Addr inverse(Addr a) const noexcept {
    std::uint32_t left = a >> 16, right = a & 0xffff;
    for (auto it = round_keys_.rbegin(); it != round_keys_.rend(); ++it) {
      const std::uint32_t prev = right ^ round(left, *it);
      right = left;
      left = prev;
    }
    return (left << 16) | right;
  }

private:
  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint32_t round(std::uint32_t half, std::uint64_t rk) noexcept {
    return static_cast<std::uint32_t>(mix(rk ^ (half * 0x9E3779B97F4A7C15ull)) & 0xffff);
  }

  std::vector<std::uint64_t> round_keys_;
};

namespace detail {
template <typename Map>
TrafficMatrix relabel(const TrafficMatrix& a, Map&& map) {
  std::vector<Entry> out;
  out.reserve(a.nnz());
  for (const auto& e : a) out.push_back({{map(e.coord.src), map(e.coord.dst)}, e.count});
  std::sort(out.begin(), out.end(), [](const Entry& x, const Entry& y) { return x.coord < y.coord; });
  return TrafficMatrix::from_sorted_unchecked(std::move(out));
}
}  // namespace detail

inline TrafficMatrix anonymize_matrix(const TrafficMatrix& a, const AddressPermutation& pi) {
  return detail::relabel(a, [&](Addr x) { return pi.forward(x); });
}

inline TrafficMatrix anonymize_matrix(const TrafficMatrix& a, const AnonKey& k) {
  return anonymize_matrix(a, AddressPermutation(k));
}

inline TrafficMatrix deanonymize_matrix(const TrafficMatrix& a, const AddressPermutation& pi) {
  return detail::relabel(a, [&](Addr x) { return pi.inverse(x); });
}

inline TrafficMatrix deanonymize_matrix(const TrafficMatrix& a, const AnonKey& k) {
  return deanonymize_matrix(a, AddressPermutation(k));
}

inline constexpr std::uint64_t kDefaultRangeImageCap = std::uint64_t{1} << 24;

// Image of a range under the permutation. The image is generally
// fragmented, so it is materialized address by address up to `cap`.
inline SubrangeSpec anonymize_range(const SubrangeSpec& r, const AnonKey& k,
                                    std::uint64_t cap = kDefaultRangeImageCap) {
  if (r.address_count() > cap)
    throw DataError("range '" + r.name() + "' has " + std::to_string(r.address_count()) +
                    " addresses, above the image cap of " + std::to_string(cap) +
                    "; tag subranges before anonymizing instead");
  AddressPermutation pi(k);
  std::vector<Addr> image;
  image.reserve(r.address_count());
  for (const auto& iv : r.intervals())
    for (std::uint64_t a = iv.lo; a <= iv.hi; ++a) image.push_back(pi.forward(static_cast<Addr>(a)));
  std::sort(image.begin(), image.end());
  std::vector<Interval> out;
  for (Addr a : image) {
    if (!out.empty() && std::uint64_t{out.back().hi} + 1 == a)
      out.back().hi = a;
    else
      out.push_back({a, a});
  }
  return SubrangeSpec(r.name(), std::move(out));
}

// Permutes a whole grid. When the grid partitions the space, the largest
// range is rebuilt as the complement of the other two images, so the
// usual "everything else" range never has to be enumerated.
inline GridRanges anonymize_grid_ranges(const GridRanges& g, const AnonKey& k,
                                        std::uint64_t cap = kDefaultRangeImageCap) {
  GridRanges out = g;
  std::size_t skip = 3;
  if (ranges_partition_space(g)) {
    skip = 0;
    for (std::size_t i = 1; i < 3; ++i)
      if (g[i].address_count() > g[skip].address_count()) skip = i;
  }
  for (std::size_t i = 0; i < 3; ++i)
    if (i != skip) out[i] = anonymize_range(g[i], k, cap);
  if (skip < 3) {
    const auto& a = out[(skip + 1) % 3];
    const auto& b = out[(skip + 2) % 3];
    out[skip] = a.united(b, g[skip].name()).complement(g[skip].name());
  }
  return out;
}

}  // namespace nftm
