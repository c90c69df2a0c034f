#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>

#include "oracles.hpp"

using namespace nftm;
using nftm::testing::Rng;

namespace {

std::string header(std::uint16_t flags = 0) {
  std::string h("TML1", 4);
  put_le<std::uint16_t>(h, 1);
  put_le<std::uint16_t>(h, flags);
  return h;
}

struct RawEntry {
  std::int64_t t;
  std::vector<std::uint32_t> del;
  std::vector<Coord> ins;
  std::vector<std::uint64_t> vals;
};

// Writes entries field by field without going through TmlWriter.
std::string raw_stream(const std::vector<RawEntry>& es, std::uint16_t flags = 0) {
  std::string out = header(flags);
  for (const auto& e : es) {
    std::string b;
    put_le<std::int64_t>(b, e.t);
    put_le<std::int32_t>(b, static_cast<std::int32_t>(e.del.size()));
    put_le<std::int32_t>(b, static_cast<std::int32_t>(e.ins.size()));
    for (auto d : e.del) put_le<std::uint32_t>(b, d);
    for (auto c : e.ins) {
      put_le<std::uint32_t>(b, c.src);
      put_le<std::uint32_t>(b, c.dst);
    }
    for (auto v : e.vals) put_le<std::uint64_t>(b, v);
    if (flags & tml::kFlagCrc) {
      tml::Crc32c crc;
      crc.process_bytes(b.data(), b.size());
      put_le<std::uint32_t>(b, crc.checksum());
    }
    out += b;
  }
  return out;
}

std::vector<TimedMatrix> evolving_sequence(Rng& rng, int steps, Addr pool) {
  std::vector<TimedMatrix> seq;
  std::map<std::pair<Addr, Addr>, Count> cur;
  EpochSeconds t = -50;
  for (int s = 0; s < steps; ++s) {
    t += 1 + static_cast<EpochSeconds>(rng() % 5);
    const int churn = static_cast<int>(rng() % 20);
    for (int k = 0; k < churn; ++k) {
      if (!cur.empty() && rng() % 2) {
        auto it = cur.begin();
        std::advance(it, static_cast<long>(rng() % cur.size()));
        cur.erase(it);
      } else {
        cur[{static_cast<Addr>(rng() % pool), static_cast<Addr>(rng() % pool)}] = 1 + rng() % 100;
      }
    }
    for (auto& [c, v] : cur)
      if (rng() % 4 == 0) v = 1 + rng() % 1000000;
    std::vector<Triple> tr;
    for (const auto& [c, v] : cur) tr.push_back({c.first, c.second, v});
    seq.emplace_back(t, matrix_from_triples(tr));
  }
  return seq;
}

std::string decode_error(const std::string& bytes) {
  try {
    tml_decode(bytes);
  } catch (const FormatError& e) {
    return e.reason();
  }
  return "";
}

}  // namespace

TEST(TmlEncode, SingleMatrixIsBitExact) {
  std::vector<TimedMatrix> seq{{100, matrix_from_triples({{1, 2, 3}})}};
  auto bytes = tml_encode(seq);
  const unsigned char want[] = {'T', 'M', 'L', '1', 1, 0, 0, 0,           // header
                                100, 0, 0, 0, 0, 0, 0, 0,                 // t
                                0, 0, 0, 0, 1, 0, 0, 0,                   // s = (0, 1)
                                1, 0, 0, 0, 2, 0, 0, 0,                   // I = [(1, 2)]
                                3, 0, 0, 0, 0, 0, 0, 0};                  // V = [3]
  ASSERT_EQ(bytes.size(), sizeof want);
  EXPECT_EQ(0, std::memcmp(bytes.data(), want, sizeof want));
  auto back = tml_decode(bytes);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], seq[0]);
}

TEST(TmlEncode, IdenticalMatricesCarryOnlyValues) {
  auto m = matrix_from_triples({{1, 2, 3}, {4, 5, 6}});
  auto bytes = tml_encode(std::vector<TimedMatrix>{{10, m}, {11, m}});
  // Second entry: t, s = (0, 0), two values.
  const std::size_t first = 8 + 16 + 2 * 8 + 2 * 8;
  ASSERT_EQ(bytes.size(), first + 16 + 16);
  auto p = reinterpret_cast<const unsigned char*>(bytes.data()) + first;
  EXPECT_EQ(get_le<std::int64_t>(p), 11);
  EXPECT_EQ(get_le<std::int32_t>(p + 8), 0);
  EXPECT_EQ(get_le<std::int32_t>(p + 12), 0);
  EXPECT_EQ(get_le<std::uint64_t>(p + 16), 3u);
  EXPECT_EQ(get_le<std::uint64_t>(p + 24), 6u);
}

TEST(TmlEncode, DeltaUsesPositionsAndNewCoordinatesOnly) {
  auto a = matrix_from_triples({{1, 1, 1}, {2, 2, 2}, {3, 3, 3}});
  auto b = matrix_from_triples({{1, 1, 5}, {2, 5, 1}, {3, 3, 3}});
  auto bytes = tml_encode(std::vector<TimedMatrix>{{1, a}, {2, b}});
  std::istringstream in(bytes);
  // Skip the first entry and inspect the second one directly.
  auto p = reinterpret_cast<const unsigned char*>(bytes.data()) + 8 + 16 + 3 * 8 + 3 * 8;
  EXPECT_EQ(get_le<std::int32_t>(p + 8), 1);   // (2,2) deleted
  EXPECT_EQ(get_le<std::int32_t>(p + 12), 1);  // (2,5) inserted
  EXPECT_EQ(get_le<std::uint32_t>(p + 16), 1u);
  EXPECT_EQ(get_le<std::uint32_t>(p + 20), 2u);
  EXPECT_EQ(get_le<std::uint32_t>(p + 24), 5u);
  EXPECT_EQ(get_le<std::uint64_t>(p + 28), 5u);
}

TEST(TmlEncode, RequiresAscendingTimestamps) {
  auto m = matrix_from_triples({{1, 2, 3}});
  EXPECT_THROW(tml_encode(std::vector<TimedMatrix>{{5, m}, {5, m}}), DataError);
  EXPECT_THROW(tml_encode(std::vector<TimedMatrix>{{5, m}, {4, m}}), DataError);
}

TEST(TmlRoundTrip, RandomEvolvingSequences) {
  Rng rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    auto seq = evolving_sequence(rng, 100, trial % 2 ? 8 : 1000);
    for (std::uint16_t flags : {std::uint16_t{0}, tml::kFlagCrc}) {
      auto bytes = tml_encode(seq, flags);
      auto back = tml_decode(bytes);
      ASSERT_EQ(back, seq);
      ASSERT_EQ(tml_encode(back, flags), bytes);
    }
  }
}

TEST(TmlRoundTrip, EmptyMatricesAndNegativeTimes) {
  std::vector<TimedMatrix> seq{{-10, TrafficMatrix{}},
                               {-9, matrix_from_triples({{0, 0, 1}, {0xFFFFFFFF, 0xFFFFFFFF, UINT64_MAX}})},
                               {0, TrafficMatrix{}},
                               {INT64_MAX, matrix_from_triples({{7, 7, 7}})}};
  EXPECT_EQ(tml_decode(tml_encode(seq)), seq);
  EXPECT_TRUE(tml_decode(tml_encode({})).empty());
}

TEST(TmlDecode, DeletePositionOutOfRange) {
  auto bytes = raw_stream({{1, {}, {{1, 1}, {2, 2}, {3, 3}}, {1, 1, 1}}, {2, {5}, {}, {1, 1}}});
  try {
    tml_decode(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.entry(), 1u);
    EXPECT_NE(e.reason().find("delete position out of range"), std::string::npos);
    EXPECT_EQ(e.offset(), 8u + 16 + 24 + 24 + 16);
  }
}

TEST(TmlDecode, StructuralErrors) {
  const RawEntry ok{1, {}, {{1, 1}, {2, 2}}, {1, 1}};
  EXPECT_NE(decode_error(std::string("TMLX\x01\x00\x00\x00", 8)).find("bad magic"), std::string::npos);
  EXPECT_NE(decode_error(std::string("TML1\x02\x00\x00\x00", 8)).find("unsupported version"), std::string::npos);
  EXPECT_NE(decode_error(std::string("TML1\x01\x00\x02\x00", 8)).find("unknown flag"), std::string::npos);
  EXPECT_NE(decode_error("TML").find("truncated header"), std::string::npos);
  auto full = raw_stream({ok});
  EXPECT_NE(decode_error(full.substr(0, full.size() - 1)).find("truncated value list"), std::string::npos);
  EXPECT_NE(decode_error(full.substr(0, 12)).find("truncated entry header"), std::string::npos);
  EXPECT_NE(decode_error(raw_stream({ok, {1, {}, {}, {1, 1}}})).find("timestamp not ascending"), std::string::npos);
  EXPECT_NE(decode_error(raw_stream({ok, {2, {1, 0}, {}, {}}})).find("not ascending"), std::string::npos);
  EXPECT_NE(decode_error(raw_stream({ok, {2, {0, 1, 1}, {}, {}}})).find("exceeds set size"), std::string::npos);
  EXPECT_NE(decode_error(raw_stream({{1, {}, {{2, 2}, {1, 1}}, {1, 1}}})).find("canonical order"), std::string::npos);
  EXPECT_NE(decode_error(raw_stream({{1, {}, {{1, 1}, {1, 1}}, {1, 1}}})).find("canonical order"), std::string::npos);
  EXPECT_NE(decode_error(raw_stream({ok, {2, {}, {{2, 2}}, {1, 1, 1}}})).find("already present"), std::string::npos);
  EXPECT_NE(decode_error(raw_stream({{1, {}, {{1, 1}}, {0}}})).find("zero count"), std::string::npos);

  auto neg = raw_stream({ok});
  neg[8 + 8 + 3] = '\xff';
  EXPECT_NE(decode_error(neg).find("negative delete count"), std::string::npos);
  neg = raw_stream({ok});
  neg[8 + 12 + 3] = '\xff';
  EXPECT_NE(decode_error(neg).find("negative insert count"), std::string::npos);
}

TEST(TmlDecode, FuzzedValidStreamsDecodeToCanonicalMatrices) {
  Rng rng(4321);
  std::vector<RawEntry> es;
  std::vector<Coord> cur;
  std::int64_t t = 0;
  for (int step = 0; step < 1000; ++step) {
    RawEntry e;
    t += 1 + static_cast<std::int64_t>(rng() % 10);
    e.t = t;
    for (std::uint32_t p = 0; p < cur.size(); ++p)
      if (rng() % 5 == 0) e.del.push_back(p);
    std::set<Coord> survivors;
    for (std::uint32_t p = 0, k = 0; p < cur.size(); ++p) {
      if (k < e.del.size() && e.del[k] == p) {
        ++k;
        continue;
      }
      survivors.insert(cur[p]);
    }
    std::set<Coord> ins;
    const int n_ins = static_cast<int>(rng() % 8);
    for (int k = 0; k < n_ins; ++k) {
      Coord c{static_cast<Addr>(rng() % 50), static_cast<Addr>(rng() % 50)};
      if (!survivors.count(c)) ins.insert(c);
    }
    e.ins.assign(ins.begin(), ins.end());
    survivors.insert(ins.begin(), ins.end());
    cur.assign(survivors.begin(), survivors.end());
    for (std::size_t k = 0; k < cur.size(); ++k) e.vals.push_back(1 + rng() % 1000);
    es.push_back(std::move(e));
  }
  auto decoded = tml_decode(raw_stream(es));
  ASSERT_EQ(decoded.size(), es.size());
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    ASSERT_EQ(decoded[i].first, es[i].t);
    ASSERT_TRUE(decoded[i].second.is_canonical());
    ASSERT_EQ(decoded[i].second.nnz(), es[i].vals.size());
    std::size_t k = 0;
    for (const auto& entry : decoded[i].second) ASSERT_EQ(entry.count, es[i].vals[k++]);
  }
}

TEST(TmlDecode, CrcDetectsEverySingleByteCorruption) {
  Rng rng(8);
  auto seq = evolving_sequence(rng, 6, 16);
  auto bytes = tml_encode(seq, tml::kFlagCrc);
  for (std::size_t pos = tml::kHeaderBytes; pos < bytes.size(); ++pos) {
    for (unsigned char flip : {0x01, 0x80, 0xff}) {
      auto bad = bytes;
      bad[pos] = static_cast<char>(bad[pos] ^ flip);
      EXPECT_THROW(tml_decode(bad), FormatError) << "byte " << pos;
    }
  }
}

TEST(TmlDecode, CountFieldCorruptionDetectedWithoutCrc) {
  Rng rng(10);
  auto seq = evolving_sequence(rng, 8, 16);
  auto bytes = tml_encode(seq);
  // Walk entries to find each s field.
  std::vector<std::size_t> s_fields;
  std::size_t pos = tml::kHeaderBytes;
  std::size_t prev = 0;
  for (const auto& [t, m] : seq) {
    auto p = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
    const auto del = static_cast<std::size_t>(get_le<std::int32_t>(p + 8));
    const auto ins = static_cast<std::size_t>(get_le<std::int32_t>(p + 12));
    s_fields.push_back(pos + 8);
    pos += 16 + 4 * del + 8 * ins + 8 * m.nnz();
    prev = m.nnz();
  }
  (void)prev;
  ASSERT_EQ(pos, bytes.size());
  for (auto f : s_fields)
    for (std::size_t b = 0; b < 8; ++b)
      for (unsigned char flip : {0x01, 0x02, 0x10, 0x80}) {
        auto bad = bytes;
        bad[f + b] = static_cast<char>(bad[f + b] ^ flip);
        EXPECT_THROW(tml_decode(bad), FormatError) << "s byte " << f + b;
      }
}

TEST(TmlStats, EmptyStream) {
  auto s = tml_stats(tml_encode({}));
  EXPECT_EQ(s.entries, 0u);
  EXPECT_EQ(s.total_packets, 0u);
  EXPECT_EQ(s.total_bytes, 8u);
  EXPECT_TRUE(std::isinf(s.bits_per_packet));
}

TEST(TmlStats, SingleEntry) {
  auto bytes = tml_encode(std::vector<TimedMatrix>{{1, matrix_from_triples({{1, 2, 1000000}})}});
  auto s = tml_stats(bytes);
  EXPECT_EQ(s.entries, 1u);
  EXPECT_EQ(s.total_packets, 1000000u);
  EXPECT_EQ(s.total_bytes, bytes.size());
  EXPECT_DOUBLE_EQ(s.bits_per_packet, 8.0 * 40 / 1e6);
}

TEST(TmlStats, MatchesExternalTally) {
  Rng rng(3);
  auto seq = evolving_sequence(rng, 300, 100);
  auto bytes = tml_encode(seq);
  Count packets = 0;
  for (const auto& [t, m] : seq)
    for (const auto& e : m) packets += e.count;
  auto s = tml_stats(bytes);
  EXPECT_EQ(s.total_packets, packets);
  EXPECT_EQ(s.entries, seq.size());
  EXPECT_DOUBLE_EQ(s.bits_per_packet, 8.0 * static_cast<double>(bytes.size()) / static_cast<double>(packets));
}
