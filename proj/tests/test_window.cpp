#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"

using namespace nftm;
using nftm::testing::Rng;

namespace {

std::vector<Entry> entries_of(const TrafficMatrix& a) { return {a.begin(), a.end()}; }

std::vector<std::pair<EpochSeconds, TrafficMatrix>> random_seconds(Rng& rng, int n, std::size_t nnz) {
  std::vector<std::pair<EpochSeconds, TrafficMatrix>> out;
  EpochSeconds t = 1000;
  for (int i = 0; i < n; ++i) {
    t += 1 + static_cast<EpochSeconds>(rng() % 3);
    out.emplace_back(t, nftm::testing::random_matrix(rng, nnz, 200, 50));
  }
  return out;
}

}  // namespace

TEST(WindowConfig, Validation) {
  EXPECT_NO_THROW((WindowConfig{1u << 17, 11}.validate()));
  EXPECT_THROW((WindowConfig{0, 3}.validate()), std::invalid_argument);
  EXPECT_THROW((WindowConfig{4, 0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((WindowConfig{1, 64}.validate()));
  EXPECT_THROW((WindowConfig{2, 64}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((WindowConfig{UINT64_MAX, 1}.validate()));
  EXPECT_THROW((WindowConfig{UINT64_MAX, 2}.validate()), std::invalid_argument);
}

TEST(PackWindows, SplitsBoundaryEntryInCanonicalOrder) {
  std::vector<std::pair<EpochSeconds, TrafficMatrix>> in{{7, matrix_from_triples({{1, 2, 3}, {5, 6, 5}})}};
  auto w = pack_windows(in, {4, 3});
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(entries_of(w[0].matrix), (std::vector<Entry>{{{1, 2}, 3}, {{5, 6}, 1}}));
  EXPECT_EQ(entries_of(w[1].matrix), (std::vector<Entry>{{{5, 6}, 4}}));
  for (const auto& x : w) {
    EXPECT_TRUE(x.complete);
    EXPECT_EQ(x.t_start, 7);
    EXPECT_EQ(x.t_end, 7);
  }
  EXPECT_EQ(w[0].seq, 0u);
  EXPECT_EQ(w[1].seq, 1u);
}

TEST(PackWindows, OneEntryCanFillSeveralWindows) {
  std::vector<std::pair<EpochSeconds, TrafficMatrix>> in{{1, matrix_from_triples({{1, 1, 10}})}};
  auto w = pack_windows(in, {3, 2});
  ASSERT_EQ(w.size(), 4u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(w[i].matrix.valid_packets(), 3u);
  EXPECT_FALSE(w[3].complete);
  EXPECT_EQ(w[3].matrix.valid_packets(), 1u);
}

TEST(PackWindows, ExactMultipleHasNoPartial) {
  std::vector<std::pair<EpochSeconds, TrafficMatrix>> in{{1, matrix_from_triples({{1, 1, 5}, {2, 2, 3}})},
                                                         {2, matrix_from_triples({{1, 1, 4}})}};
  auto w = pack_windows(in, {4, 2});
  ASSERT_EQ(w.size(), 3u);
  for (const auto& x : w) EXPECT_TRUE(x.complete);
  EXPECT_EQ(w[1].t_start, 1);
  EXPECT_EQ(w[1].t_end, 1);
  EXPECT_EQ(entries_of(w[1].matrix), (std::vector<Entry>{{{1, 1}, 1}, {{2, 2}, 3}}));
  EXPECT_EQ(w[2].t_start, 2);
  EXPECT_EQ(w[2].t_end, 2);
}

TEST(PackWindows, WindowSpanningSecondsMergesCoordinates) {
  std::vector<std::pair<EpochSeconds, TrafficMatrix>> in{{1, matrix_from_triples({{1, 1, 2}, {2, 2, 1}})},
                                                         {3, matrix_from_triples({{1, 1, 2}, {3, 3, 9}})}};
  auto w = pack_windows(in, {6, 2});
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(entries_of(w[0].matrix), (std::vector<Entry>{{{1, 1}, 4}, {{2, 2}, 1}, {{3, 3}, 1}}));
  EXPECT_EQ(w[0].t_start, 1);
  EXPECT_EQ(w[0].t_end, 3);
  EXPECT_EQ(w[1].t_start, 3);
  EXPECT_FALSE(w[2].complete);
  EXPECT_EQ(w[2].matrix.valid_packets(), 2u);
}

TEST(PackWindows, EmptyStream) { EXPECT_TRUE(pack_windows({}, {4, 2}).empty()); }

TEST(PackWindows, OutOfOrderIsAnError) {
  WindowPacker p({4, 2});
  auto sink = [](Window) {};
  p.push(10, matrix_from_triples({{1, 1, 1}}), sink);
  EXPECT_THROW(p.push(9, matrix_from_triples({{1, 1, 1}}), sink), DataError);
}

TEST(PackWindows, ExactnessAndConservationOnRandomStreams) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto seconds = random_seconds(rng, 40, 60);
    const Count leaf = 1 + rng() % 3000;
    auto w = pack_windows(seconds, {leaf, 1});
    Count in = 0, out = 0;
    for (const auto& [t, m] : seconds) in += m.valid_packets();
    for (std::size_t i = 0; i < w.size(); ++i) {
      out += w[i].matrix.valid_packets();
      ASSERT_TRUE(w[i].matrix.is_canonical());
      if (i + 1 < w.size()) ASSERT_TRUE(w[i].complete);
      if (w[i].complete) ASSERT_EQ(w[i].matrix.valid_packets(), leaf);
      if (i) ASSERT_LE(w[i - 1].t_end, w[i].t_start);
    }
    ASSERT_EQ(in, out);
    ASSERT_EQ(w.empty() || !w.back().complete, in % leaf != 0);
  }
}

TEST(BuildHierarchy, CountsPerLevel) {
  const Count nv = 1u << 17;
  std::vector<Window> leaves;
  for (std::uint64_t i = 0; i < 4; ++i) {
    Window w;
    w.seq = i;
    w.t_start = w.t_end = static_cast<EpochSeconds>(i);
    w.matrix = matrix_from_triples({{static_cast<Addr>(i), 0, nv}});
    w.complete = true;
    leaves.push_back(std::move(w));
  }
  auto all = build_hierarchy(leaves, {nv, 11});
  std::map<unsigned, std::vector<const Window*>> by_level;
  for (const auto& w : all) by_level[w.level].push_back(&w);
  ASSERT_EQ(by_level[0].size(), 4u);
  ASSERT_EQ(by_level[1].size(), 2u);
  ASSERT_EQ(by_level[2].size(), 1u);
  EXPECT_EQ(by_level.size(), 3u);
  EXPECT_EQ(by_level[1][0]->matrix.valid_packets(), 1u << 18);
  EXPECT_EQ(by_level[2][0]->matrix.valid_packets(), 1u << 19);
  // Disjoint leaves: nnz adds up.
  EXPECT_EQ(by_level[2][0]->matrix.nnz(), 4u);
  EXPECT_EQ(by_level[2][0]->t_start, 0);
  EXPECT_EQ(by_level[2][0]->t_end, 3);
}

TEST(BuildHierarchy, LevelCapStopsAggregation) {
  std::vector<Window> leaves;
  for (std::uint64_t i = 0; i < 8; ++i) {
    Window w;
    w.seq = i;
    w.matrix = matrix_from_triples({{1, 1, 2}});
    w.complete = true;
    leaves.push_back(std::move(w));
  }
  auto all = build_hierarchy(leaves, {2, 2});
  EXPECT_EQ(all.size(), 8u + 4u);
  for (const auto& w : all) EXPECT_LE(w.level, 1u);
}

TEST(BuildHierarchy, ParentsEqualFoldOfLeaves) {
  Rng rng(9);
  auto seconds = random_seconds(rng, 200, 40);
  const WindowConfig cfg{512, 5};
  auto leaves = pack_windows(seconds, cfg);
  auto all = build_hierarchy(leaves, cfg);
  for (const auto& w : all) {
    if (w.level == 0) continue;
    TrafficMatrix fold;
    const std::uint64_t span = std::uint64_t{1} << w.level;
    for (std::uint64_t i = w.seq * span; i < (w.seq + 1) * span; ++i) fold = matrix_add(fold, leaves[i].matrix);
    ASSERT_EQ(w.matrix, fold);
    ASSERT_EQ(w.matrix.valid_packets(), cfg.packets_at(w.level));
    ASSERT_EQ(w.t_start, leaves[w.seq * span].t_start);
    ASSERT_EQ(w.t_end, leaves[(w.seq + 1) * span - 1].t_end);
  }
}

TEST(BuildHierarchy, IncompleteLeafEndsAggregation) {
  HierarchyBuilder hb({2, 3});
  std::vector<Window> out;
  auto sink = [&](Window w) { out.push_back(std::move(w)); };
  Window a;
  a.matrix = matrix_from_triples({{1, 1, 2}});
  a.complete = true;
  hb.push(a, sink);
  Window b;
  b.seq = 1;
  b.matrix = matrix_from_triples({{1, 1, 1}});
  b.complete = false;
  hb.push(b, sink);
  EXPECT_EQ(out.size(), 2u);
  Window c;
  c.seq = 2;
  c.complete = true;
  EXPECT_THROW(hb.push(c, sink), std::logic_error);
}
