#include "fedgm/sbm.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

namespace fedgm {
namespace {

int components(const Graph& g) {
  std::vector<int> parent(static_cast<std::size_t>(g.num_nodes));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (auto [u, v] : g.edges) parent[find(u)] = find(v);
  int c = 0;
  for (int v = 0; v < g.num_nodes; ++v) c += find(v) == v;
  return c;
}

TEST(Sbm, DegenerateProbabilitiesGiveCliques) {
  SbmSpec s;
  s.block_sizes = {4, 5};
  s.intra_p = 1.0;
  s.inter_p = 0.0;
  const auto g = sbm_generate(s, 1).graph;
  EXPECT_EQ(g.edges.size(), 6u + 10u);
  EXPECT_EQ(components(g), 2);
}

TEST(Sbm, NoInterEdgesMeansAtLeastOneComponentPerBlock) {
  SbmSpec s = SbmSpec::defaults();
  s.inter_p = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) EXPECT_GE(components(sbm_generate(s, seed).graph), 10);
}

TEST(Sbm, EdgeCountWithinThreeSigmaOfBinomialMean) {
  const SbmSpec s = SbmSpec::defaults();
  // 10 blocks of 60: intra pairs 10 * C(60,2), inter pairs C(600,2) - intra.
  const double intra_pairs = 10.0 * 60 * 59 / 2;
  const double inter_pairs = 600.0 * 599 / 2 - intra_pairs;
  const double mean = intra_pairs * s.intra_p + inter_pairs * s.inter_p;
  const double sigma =
      std::sqrt(intra_pairs * s.intra_p * (1 - s.intra_p) + inter_pairs * s.inter_p * (1 - s.inter_p));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double m = static_cast<double>(sbm_generate(s, seed).graph.edges.size());
    EXPECT_LT(std::abs(m - mean), 3 * sigma) << "seed " << seed;
  }
}

TEST(Sbm, LabelSkewAndMasks) {
  const auto r = sbm_generate(SbmSpec::defaults(), 2);
  const Graph& g = r.graph;
  EXPECT_NO_THROW(g.validate());
  int dominant = 0;
  for (int v = 0; v < g.num_nodes; ++v) dominant += g.labels[static_cast<std::size_t>(v)] == r.block_of[static_cast<std::size_t>(v)] % 5;
  EXPECT_NEAR(dominant / 600.0, 0.7, 0.06);
  EXPECT_NEAR(g.count(Split::kTrain) / 600.0, 0.6, 0.01);
  EXPECT_NEAR(g.count(Split::kTest) / 600.0, 0.2, 0.01);
}

TEST(Sbm, InvalidProbabilities) {
  SbmSpec s = SbmSpec::defaults();
  s.intra_p = 1.5;
  EXPECT_THROW(sbm_generate(s, 1), Error);
  s = SbmSpec::defaults();
  s.block_sizes = {3, 0};
  EXPECT_THROW(sbm_generate(s, 1), Error);
}

TEST(Sbm, DeterministicGivenSeed) {
  const auto a = sbm_generate(SbmSpec::defaults(), 17).graph;
  const auto b = sbm_generate(SbmSpec::defaults(), 17).graph;
  EXPECT_EQ(a.edges, b.edges);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.split, b.split);
}

}  // namespace
}  // namespace fedgm
