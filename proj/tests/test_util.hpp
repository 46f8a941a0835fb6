#pragma once

#include <cstdint>
#include <random>

#include "fedgm/autodiff.hpp"
#include "fedgm/graph.hpp"

namespace fedgm::testing {

inline Tensor random_tensor(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(rows, cols);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = n(rng);
  return t;
}

inline Tensor make_tensor(Index rows, Index cols, std::initializer_list<double> values) {
  Tensor t(rows, cols);
  Index k = 0;
  for (double v : values) t.data()[k++] = v;
  return t;
}

/// Graph with the given edges, random features, all nodes in the training mask.
inline Graph make_graph(int n, std::vector<std::pair<int, int>> edges, std::vector<int> labels, int classes, int d,
                        std::uint64_t seed) {
  Graph g;
  g.num_nodes = n;
  g.num_classes = classes;
  g.edges = canonical_edges(std::move(edges));
  g.features = random_tensor(n, d, seed);
  g.labels = std::move(labels);
  g.split.assign(static_cast<std::size_t>(n), Split::kTrain);
  return g;
}

inline Graph path_graph(int n, int d = 2, std::uint64_t seed = 1) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return make_graph(n, e, std::vector<int>(static_cast<std::size_t>(n), 0), 2, d, seed);
}

}  // namespace fedgm::testing
