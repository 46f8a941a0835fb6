#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fedgm/autodiff.hpp"

namespace fedgm {

enum class Split : std::uint8_t { kNone, kTrain, kVal, kTest };

const char* split_name(Split s);

/// Undirected, unweighted node-classification graph. Edges are stored once per
/// pair as (u, v) with u < v, sorted, without self-loops. Each node carries one
/// Split tag, which makes the train/val/test masks disjoint by construction.
struct Graph {
  int num_nodes = 0;
  int num_classes = 0;
  std::vector<std::pair<int, int>> edges;
  Tensor features;
  std::vector<int> labels;
  std::vector<Split> split;

  int num_features() const { return static_cast<int>(features.cols()); }
  Mask mask(Split s) const;
  Mask train_mask() const { return mask(Split::kTrain); }
  Mask val_mask() const { return mask(Split::kVal); }
  Mask test_mask() const { return mask(Split::kTest); }
  int count(Split s) const;
  /// Neighbor lists built from the edge list.
  std::vector<std::vector<int>> adjacency_lists() const;

  /// Throws Error on any broken invariant.
  void validate() const;
};

struct CondensedHeader {
  int client = 0;
  double ratio = 0.0;
};

struct LoadResult {
  Graph graph;
  int dropped_self_loops = 0;
  int dropped_duplicates = 0;
  // Only filled for condensed files, which carry a `CONDENSED` header line and
  // a weighted `u v w` edge list (u <= v, diagonal included).
  std::optional<CondensedHeader> condensed;
  std::vector<std::tuple<int, int, double>> weighted_edges;
};

/// Parses the line-oriented `GRAPH v1` text format.
LoadResult parse_graph(std::istream& in);
LoadResult load_graph(const std::filesystem::path& path);
void write_graph(std::ostream& out, const Graph& g);
void save_graph(const std::filesystem::path& path, const Graph& g);
/// Writes a condensed graph: `g` supplies features/labels/masks, the
/// adjacency comes from `weighted_edges`.
void write_condensed_graph(std::ostream& out, const Graph& g, const CondensedHeader& header,
                           const std::vector<std::tuple<int, int, double>>& weighted_edges);

/// Sorts, drops self-loops and duplicate pairs; counts what was dropped.
std::vector<std::pair<int, int>> canonical_edges(std::vector<std::pair<int, int>> raw, int* self_loops = nullptr,
                                                 int* duplicates = nullptr);

/// D^-1/2 (A + I) D^-1/2 as a sparse matrix.
SparseTensor normalized_adjacency(const Graph& g);
Tensor normalized_adjacency_dense(const Graph& g);

/// Subgraph on `nodes` relabelled to [0, |nodes|) in the given order; only
/// edges with both endpoints inside survive.
Graph induce_subgraph(const Graph& g, std::span<const int> nodes);

/// Class-c training nodes plus their 1-hop neighbors. In the result only the
/// class-c training nodes are tagged kTrain (the loss mask); all others kNone.
Graph class_neighborhood_subgraph(const Graph& g, int c);

/// Re-tags labelled nodes train/val/test per class: for each class the nodes
/// are shuffled, the first round(train_frac*n) become train, the next
/// round(val_frac*n) val, the rest test.
void stratified_split(Graph& g, double train_frac, double val_frac, std::uint64_t seed);

}  // namespace fedgm
