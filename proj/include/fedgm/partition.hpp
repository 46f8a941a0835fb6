#pragma once

#include <cstdint>
#include <vector>

#include "fedgm/graph.hpp"

namespace fedgm {

struct PartitionAssignment {
  int num_clients = 0;
  std::vector<int> client_of;

  /// Node ids per client, ascending.
  std::vector<std::vector<int>> members() const;
};

struct LouvainTrace {
  /// Modularity after every local-moving pass, across all levels.
  std::vector<double> pass_modularity;
  int levels = 0;
  /// Community count Louvain converged to before the exact-K adjustment.
  int natural_communities = 0;
};

/// Newman modularity (resolution 1) of a node -> community map on an
/// unweighted undirected graph. Zero for an edgeless graph.
double modularity(const Graph& g, const std::vector<int>& community);

/// Two-phase Louvain (local moving + aggregation) until no node moves, then
/// coerced to exactly `k` parts: while too many, the smallest community is
/// merged into the partner it shares most edges with (ties: smaller combined
/// size, then lower id); while too few, the largest is split by a seeded
/// random balanced bisection. Client ids are ordered by smallest member node.
PartitionAssignment louvain_partition(const Graph& g, int k, std::uint64_t seed, LouvainTrace* trace = nullptr);

}  // namespace fedgm
