#pragma once

// Client-local graph condensation by one-step gradient matching.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fedgm/graph.hpp"
#include "fedgm/models.hpp"

namespace fedgm {

struct CondenseConfig {
  double ratio = 0.25;
  int epochs = 1000;
  double lr_features = 1e-2;
  double lr_phi = 1e-3;
  int gcn_hidden = 256;
  int mlp_hidden = 128;
  DistanceKind distance = DistanceKind::kCosine;
  OptimizerKind optimizer = OptimizerKind::kSgd;
};

/// A client's synthetic graph: learnable features, fixed labels, and the MLP
/// whose pairwise scores give the adjacency.
struct CondensedGraph {
  Tensor features;
  std::vector<int> labels;
  MLPAdjParams phi;
  int num_classes = 0;
  int origin_client = 0;
  double ratio = 0.0;

  int num_nodes() const { return static_cast<int>(labels.size()); }
  /// Raw sigmoid adjacency from phi (no threshold, no self-loops).
  Tensor adjacency() const;
  std::vector<int> class_histogram() const;
};

/// Condensed node count per class: largest-remainder apportionment of
/// max(round(r * n_train), classes present) over the training histogram, at
/// least one node per present class.
std::vector<int> apportion_condensed_counts(const std::vector<int>& train_histogram, double ratio);

/// Labels fixed by apportionment; feature rows sampled with replacement from
/// same-class training nodes; phi from the initialization distribution.
CondensedGraph init_condensed(const Graph& g, double ratio, int mlp_hidden, std::uint64_t seed, int client = 0);

/// Gradient of the GCN loss on the condensed graph w.r.t. theta, kept
/// differentiable w.r.t. `x` and `phi`.
GradientSet condensed_param_gradient(const GCNParams& theta, const ad::Var& x, const MLPAdjVars& phi,
                                     const std::vector<int>& labels);

/// D(grad on condensed, grad on real); `real` is treated as a constant.
ad::Var one_step_match_loss(const GCNParams& theta, const GradientSet& real, const ad::Var& x, const MLPAdjVars& phi,
                            const std::vector<int>& labels, DistanceKind kind = DistanceKind::kCosine);
/// Convenience form computing the real-graph gradient on the training mask.
ad::Var one_step_match_loss(const GCNParams& theta, const Graph& real, const CondensedGraph& s, bool track_features,
                            bool track_phi, DistanceKind kind = DistanceKind::kCosine);

struct CondenseResult {
  CondensedGraph graph;
  /// Match loss per epoch, measured before that epoch's update.
  std::vector<double> loss_history;
  /// Epoch whose state was returned (0 = initialization).
  int selected_epoch = 0;
};

/// Window of the trailing match-loss average used for checkpoint selection.
int checkpoint_window(int epochs);

/// Alternates one update of X' (odd epochs) and phi (even epochs) against a
/// freshly sampled, never-trained theta. Returns the state with the lowest
/// trailing-average loss among the final 10% of epochs.
CondenseResult condense_local(const Graph& g, const CondenseConfig& cfg, std::uint64_t seed, int client = 0);

/// Serializes with a `CONDENSED` header; the adjacency is written after
/// thresholding at `delta` as `u v w` triples with u <= v.
void write_condensed(std::ostream& out, const CondensedGraph& s, double delta);

}  // namespace fedgm
