#pragma once

// 2-layer GCN, the pairwise MLP that parameterizes a condensed adjacency, and
// the gradient-set distance used for matching.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedgm/autodiff.hpp"
#include "fedgm/graph.hpp"
#include "fedgm/random.hpp"

namespace fedgm {

/// Ordered named tensors: a model's parameters, or plain gradient values.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  std::size_t size() const { return tensors.size(); }
  bool same_layout(const ParamSet& other) const;
  /// Total scalar count (8 bytes each on the wire).
  Index scalar_count() const;
  double squared_norm() const;
};

/// Ordered named gradient nodes; may still be differentiable.
struct GradientSet {
  std::vector<std::string> names;
  std::vector<ad::Var> tensors;

  std::size_t size() const { return tensors.size(); }
  bool same_layout(const GradientSet& other) const;
  ParamSet values() const;
  static GradientSet constants(const ParamSet& p);
};

/// sum_i w_i * sets_i; all layouts must agree.
ParamSet weighted_sum(std::span<const ParamSet> sets, std::span<const double> weights);

/// Uniform on +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Index fan_in, Index fan_out, Rng& rng);

struct GCNParams {
  Tensor w1;  // d x h
  Tensor w2;  // h x C

  ParamSet to_set() const;
  static GCNParams from_set(const ParamSet& p);
  /// Sample from the initialization distribution; a pure function of the arguments.
  static GCNParams sample(int in_dim, int hidden, int classes, std::uint64_t seed);
};

struct MLPAdjParams {
  Tensor w1, b1;  // 2d x h, 1 x h
  Tensor w2, b2;  // h x h, 1 x h
  Tensor w3, b3;  // h x 1, 1 x 1

  int feature_dim() const { return static_cast<int>(w1.rows() / 2); }
  ParamSet to_set() const;
  static MLPAdjParams from_set(const ParamSet& p);
  /// Glorot-uniform weights, zero biases.
  static MLPAdjParams sample(int feature_dim, int hidden, std::uint64_t seed);
};

struct GCNVars {
  ad::Var w1, w2;
  static GCNVars leaves(const GCNParams& p);
  static GCNVars constants(const GCNParams& p);
  std::vector<ad::Var> list() const { return {w1, w2}; }
};

struct MLPAdjVars {
  ad::Var w1, b1, w2, b2, w3, b3;
  static MLPAdjVars leaves(const MLPAdjParams& p);
  static MLPAdjVars constants(const MLPAdjParams& p);
  std::vector<ad::Var> list() const { return {w1, b1, w2, b2, w3, b3}; }
  MLPAdjParams values() const;
};

/// Normalized propagation matrix: a dense node (condensed graphs, possibly
/// differentiable) or a constant sparse operator (real graphs).
using Adjacency = std::variant<ad::Var, ad::SparseOperator>;

Index adjacency_size(const Adjacency& a);
ad::Var propagate(const Adjacency& a, const ad::Var& h);

/// logits = A relu(A X W1) W2 (no biases, no output activation).
ad::Var gcn_forward(const GCNVars& p, const Adjacency& a, const ad::Var& x);
Tensor gcn_logits(const GCNParams& p, const Adjacency& a, const Tensor& x);

/// A'_ij = sigmoid((MLP([x_i; x_j]) + MLP([x_j; x_i])) / 2), ReLU hidden layers.
ad::Var mlp_adjacency(const MLPAdjVars& phi, const ad::Var& x);
Tensor mlp_adjacency(const MLPAdjParams& phi, const Tensor& x);

/// D^-1/2 (A + I) D^-1/2 for a dense non-negative adjacency; differentiable.
ad::Var normalize_dense_adjacency(const ad::Var& a);
Tensor normalize_dense_adjacency(const Tensor& a);

/// Entries strictly below delta are zeroed.
Tensor threshold_adjacency(const Tensor& a, double delta);
/// Thresholded at delta, then self-loops and symmetric normalization.
Tensor densify_for_training(const Tensor& a, double delta);

/// d CE(gcn(a, x)[mask], labels[mask]) / d(W1, W2). With create_graph the
/// result stays differentiable w.r.t. x (and anything x depends on).
GradientSet param_gradient(const GCNParams& p, const Adjacency& a, const ad::Var& x, std::span<const int> labels,
                           const Mask& mask, bool create_graph = false);

enum class DistanceKind { kCosine, kSquaredL2 };

/// kCosine: sum over every output column of every tensor of (1 - cos);
/// a column where either side has norm < 1e-12 contributes ||a - b||^2.
/// kSquaredL2: plain sum of squared differences.
ad::Var gradient_distance(const GradientSet& a, const GradientSet& b, DistanceKind kind = DistanceKind::kCosine);

enum class OptimizerKind { kSgd, kAdam };

struct TrainOptions {
  int epochs = 300;
  double lr = 1e-2;
  double weight_decay = 5e-4;
  int hidden = 256;
  OptimizerKind optimizer = OptimizerKind::kAdam;
};

struct TrainResult {
  GCNParams params;
  std::vector<double> loss_history;
};

/// Full-batch training from `init` with L2 weight decay added to the gradient.
TrainResult fit_gcn(GCNParams init, const Adjacency& a, const Tensor& x, std::span<const int> labels,
                    const Mask& mask, const TrainOptions& opt);

/// fit_gcn from a fresh sample of the initialization distribution.
TrainResult train_gcn(const Adjacency& a, const Tensor& x, std::span<const int> labels, const Mask& mask,
                      int num_classes, const TrainOptions& opt, std::uint64_t seed);

/// Argmax per row, ties to the lowest class id.
std::vector<int> predict(const GCNParams& p, const Adjacency& a, const Tensor& x);

/// Fraction of masked nodes predicted correctly (0 for an empty mask).
double evaluate_accuracy(const GCNParams& p, const Adjacency& a, const Tensor& x, std::span<const int> labels,
                         const Mask& mask);
double evaluate_accuracy(const GCNParams& p, const Graph& g, const Mask& mask);

}  // namespace fedgm
