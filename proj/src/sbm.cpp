#include "fedgm/sbm.hpp"

#include <cmath>
#include <random>

#include "fedgm/random.hpp"

namespace fedgm {

SbmSpec SbmSpec::defaults() {
  SbmSpec s;
  s.block_sizes.assign(10, 60);
  return s;
}

SbmGraph sbm_generate(const SbmSpec& spec, std::uint64_t seed) {
  auto valid_p = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!valid_p(spec.intra_p) || !valid_p(spec.inter_p) || !valid_p(spec.dominant_fraction)) {
    throw Error("sbm_generate: probabilities must lie in [0, 1]");
  }
  if (spec.block_sizes.empty()) throw Error("sbm_generate: need at least one block");
  for (int s : spec.block_sizes) {
    if (s < 1) throw Error("sbm_generate: block sizes must be >= 1");
  }
  if (spec.num_classes < 1 || spec.num_features < 1) throw Error("sbm_generate: need >= 1 class and feature");

  Rng edge_rng(derive_seed(seed, {stream::kSbm, 0}));
  Rng label_rng(derive_seed(seed, {stream::kSbm, 1}));
  Rng feature_rng(derive_seed(seed, {stream::kSbm, 2}));

  SbmGraph out;
  Graph& g = out.graph;
  for (std::size_t b = 0; b < spec.block_sizes.size(); ++b) {
    out.block_of.insert(out.block_of.end(), static_cast<std::size_t>(spec.block_sizes[b]), static_cast<int>(b));
  }
  g.num_nodes = static_cast<int>(out.block_of.size());
  g.num_classes = spec.num_classes;

  std::bernoulli_distribution intra(spec.intra_p), inter(spec.inter_p);
  for (int u = 0; u < g.num_nodes; ++u) {
    for (int v = u + 1; v < g.num_nodes; ++v) {
      const bool same = out.block_of[static_cast<std::size_t>(u)] == out.block_of[static_cast<std::size_t>(v)];
      if (same ? intra(edge_rng) : inter(edge_rng)) g.edges.emplace_back(u, v);
    }
  }

  std::bernoulli_distribution keep_dominant(spec.dominant_fraction);
  g.labels.resize(static_cast<std::size_t>(g.num_nodes));
  for (int v = 0; v < g.num_nodes; ++v) {
    const int dominant = out.block_of[static_cast<std::size_t>(v)] % spec.num_classes;
    int y = dominant;
    if (spec.num_classes > 1 && !keep_dominant(label_rng)) {
      std::uniform_int_distribution<int> other(0, spec.num_classes - 2);
      y = other(label_rng);
      if (y >= dominant) ++y;
    }
    g.labels[static_cast<std::size_t>(v)] = y;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor means(spec.num_classes, spec.num_features);
  for (Index c = 0; c < means.rows(); ++c) {
    for (Index j = 0; j < means.cols(); ++j) means(c, j) = normal(feature_rng);
    means.row(c) *= spec.feature_shift / means.row(c).norm();
  }
  g.features.resize(g.num_nodes, spec.num_features);
  for (int v = 0; v < g.num_nodes; ++v) {
    for (Index j = 0; j < g.features.cols(); ++j) {
      g.features(v, j) = means(g.labels[static_cast<std::size_t>(v)], j) + normal(feature_rng);
    }
  }

  g.split.assign(static_cast<std::size_t>(g.num_nodes), Split::kNone);
  stratified_split(g, spec.train_frac, spec.val_frac, derive_seed(seed, {stream::kSbm, 3}));
  g.validate();
  return out;
}

}  // namespace fedgm
