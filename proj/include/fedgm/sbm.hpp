#pragma once

#include <cstdint>
#include <vector>

#include "fedgm/graph.hpp"

namespace fedgm {

/// Planted-partition generator parameters. Each block b has dominant class
/// b mod num_classes; a node takes the dominant class with probability
/// dominant_fraction, otherwise a uniformly drawn other class.
struct SbmSpec {
  std::vector<int> block_sizes;
  double intra_p = 0.15;
  double inter_p = 0.004;
  int num_classes = 5;
  double dominant_fraction = 0.7;
  int num_features = 32;
  /// Norm of each class mean; features are mean + N(0, I).
  double feature_shift = 1.0;
  double train_frac = 0.6;
  double val_frac = 0.2;

  /// 10 blocks of 60 nodes, intra_p 0.15, inter_p 0.004, d 32, shift 1.0,
  /// dominant-class fraction 0.7, 5 classes.
  static SbmSpec defaults();
};

struct SbmGraph {
  Graph graph;
  std::vector<int> block_of;
};

SbmGraph sbm_generate(const SbmSpec& spec, std::uint64_t seed);

}  // namespace fedgm
