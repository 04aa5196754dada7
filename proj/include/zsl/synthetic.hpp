#pragma once

#include <cstdint>
#include <random>

#include "zsl/core.hpp"

namespace zsl::synth {

struct SynthConfig {
  int classes = 30;
  int novel = 6;
  int dim = 64;
  int attributes = 40;
  double noise = 3.0;            // isotropic feature noise (std)
  double flip_rate = 0.1;        // per-edge, per-attribute ternary step probability
  double embedding_scale = 3.0;  // norm scale of the attribute-to-feature map
  double jitter = 0.5;           // per-class prototype offset (std)
  int items_per_class = 60;
  double train_fraction = 0.90;
  double validation_fraction = 0.05;
  double test_fraction = 0.05;
  std::uint64_t seed = 1;

  // Throws std::invalid_argument on an infeasible configuration.
  void validate() const;
};

struct SyntheticData {
  SynthConfig config;
  ClassCatalog catalog;
  AttributeMatrix attributes;
  Hierarchy tree;     // generating tree over all classes
  Matrix prototypes;  // class x dim feature means
  DatasetSplit split;
};

// Random binary tree over n classes (uniform random pairwise merges).
// Leaves carry class ids 0..n-1 and labels from `labels`.
Hierarchy random_binary_tree(const std::vector<std::string>& labels, std::mt19937_64& rng);

// Deterministic in config.seed; per-class streams come from derived
// sub-seeds, so the output does not depend on execution order. Novel
// classes contribute all their items to the test split.
SyntheticData generate(const SynthConfig& config);

// Rank of the item's true class among all catalog classes under the exact
// Gaussian likelihoods of the generating model (ties to the lower index).
int oracle_bayes_rank(const SyntheticData& data, const FeatureRecord& item);

// Noiseless attribute rows that make the tree's topology recoverable by
// average-linkage correlation clustering: every edge contributes
// complementary +/- attribute pairs separating the leaves below it, as many
// as the edge's length in an ultrametric embedding of the tree.
AttributeMatrix ultrametric_attributes(const Hierarchy& tree, const std::vector<std::string>& labels);

}  // namespace zsl::synth
