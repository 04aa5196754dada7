#pragma once

#include <span>
#include <vector>

#include "zsl/core.hpp"

namespace zsl {

struct LinkageStep {
  int left = 0;   // cluster ids: 0..n-1 are the inputs, n+k is the k-th merge
  int right = 0;
  double distance = 0.0;
  int merged = 0;
};

// 1 - Pearson correlation, in [0, 2]. Either vector constant -> 1.
// Throws std::invalid_argument on length mismatch or length < 2.
double correlation_distance(std::span<const double> u, std::span<const double> v);

struct HierarchyBuild {
  Hierarchy tree;
  std::vector<LinkageStep> steps;
};

// Average-linkage agglomerative clustering of the attribute rows of
// class_ids (all rows when empty) under correlation distance. Ties in merge
// distance go to the pair with the smallest cluster ids. Leaves carry the
// class labels; inner nodes are named "node-k" in merge order.
HierarchyBuild build_hierarchy(const AttributeMatrix& attributes, std::span<const int> class_ids = {});

// r(v) = log2(baseline_leaves) - log2(leaf count of v) on every node.
Hierarchy annotate_rewards(const Hierarchy& tree, int baseline_leaves);

// Per-node probability: leaf probabilities from the posterior, inner nodes
// the sum over their leaves. Throws std::invalid_argument unless the
// posterior's class set equals the tree's leaf set.
std::vector<double> aggregate_posterior(const Hierarchy& tree, const Posterior& leaf_posterior);

struct PrunedHierarchy {
  Hierarchy tree;
  // source_node[v] is the node of the unpruned tree spanning exactly the
  // leaves of pruned node v (their lowest common ancestor).
  std::vector<int> source_node;
};

// Removes the given classes' leaves, collapses unary inner nodes and
// recomputes counts and rewards over the remaining leaves. Throws when
// fewer than two leaves would remain or a class is not in the tree.
PrunedHierarchy prune_novel(const Hierarchy& tree, std::span<const int> novel_classes);

// pi(y): node ids from the class's leaf up to and including the root.
std::vector<int> locate_true_node_set(const Hierarchy& tree, int class_id);

// Clade sets (sorted class lists of every inner node), sorted; equal for
// two trees exactly when their topologies agree up to sibling order.
std::vector<std::vector<int>> clade_signature(const Hierarchy& tree);

}  // namespace zsl
