#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsl/attributes.hpp"
#include "zsl/core.hpp"
#include "zsl/hier_classifiers.hpp"

namespace zsl {

struct Outcome {
  double reward = 0.0;  // nominal bits of the prediction, counted even when wrong
  bool correct = false;
  double strict_reward() const { return correct ? reward : 0.0; }
};

// Reward of the node and whether it lies on the true class's root path.
// Throws std::invalid_argument if the class is not a leaf of the tree.
Outcome info_gain_node(const Hierarchy& tree, int node_id, int true_class);
Outcome info_gain_node(const CorrectnessJudge& judge, int node_id, int true_class);

// log2(baseline) - log2(rank). Throws std::invalid_argument for rank < 1.
double info_gain_rank(int rank, int baseline);

// 1 - mean(rank) / baseline.
double mra_flat(std::span<const double> ranks, int baseline);

// Effective rank of a hierarchical prediction: max(1, n/2) when correct,
// n + (baseline - n)/2 otherwise, with n the node's leaf count.
double mra_hierarchical_rank(const CorrectnessJudge& judge, int node_id, int true_class, int baseline);

// Correct iff the class is in the list; reward log2(baseline) - log2(N).
Outcome topn_eval(std::span<const int> top, int true_class, int baseline);

enum class HierMethod { darts, maxexp };
std::string method_name(HierMethod m);

struct EvalItem {
  std::string item_id;
  int true_class = kNoClass;
  bool novel = false;
};

struct EvalRecord {
  std::string item_id;
  int true_class = kNoClass;
  bool novel = false;
  std::string method;
  std::string posterior_source;
  double param = 0.0;
  int predicted_node = kNoNode;  // hierarchical methods
  int prediction_size = 0;       // leaf count or top-N length or rank
  int leaf_baseline = 0;
  double reward = 0.0;
  bool correct = false;
};

struct CurvePoint {
  double param = 0.0;
  double accuracy = 0.0;
  double reward_strict = 0.0;
  double reward_nominal = 0.0;
  std::size_t n_items = 0;
};

struct SweepCurve {
  std::string method;
  std::string posterior_source;
  std::string subset;  // "non-novel" or "novel"
  std::vector<CurvePoint> points;
  bool empty() const { return points.empty() || points.front().n_items == 0; }
};

struct SweepInput {
  const CorrectnessJudge* judge = nullptr;
  std::string posterior_source;
  std::vector<std::vector<double>> node_probs;  // per item
  std::vector<EvalItem> items;
  // Attribute ranking per item (class ids, best first); enables TOPN curves.
  const std::vector<std::vector<int>>* rankings = nullptr;
};

// Evaluates the method over a strictly increasing parameter grid and returns
// the non-novel and novel curves (plus the two TOPN curves when rankings are
// given). An empty subset still yields a curve whose points carry n_items 0.
// Per-item records are appended to `records` when non-null.
std::vector<SweepCurve> sweep(HierMethod method, std::span<const double> grid, const SweepInput& input,
                              std::vector<EvalRecord>* records = nullptr);

// Reward of the curve at a given accuracy by linear interpolation between
// points ordered by accuracy; nullopt outside the curve's accuracy range.
std::optional<double> reward_at_accuracy(const SweepCurve& curve, double accuracy, bool strict = true);

}  // namespace zsl
