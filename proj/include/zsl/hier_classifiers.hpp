#pragma once

#include <span>
#include <vector>

#include "zsl/core.hpp"

namespace zsl {

struct DartsParams {
  double lambda = 0.0;
  double epsilon = 0.1;
  double tolerance = 1e-6;
};

struct MaxExpParams {
  double theta = 0.0;
  double epsilon = 0.1;
};

// argmax over nodes of (reward + lambda) * p(node). Ties: deeper node, then
// lower node id.
NodePrediction darts_classify(const Hierarchy& tree, std::span<const double> node_probs, double lambda);

// argmax of reward * p(node) over nodes with p(node) > theta; the root is
// always a candidate. A maximum score of 0 yields the root. Ties as DARTS.
NodePrediction maxexp_classify(const Hierarchy& tree, std::span<const double> node_probs, double theta);

// Decides whether a predicted node counts as correct for a true class.
// Classes outside the classifying tree (novel classes against a pruned tree)
// are judged on the reference tree through the node correspondence.
class CorrectnessJudge {
 public:
  explicit CorrectnessJudge(const Hierarchy& tree) : tree_(&tree) {}
  CorrectnessJudge(const Hierarchy& tree, const Hierarchy& reference, std::vector<int> to_reference)
      : tree_(&tree), reference_(&reference), to_reference_(std::move(to_reference)) {}

  // Throws std::invalid_argument if the class is in neither tree.
  bool correct(int node_id, int true_class) const;
  const Hierarchy& tree() const { return *tree_; }

 private:
  const Hierarchy* tree_;
  const Hierarchy* reference_ = nullptr;
  std::vector<int> to_reference_;
};

struct TuningSet {
  std::vector<std::vector<double>> node_probs;  // one per item, indexed by node id
  std::vector<int> truth;
};

// Fraction of items whose predicted node is correct.
double darts_accuracy(const CorrectnessJudge& judge, const TuningSet& set, double lambda);
double maxexp_accuracy(const CorrectnessJudge& judge, const TuningSet& set, double theta);

struct TuneResult {
  double value = 0.0;
  double accuracy = 0.0;
  bool unreachable = false;  // constraint not met at the cap; value is the cap
};

constexpr double kLambdaCap = 1e6;

// Smallest lambda (to tolerance) with accuracy >= 1 - epsilon: bracket
// [0, 1], doubling the upper end until feasible or past kLambdaCap, then
// bisection.
TuneResult darts_tune_lambda(const CorrectnessJudge& judge, const TuningSet& set, double epsilon,
                             double tolerance = 1e-6);

// Candidate thresholds: 0 and every distinct node probability below 1 seen
// on the set. Returns the smallest feasible candidate, or the largest one
// with the unreachable flag.
std::vector<double> maxexp_candidates(const TuningSet& set);
TuneResult maxexp_tune_theta(const CorrectnessJudge& judge, const TuningSet& set, double epsilon);

// output_i proportional to sum_j p_j * C(i, j) / colsum_j(C): predicted mass
// redistributed over true classes. Confusion rows and columns follow the
// posterior's class set. Throws std::invalid_argument on size mismatch or a
// non-positive column.
Posterior debias_posterior(const Matrix& confusion, const Posterior& posterior);

struct TopN {
  std::vector<int> classes;
  bool clamped = false;  // requested N exceeded the ranking length
};

// First N = prediction.leaf_count entries of the ranking.
TopN topn_combine(const NodePrediction& prediction, std::span<const int> ranking);

}  // namespace zsl
