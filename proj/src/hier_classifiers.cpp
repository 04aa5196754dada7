#include "zsl/hier_classifiers.hpp"

#include <algorithm>
#include <stdexcept>

namespace zsl {

namespace {

// True if candidate a beats incumbent b at equal score.
bool wins_tie(const Hierarchy& tree, int a, int b) {
  const int da = tree.node(a).depth;
  const int db = tree.node(b).depth;
  return da != db ? da > db : a < b;
}

void check_probs(const Hierarchy& tree, std::span<const double> node_probs) {
  if (node_probs.size() != tree.size()) throw std::invalid_argument("node probabilities do not cover the hierarchy");
}

}  // namespace

NodePrediction darts_classify(const Hierarchy& tree, std::span<const double> node_probs, double lambda) {
  check_probs(tree, node_probs);
  int best = tree.root();
  double best_score = (tree.node(best).reward + lambda) * node_probs[best];
  for (const auto& nd : tree.nodes()) {
    const double score = (nd.reward + lambda) * node_probs[nd.id];
    if (score > best_score || (score == best_score && wins_tie(tree, nd.id, best))) {
      best = nd.id;
      best_score = score;
    }
  }
  return NodePrediction::of(tree, best);
}

NodePrediction maxexp_classify(const Hierarchy& tree, std::span<const double> node_probs, double theta) {
  check_probs(tree, node_probs);
  int best = tree.root();
  double best_score = 0.0;
  for (const auto& nd : tree.nodes()) {
    if (nd.id == tree.root() || !(node_probs[nd.id] > theta)) continue;
    const double score = nd.reward * node_probs[nd.id];
    if (score > best_score || (score == best_score && score > 0.0 && wins_tie(tree, nd.id, best))) {
      best = nd.id;
      best_score = score;
    }
  }
  return NodePrediction::of(tree, best);
}

bool CorrectnessJudge::correct(int node_id, int true_class) const {
  const int leaf = tree_->leaf_of(true_class);
  if (leaf != kNoNode) return tree_->is_ancestor_or_self(node_id, leaf);
  if (reference_) {
    const int ref_leaf = reference_->leaf_of(true_class);
    if (ref_leaf != kNoNode) return reference_->is_ancestor_or_self(to_reference_.at(node_id), ref_leaf);
  }
  throw std::invalid_argument("true class not in evaluation hierarchy: " + std::to_string(true_class));
}

double darts_accuracy(const CorrectnessJudge& judge, const TuningSet& set, double lambda) {
  if (set.truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.truth.size(); ++i) {
    hits += judge.correct(darts_classify(judge.tree(), set.node_probs[i], lambda).node_id, set.truth[i]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(set.truth.size());
}

double maxexp_accuracy(const CorrectnessJudge& judge, const TuningSet& set, double theta) {
  if (set.truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.truth.size(); ++i) {
    hits += judge.correct(maxexp_classify(judge.tree(), set.node_probs[i], theta).node_id, set.truth[i]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(set.truth.size());
}

namespace {

bool meets(double accuracy, double epsilon) { return accuracy >= 1.0 - epsilon - 1e-12; }

}  // namespace

TuneResult darts_tune_lambda(const CorrectnessJudge& judge, const TuningSet& set, double epsilon, double tolerance) {
  if (set.truth.empty()) throw std::invalid_argument("empty tuning set");
  const double at_zero = darts_accuracy(judge, set, 0.0);
  if (meets(at_zero, epsilon)) return {0.0, at_zero, false};

  double lo = 0.0;
  double hi = 1.0;
  double acc_hi = darts_accuracy(judge, set, hi);
  while (!meets(acc_hi, epsilon)) {
    lo = hi;
    hi *= 2.0;
    if (hi > kLambdaCap) {
      const double acc_cap = darts_accuracy(judge, set, kLambdaCap);
      return {kLambdaCap, acc_cap, !meets(acc_cap, epsilon)};
    }
    acc_hi = darts_accuracy(judge, set, hi);
  }
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    const double acc = darts_accuracy(judge, set, mid);
    if (meets(acc, epsilon)) {
      hi = mid;
      acc_hi = acc;
    } else {
      lo = mid;
    }
  }
  return {hi, acc_hi, false};
}

std::vector<double> maxexp_candidates(const TuningSet& set) {
  std::vector<double> out{0.0};
  for (const auto& probs : set.node_probs) {
    for (double p : probs) {
      if (p > 0.0 && p < 1.0) out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TuneResult maxexp_tune_theta(const CorrectnessJudge& judge, const TuningSet& set, double epsilon) {
  if (set.truth.empty()) throw std::invalid_argument("empty tuning set");
  const auto candidates = maxexp_candidates(set);
  for (double theta : candidates) {
    const double acc = maxexp_accuracy(judge, set, theta);
    if (meets(acc, epsilon)) return {theta, acc, false};
  }
  const double last = candidates.back();
  return {last, maxexp_accuracy(judge, set, last), true};
}

Posterior debias_posterior(const Matrix& confusion, const Posterior& posterior) {
  const std::size_t k = posterior.size();
  if (confusion.rows() != k || confusion.cols() != k) {
    throw std::invalid_argument("confusion matrix is not aligned with the posterior class set");
  }
  std::vector<double> colsum(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) colsum[j] += confusion(i, j);
  }
  for (double c : colsum) {
    if (!(c > 0.0)) throw std::invalid_argument("confusion matrix has a non-positive column");
  }
  std::vector<double> out(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double scaled = posterior.probabilities[j] / colsum[j];
    if (scaled == 0.0) continue;
    for (std::size_t i = 0; i < k; ++i) out[i] += scaled * confusion(i, j);
  }
  return Posterior::normalized(posterior.class_set, std::move(out));
}

TopN topn_combine(const NodePrediction& prediction, std::span<const int> ranking) {
  const auto n = static_cast<std::size_t>(std::max(prediction.leaf_count, 1));
  TopN out;
  out.clamped = n > ranking.size();
  out.classes.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(std::min(n, ranking.size())));
  return out;
}

}  // namespace zsl
