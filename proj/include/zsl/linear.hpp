#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zsl/core.hpp"

namespace zsl {

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  double decision(std::span<const double> x) const;
};

// Maps a raw score s to P(+1 | s) = 1 / (1 + exp(slope * s + offset)).
// slope < 0, so probability increases with the score.
struct SigmoidCalibration {
  double slope = -1.0;
  double offset = 0.0;

  double probability(double score) const;
  double log_probability(double score) const;
};

struct LinearTrainOptions {
  double c = 1.0;
  std::uint64_t seed = 0;
  int max_epochs = 10000;
  // Training stops once (primal - dual) <= gap_tolerance * primal.
  double gap_tolerance = 1e-9;
};

struct LinearTrainReport {
  int epochs = 0;
  double primal = 0.0;
  double dual = 0.0;
  bool converged = false;
};

// L2-regularized hinge-loss linear classifier,
//   min 0.5 * (|w|^2 + b^2) + C * sum_i max(0, 1 - y_i (w.x_i + b)),
// solved by dual coordinate descent with the bias as an augmented constant
// feature. Rows of `features` are examples; labels are +1 / -1. Throws
// std::invalid_argument("degenerate binary problem") on single-sign data.
LinearModel train_binary_linear(const Matrix& features, std::span<const int> labels,
                                const LinearTrainOptions& options = {}, LinearTrainReport* report = nullptr);

// Regularized hinge objective of a given model (the quantity minimized above).
double hinge_objective(const LinearModel& model, const Matrix& features, std::span<const int> labels, double c);

// Sigmoid calibration by Newton's method on cross-entropy against the
// smoothed targets (N+ + 1)/(N+ + 2) and 1/(N- + 2). The slope is kept
// strictly negative: if the unconstrained optimum has slope >= 0 the slope is
// pinned just below zero and only the offset is refit.
SigmoidCalibration fit_sigmoid(std::span<const double> scores, std::span<const int> labels);

// Cross-entropy minimized by fit_sigmoid, exposed for tests.
double sigmoid_objective(const SigmoidCalibration& cal, std::span<const double> scores, std::span<const int> labels);

struct CalibratedBinary {
  LinearModel model;
  SigmoidCalibration calibration;
};

// Trains on the rows of `features` and calibrates on the same scores.
CalibratedBinary train_calibrated_binary(const Matrix& features, std::span<const int> labels,
                                         const LinearTrainOptions& options = {});

// One-vs-rest bank over a class set; member k scores classes[k].
struct CalibratedLinearModel {
  std::vector<int> classes;
  std::vector<CalibratedBinary> members;
  std::size_t dimension = 0;
};

// Trains one calibrated binary model per class of class_set on the labeled
// records (label +1 for the class, -1 otherwise). Independent trainings run
// on up to `jobs` threads; the result does not depend on `jobs`.
CalibratedLinearModel train_one_vs_rest(std::span<const FeatureRecord> records, std::span<const int> class_set,
                                        const LinearTrainOptions& options = {}, int jobs = 1);

// Per-class calibrated probabilities renormalized to a Posterior over
// model.classes. Throws std::invalid_argument on dimension mismatch.
Posterior predict_leaf_posterior(const CalibratedLinearModel& model, std::span<const double> x);

// Index of the largest entry, lowest index on ties.
std::size_t argmax_index(std::span<const double> values);

// Row-stochastic confusion over class_set: entry (i, j) is the add-one
// smoothed fraction of items of true class class_set[i] whose posterior
// argmax is class_set[j].
Matrix confusion_from_predictions(std::span<const int> class_set, std::span<const Posterior> predictions,
                                  std::span<const int> truth);

// Confusion of the model's argmax over a labeled set.
Matrix score_confusion_matrix(const CalibratedLinearModel& model, std::span<const FeatureRecord> labeled);

}  // namespace zsl
