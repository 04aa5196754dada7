#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "zsl/core.hpp"
#include "zsl/linear.hpp"

namespace zsl {

// Slot of a ternary value in a (-1, 0, +1) triple.
constexpr int ternary_slot(int value) { return value + 1; }
constexpr int ternary_value(int slot) { return slot - 1; }

using Triple = std::array<double, 3>;

struct AttributeEstimate {
  std::vector<int> values;          // each in {-1, 0, +1}
  std::vector<Triple> confidences;  // (-1, 0, +1) probabilities
};

// Smoothing floor given to ternary values a classifier cannot emit.
constexpr double kAttributeFloor = 1e-6;

struct TernaryAttributeClassifier {
  // A value present in training gets a calibrated value-vs-rest model.
  std::array<bool, 3> trained{false, false, false};
  std::array<CalibratedBinary, 3> members;
  bool constant = false;
  int constant_value = 0;
};

struct DirectAttributeBank {
  std::vector<TernaryAttributeClassifier> attributes;
  std::size_t dimension = 0;
  std::vector<std::string> notes;  // degenerate attributes replaced by constants
};

DirectAttributeBank train_direct_attribute_classifiers(std::span<const FeatureRecord> train,
                                                       const AttributeMatrix& attributes,
                                                       const LinearTrainOptions& options = {}, int jobs = 1);

AttributeEstimate predict_attributes_direct(const DirectAttributeBank& bank, std::span<const double> x);

// Expected attribute value under the leaf posterior, ternarized at +/- tau.
// Throws std::invalid_argument unless 0 < tau < 1.
AttributeEstimate predict_attributes_indirect(const Posterior& leaf_posterior, const AttributeMatrix& attributes,
                                              double tau = 1.0 / 3.0);

// Confidence triple for an expectation e in [-1, 1] with threshold tau:
// linear in |e|, reaching an even split with the 0 slot exactly at |e| = tau.
Triple indirect_confidence(double expectation, double tau);

// Index of the largest triple entry; lowest slot on ties.
int triple_argmax(const Triple& t);

// error[j][true slot][predicted slot], rows add-one smoothed and normalized.
struct AttributeErrorModel {
  std::vector<std::array<Triple, 3>> rates;

  std::size_t attributes() const { return rates.size(); }
  AttributeErrorModel permuted(std::span<const std::size_t> perm) const;
};

AttributeErrorModel estimate_attribute_error_model(std::span<const AttributeEstimate> predictions,
                                                   std::span<const int> truth, const AttributeMatrix& attributes);

AttributeErrorModel estimate_direct_error_model(const DirectAttributeBank& bank,
                                                std::span<const FeatureRecord> validation,
                                                const AttributeMatrix& attributes);

// Error model of the indirect route measured on its own validation
// predictions.
AttributeErrorModel estimate_indirect_error_model(const CalibratedLinearModel& model,
                                                  std::span<const FeatureRecord> validation,
                                                  const AttributeMatrix& attributes, double tau = 1.0 / 3.0);

// Posterior over class_set (all matrix rows when empty) proportional to
// prod_j error[j][v_ij][estimate_j], accumulated in log space.
Posterior class_likelihoods_ml(const AttributeEstimate& estimate, const AttributeMatrix& attributes,
                               const AttributeErrorModel& error_model, std::span<const int> class_set = {});

struct Ranking {
  std::vector<int> order;  // class ids, best first
  std::vector<int> rank;   // rank[k] is the 1-based rank of posterior.class_set[k]
  std::vector<int> class_set;

  int rank_of(int class_id) const;
  std::vector<int> top(std::size_t n) const;
};

// Descending probability, ascending class index on ties.
Ranking rank_classes(const Posterior& posterior);

}  // namespace zsl
