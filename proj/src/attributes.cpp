#include "zsl/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "zsl/parallel.hpp"
#include "zsl/rng.hpp"

namespace zsl {

DirectAttributeBank train_direct_attribute_classifiers(std::span<const FeatureRecord> train,
                                                       const AttributeMatrix& attributes,
                                                       const LinearTrainOptions& options, int jobs) {
  const Matrix x = Matrix::from_records(train);
  const std::size_t na = attributes.cols();
  for (const auto& r : train) {
    if (!r.class_id || *r.class_id < 0 || static_cast<std::size_t>(*r.class_id) >= attributes.rows()) {
      throw std::invalid_argument("training record without attribute row: " + r.item_id);
    }
  }

  DirectAttributeBank bank;
  bank.dimension = x.cols();
  bank.attributes.resize(na);

  // Which ternary values occur per attribute over the training items.
  std::vector<std::array<bool, 3>> present(na, {false, false, false});
  for (std::size_t j = 0; j < na; ++j) {
    for (const auto& r : train) present[j][ternary_slot(attributes.value(*r.class_id, j))] = true;
    const int kinds = present[j][0] + present[j][1] + present[j][2];
    auto& clf = bank.attributes[j];
    if (kinds == 1) {
      clf.constant = true;
      for (int s = 0; s < 3; ++s) {
        if (present[j][s]) clf.constant_value = ternary_value(s);
      }
      bank.notes.push_back("attribute " + attributes.attribute_names()[j] + " is constant (" +
                           std::to_string(clf.constant_value) + ") over training classes; constant predictor used");
    }
  }

  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t j = 0; j < na; ++j) {
    if (bank.attributes[j].constant) continue;
    for (int s = 0; s < 3; ++s) {
      if (present[j][s]) tasks.emplace_back(j, s);
    }
  }
  parallel_for(tasks.size(), jobs, [&](std::size_t t) {
    const auto [j, s] = tasks[t];
    std::vector<int> y(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      y[i] = ternary_slot(attributes.value(*train[i].class_id, j)) == s ? 1 : -1;
    }
    LinearTrainOptions opt = options;
    opt.seed = derive_seed(options.seed, 1000003ULL * (j + 1) + static_cast<std::uint64_t>(s));
    bank.attributes[j].members[s] = train_calibrated_binary(x, y, opt);
    bank.attributes[j].trained[s] = true;
  });
  return bank;
}

int triple_argmax(const Triple& t) {
  int best = 0;
  for (int s = 1; s < 3; ++s) {
    if (t[s] > t[best]) best = s;
  }
  return best;
}

AttributeEstimate predict_attributes_direct(const DirectAttributeBank& bank, std::span<const double> x) {
  if (x.size() != bank.dimension) throw std::invalid_argument("feature dimension does not match attribute bank");
  AttributeEstimate est;
  est.values.resize(bank.attributes.size());
  est.confidences.resize(bank.attributes.size());
  for (std::size_t j = 0; j < bank.attributes.size(); ++j) {
    const auto& clf = bank.attributes[j];
    Triple t;
    if (clf.constant) {
      t.fill(kAttributeFloor);
      t[ternary_slot(clf.constant_value)] = 1.0 - 2.0 * kAttributeFloor;
    } else {
      double total = 0.0;
      for (int s = 0; s < 3; ++s) {
        t[s] = clf.trained[s] ? clf.members[s].calibration.probability(clf.members[s].model.decision(x)) : kAttributeFloor;
        total += t[s];
      }
      for (double& v : t) v /= total;
    }
    est.confidences[j] = t;
    est.values[j] = ternary_value(triple_argmax(t));
  }
  return est;
}

Triple indirect_confidence(double e, double tau) {
  const double mass = std::min(1.0, std::abs(e) / (2.0 * tau));
  Triple t{0.0, 1.0 - mass, 0.0};
  if (e > 0) t[2] = mass;
  else if (e < 0) t[0] = mass;
  else t[1] = 1.0;
  return t;
}

AttributeEstimate predict_attributes_indirect(const Posterior& leaf_posterior, const AttributeMatrix& attributes,
                                              double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("indirect threshold must lie in (0, 1)");
  const std::size_t na = attributes.cols();
  AttributeEstimate est;
  est.values.resize(na);
  est.confidences.resize(na);
  for (std::size_t j = 0; j < na; ++j) {
    double e = 0.0;
    for (std::size_t k = 0; k < leaf_posterior.size(); ++k) {
      e += leaf_posterior.probabilities[k] * attributes.value(static_cast<std::size_t>(leaf_posterior.class_set[k]), j);
    }
    e = std::clamp(e, -1.0, 1.0);
    est.values[j] = e >= tau ? 1 : (e <= -tau ? -1 : 0);
    est.confidences[j] = indirect_confidence(e, tau);
  }
  return est;
}

AttributeErrorModel AttributeErrorModel::permuted(std::span<const std::size_t> perm) const {
  AttributeErrorModel out;
  out.rates.resize(perm.size());
  for (std::size_t c = 0; c < perm.size(); ++c) out.rates[c] = rates.at(perm[c]);
  return out;
}

AttributeErrorModel estimate_attribute_error_model(std::span<const AttributeEstimate> predictions,
                                                   std::span<const int> truth, const AttributeMatrix& attributes) {
  if (predictions.size() != truth.size()) throw std::invalid_argument("prediction / truth length mismatch");
  const std::size_t na = attributes.cols();
  AttributeErrorModel model;
  model.rates.assign(na, {Triple{1, 1, 1}, Triple{1, 1, 1}, Triple{1, 1, 1}});
  for (std::size_t n = 0; n < predictions.size(); ++n) {
    if (predictions[n].values.size() != na) throw std::invalid_argument("estimate length does not match attributes");
    for (std::size_t j = 0; j < na; ++j) {
      const int actual = ternary_slot(attributes.value(static_cast<std::size_t>(truth[n]), j));
      model.rates[j][actual][ternary_slot(predictions[n].values[j])] += 1.0;
    }
  }
  for (auto& per_attr : model.rates) {
    for (auto& row : per_attr) {
      const double total = row[0] + row[1] + row[2];
      for (double& v : row) v /= total;
    }
  }
  return model;
}

namespace {

std::vector<int> labels_of(std::span<const FeatureRecord> records) {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.class_id) throw std::invalid_argument("unlabeled record in validation set: " + r.item_id);
    out.push_back(*r.class_id);
  }
  return out;
}

}  // namespace

AttributeErrorModel estimate_direct_error_model(const DirectAttributeBank& bank,
                                                std::span<const FeatureRecord> validation,
                                                const AttributeMatrix& attributes) {
  std::vector<AttributeEstimate> preds;
  preds.reserve(validation.size());
  for (const auto& r : validation) preds.push_back(predict_attributes_direct(bank, r.features));
  return estimate_attribute_error_model(preds, labels_of(validation), attributes);
}

AttributeErrorModel estimate_indirect_error_model(const CalibratedLinearModel& model,
                                                  std::span<const FeatureRecord> validation,
                                                  const AttributeMatrix& attributes, double tau) {
  std::vector<AttributeEstimate> preds;
  preds.reserve(validation.size());
  for (const auto& r : validation) {
    preds.push_back(predict_attributes_indirect(predict_leaf_posterior(model, r.features), attributes, tau));
  }
  return estimate_attribute_error_model(preds, labels_of(validation), attributes);
}

Posterior class_likelihoods_ml(const AttributeEstimate& estimate, const AttributeMatrix& attributes,
                               const AttributeErrorModel& error_model, std::span<const int> class_set) {
  const std::size_t na = attributes.cols();
  if (estimate.values.size() != na || error_model.attributes() != na) {
    throw std::invalid_argument("estimate / error model / attribute matrix widths differ");
  }
  std::vector<int> classes(class_set.begin(), class_set.end());
  if (classes.empty()) {
    classes.resize(attributes.rows());
    std::iota(classes.begin(), classes.end(), 0);
  }
  // Per attribute, log P(observed | true value) for the three true values.
  std::vector<Triple> log_rate(na);
  for (std::size_t j = 0; j < na; ++j) {
    const int observed = ternary_slot(estimate.values[j]);
    for (int s = 0; s < 3; ++s) log_rate[j][s] = std::log(error_model.rates[j][s][observed]);
  }
  std::vector<double> logs(classes.size(), 0.0);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto row = static_cast<std::size_t>(classes[k]);
    double acc = 0.0;
    for (std::size_t j = 0; j < na; ++j) acc += log_rate[j][ternary_slot(attributes.value(row, j))];
    logs[k] = acc;
  }
  return Posterior::from_log_weights(std::move(classes), logs);
}

int Ranking::rank_of(int class_id) const {
  for (std::size_t k = 0; k < class_set.size(); ++k) {
    if (class_set[k] == class_id) return rank[k];
  }
  throw std::invalid_argument("class not ranked: " + std::to_string(class_id));
}

std::vector<int> Ranking::top(std::size_t n) const {
  return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n, order.size()))};
}

Ranking rank_classes(const Posterior& posterior) {
  const std::size_t k = posterior.size();
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (posterior.probabilities[a] != posterior.probabilities[b]) {
      return posterior.probabilities[a] > posterior.probabilities[b];
    }
    return posterior.class_set[a] < posterior.class_set[b];
  });
  Ranking out;
  out.class_set = posterior.class_set;
  out.rank.resize(k);
  out.order.resize(k);
  for (std::size_t r = 0; r < k; ++r) {
    out.order[r] = posterior.class_set[idx[r]];
    out.rank[idx[r]] = static_cast<int>(r) + 1;
  }
  return out;
}

}  // namespace zsl
