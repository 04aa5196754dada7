#include "zsl/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "zsl/kernels.hpp"
#include "zsl/parallel.hpp"
#include "zsl/rng.hpp"

namespace zsl {

double LinearModel::decision(std::span<const double> x) const { return kernels::dot(weights, x) + bias; }

namespace {

// log(1 + exp(f)) without overflow.
double log1p_exp(double f) { return f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f)); }

}  // namespace

double SigmoidCalibration::probability(double score) const {
  const double f = slope * score + offset;
  return f >= 0.0 ? std::exp(-f) / (1.0 + std::exp(-f)) : 1.0 / (1.0 + std::exp(f));
}

double SigmoidCalibration::log_probability(double score) const { return -log1p_exp(slope * score + offset); }

double hinge_objective(const LinearModel& model, const Matrix& features, std::span<const int> labels, double c) {
  double loss = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    loss += std::max(0.0, 1.0 - labels[i] * model.decision(features.row(i)));
  }
  return 0.5 * (kernels::dot(model.weights, model.weights) + model.bias * model.bias) + c * loss;
}

LinearModel train_binary_linear(const Matrix& features, std::span<const int> labels, const LinearTrainOptions& options,
                                LinearTrainReport* report) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (labels.size() != n) throw std::invalid_argument("label count does not match example count");
  if (!(options.c > 0.0)) throw std::invalid_argument("regularization C must be positive");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y == 1) has_pos = true;
    else if (y == -1) has_neg = true;
    else throw std::invalid_argument("binary labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw std::invalid_argument("degenerate binary problem");

  std::vector<double> qdiag(n);
  for (std::size_t i = 0; i < n; ++i) qdiag[i] = kernels::dot(features.row(i), features.row(i)) + 1.0;

  LinearModel model;
  model.weights.assign(d, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(options.seed);
  const double c = options.c;

  // Dual coordinate descent with shrinking: bound variables whose projected
  // gradient points outside the box are skipped until the next full pass.
  // Termination is decided only by the duality gap over all examples.
  LinearTrainReport rep;
  std::vector<std::size_t> active(order);
  double pg_max_old = INFINITY, pg_min_old = -INFINITY;
  auto full_gap_met = [&] {
    const double norm2 = kernels::dot(model.weights, model.weights) + model.bias * model.bias;
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) hinge += std::max(0.0, 1.0 - labels[i] * model.decision(features.row(i)));
    rep.primal = 0.5 * norm2 + c * hinge;
    rep.dual = std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * norm2;
    return rep.primal - rep.dual <= options.gap_tolerance * std::max(rep.primal, 1e-300);
  };
  constexpr int kCheckEvery = 10;
  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    rep.epochs = epoch;
    std::shuffle(active.begin(), active.end(), rng);
    double pg_max = -INFINITY, pg_min = INFINITY;
    std::size_t kept = 0;
    for (std::size_t s = 0; s < active.size(); ++s) {
      const std::size_t i = active[s];
      const auto xi = features.row(i);
      const double yi = labels[i];
      const double g = yi * (kernels::dot(model.weights, xi) + model.bias) - 1.0;
      double pg = 0.0;
      if (alpha[i] == 0.0) {
        if (g > pg_max_old) continue;  // shrink
        if (g < 0.0) pg = g;
      } else if (alpha[i] == c) {
        if (g < pg_min_old) continue;  // shrink
        if (g > 0.0) pg = g;
      } else {
        pg = g;
      }
      active[kept++] = i;
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qdiag[i], 0.0, c);
      const double delta = (alpha[i] - old) * yi;
      if (delta != 0.0) {
        kernels::axpy(delta, xi, model.weights);
        model.bias += delta;
      }
    }
    active.resize(kept);
    const bool stalled = active.empty() || pg_max - pg_min <= 1e-12;
    if (stalled || epoch % kCheckEvery == 0 || epoch == options.max_epochs) {
      if (full_gap_met()) {
        rep.converged = true;
        break;
      }
    }
    if (stalled) {
      active = order;
      pg_max_old = INFINITY;
      pg_min_old = -INFINITY;
    } else {
      pg_max_old = pg_max <= 0.0 ? INFINITY : pg_max;
      pg_min_old = pg_min >= 0.0 ? -INFINITY : pg_min;
    }
  }
  if (report) *report = rep;
  return model;
}

double sigmoid_objective(const SigmoidCalibration& cal, std::span<const double> scores, std::span<const int> labels) {
  double prior1 = 0, prior0 = 0;
  for (int y : labels) (y > 0 ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  double f = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double t = labels[i] > 0 ? hi : lo;
    const double z = cal.slope * scores[i] + cal.offset;
    // -[t log p + (1-t) log(1-p)] with p = 1/(1+exp(z))
    f += t * log1p_exp(z) + (1.0 - t) * log1p_exp(-z);
  }
  return f;
}

SigmoidCalibration fit_sigmoid(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  if (labels.size() != n) throw std::invalid_argument("score / label length mismatch");
  {
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::unique(sorted.begin(), sorted.end()) - sorted.begin() < 2) throw std::invalid_argument("uncalibratable");
  }
  double prior1 = 0, prior0 = 0;
  for (int y : labels) (y > 0 ? prior1 : prior0) += 1.0;
  if (prior1 == 0 || prior0 == 0) throw std::invalid_argument("uncalibratable");

  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] > 0 ? hi : lo;

  constexpr int kMaxIter = 200;
  constexpr double kMinStep = 1e-12;
  constexpr double kSigma = 1e-12;
  constexpr double kEps = 1e-11;

  // Newton iterations on (slope, offset) or, when fit_slope is false, on the
  // offset alone.
  auto newton = [&](SigmoidCalibration cal, bool fit_slope) {
    double fval = sigmoid_objective(cal, scores, labels);
    for (int iter = 0; iter < kMaxIter; ++iter) {
      double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double z = cal.slope * scores[i] + cal.offset;
        double p, q;
        if (z >= 0) {
          p = std::exp(-z) / (1.0 + std::exp(-z));
          q = 1.0 / (1.0 + std::exp(-z));
        } else {
          p = 1.0 / (1.0 + std::exp(z));
          q = std::exp(z) / (1.0 + std::exp(z));
        }
        const double d2 = p * q;
        h11 += scores[i] * scores[i] * d2;
        h22 += d2;
        h21 += scores[i] * d2;
        const double d1 = t[i] - p;
        g1 += scores[i] * d1;
        g2 += d1;
      }
      if (!fit_slope) {
        g1 = 0.0;
        h21 = 0.0;
      }
      if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;
      double da, db;
      if (fit_slope) {
        const double det = h11 * h22 - h21 * h21;
        da = -(h22 * g1 - h21 * g2) / det;
        db = -(-h21 * g1 + h11 * g2) / det;
      } else {
        da = 0.0;
        db = -g2 / h22;
      }
      const double gd = g1 * da + g2 * db;
      double step = 1.0;
      bool moved = false;
      while (step >= kMinStep) {
        SigmoidCalibration trial{cal.slope + step * da, cal.offset + step * db};
        const double fnew = sigmoid_objective(trial, scores, labels);
        if (fnew < fval + 1e-4 * step * gd) {
          cal = trial;
          fval = fnew;
          moved = true;
          break;
        }
        step /= 2.0;
      }
      if (!moved) break;
    }
    return cal;
  };

  SigmoidCalibration cal{0.0, std::log((prior0 + 1.0) / (prior1 + 1.0))};
  cal = newton(cal, true);
  constexpr double kMaxSlope = -1e-9;
  if (!(cal.slope <= kMaxSlope)) {
    cal.slope = kMaxSlope;
    cal = newton(cal, false);
  }
  return cal;
}

CalibratedBinary train_calibrated_binary(const Matrix& features, std::span<const int> labels,
                                         const LinearTrainOptions& options) {
  CalibratedBinary out;
  out.model = train_binary_linear(features, labels, options);
  std::vector<double> scores(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) scores[i] = out.model.decision(features.row(i));
  out.calibration = fit_sigmoid(scores, labels);
  return out;
}

CalibratedLinearModel train_one_vs_rest(std::span<const FeatureRecord> records, std::span<const int> class_set,
                                        const LinearTrainOptions& options, int jobs) {
  const Matrix x = Matrix::from_records(records);
  for (const auto& r : records) {
    if (!r.class_id) throw std::invalid_argument("unlabeled record in training set: " + r.item_id);
  }
  CalibratedLinearModel out;
  out.classes.assign(class_set.begin(), class_set.end());
  out.members.resize(class_set.size());
  out.dimension = x.cols();
  parallel_for(class_set.size(), jobs, [&](std::size_t k) {
    std::vector<int> y(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) y[i] = *records[i].class_id == class_set[k] ? 1 : -1;
    LinearTrainOptions opt = options;
    opt.seed = derive_seed(options.seed, static_cast<std::uint64_t>(class_set[k]));
    out.members[k] = train_calibrated_binary(x, y, opt);
  });
  return out;
}

Posterior predict_leaf_posterior(const CalibratedLinearModel& model, std::span<const double> x) {
  if (x.size() != model.dimension) {
    throw std::invalid_argument("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                                std::to_string(model.dimension));
  }
  std::vector<double> logs(model.members.size());
  for (std::size_t k = 0; k < logs.size(); ++k) {
    const auto& m = model.members[k];
    logs[k] = m.calibration.log_probability(m.model.decision(x));
  }
  return Posterior::from_log_weights(model.classes, logs);
}

std::size_t argmax_index(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Matrix confusion_from_predictions(std::span<const int> class_set, std::span<const Posterior> predictions,
                                  std::span<const int> truth) {
  const std::size_t k = class_set.size();
  if (predictions.size() != truth.size()) throw std::invalid_argument("prediction / truth length mismatch");
  auto position = [&](int cls) -> std::size_t {
    const auto it = std::find(class_set.begin(), class_set.end(), cls);
    if (it == class_set.end()) throw std::invalid_argument("class outside confusion class set: " + std::to_string(cls));
    return static_cast<std::size_t>(it - class_set.begin());
  };
  Matrix counts(k, k, 1.0);
  for (std::size_t n = 0; n < predictions.size(); ++n) {
    const std::size_t i = position(truth[n]);
    const std::size_t j = position(predictions[n].class_set[argmax_index(predictions[n].probabilities)]);
    counts(i, j) += 1.0;
  }
  for (std::size_t i = 0; i < k; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += counts(i, j);
    for (std::size_t j = 0; j < k; ++j) counts(i, j) /= total;
  }
  return counts;
}

Matrix score_confusion_matrix(const CalibratedLinearModel& model, std::span<const FeatureRecord> labeled) {
  std::vector<Posterior> preds;
  std::vector<int> truth;
  preds.reserve(labeled.size());
  for (const auto& r : labeled) {
    if (!r.class_id) throw std::invalid_argument("unlabeled record in confusion set: " + r.item_id);
    preds.push_back(predict_leaf_posterior(model, r.features));
    truth.push_back(*r.class_id);
  }
  return confusion_from_predictions(model.classes, preds, truth);
}

}  // namespace zsl
