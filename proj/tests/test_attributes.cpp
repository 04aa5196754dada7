#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "zsl/attributes.hpp"

using namespace zsl;

namespace {

AttributeMatrix matrix_of(int rows, int cols, const std::vector<double>& values) {
  std::vector<std::string> labels, names;
  for (int r = 0; r < rows; ++r) labels.push_back(testing::label_of(r));
  for (int c = 0; c < cols; ++c) names.push_back("a" + std::to_string(c));
  return AttributeMatrix(labels, names, values);
}

AttributeMatrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_int_distribution<int> t(-1, 1);
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (auto& x : v) x = t(rng);
  return matrix_of(rows, cols, v);
}

AttributeErrorModel random_error_model(std::mt19937_64& rng, int cols) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  AttributeErrorModel m;
  m.rates.resize(cols);
  for (auto& a : m.rates) {
    for (auto& row : a) {
      double s = 0;
      for (auto& x : row) s += (x = u(rng));
      for (auto& x : row) x /= s;
    }
  }
  return m;
}

AttributeEstimate estimate_of(const std::vector<int>& values) {
  AttributeEstimate e;
  e.values = values;
  for (int v : values) {
    Triple t{0, 0, 0};
    t[ternary_slot(v)] = 1.0;
    e.confidences.push_back(t);
  }
  return e;
}

}  // namespace

TEST_CASE("ML likelihoods match the brute-force product") {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 200; ++round) {
    const int classes = std::uniform_int_distribution<int>(2, 4)(rng);
    const int attrs = std::uniform_int_distribution<int>(1, 4)(rng);
    const auto m = random_matrix(rng, classes, attrs);
    const auto err = random_error_model(rng, attrs);
    std::vector<int> obs(attrs);
    for (auto& v : obs) v = std::uniform_int_distribution<int>(-1, 1)(rng);
    const auto post = class_likelihoods_ml(estimate_of(obs), m, err);
    const auto ref = oracle::ml_posterior(estimate_of(obs), m, err);
    REQUIRE(post.size() == static_cast<std::size_t>(classes));
    for (int i = 0; i < classes; ++i) {
      CHECK(post.class_set[i] == i);
      CHECK(std::abs(post.probabilities[i] - ref[i]) <= 1e-12 * ref[i]);
    }
  }
}

TEST_CASE("near-identity error model concentrates on the matching class") {
  const double eps = 1e-3;
  AttributeErrorModel err;
  err.rates.resize(3);
  for (auto& a : err.rates) {
    for (int t = 0; t < 3; ++t) {
      for (int p = 0; p < 3; ++p) a[t][p] = t == p ? 1 - 2 * eps : eps;
    }
  }
  // class 1 differs from class 0 in one attribute, class 2 in two
  const auto m = matrix_of(3, 3, {1, 0, -1, 1, 0, 1, 1, 1, 1});
  const auto post = class_likelihoods_ml(estimate_of({1, 0, -1}), m, err);
  const double ratio = (1 - 2 * eps) / eps;
  CHECK(post.probabilities[0] / post.probabilities[1] == doctest::Approx(ratio).epsilon(1e-12));
  CHECK(post.probabilities[0] / post.probabilities[2] == doctest::Approx(ratio * ratio).epsilon(1e-12));
}

TEST_CASE("uniform error model and identical rows") {
  std::mt19937_64 rng(3);
  AttributeErrorModel uniform;
  uniform.rates.assign(4, {Triple{1. / 3, 1. / 3, 1. / 3}, Triple{1. / 3, 1. / 3, 1. / 3},
                           Triple{1. / 3, 1. / 3, 1. / 3}});
  const auto m = random_matrix(rng, 5, 4);
  const auto post = class_likelihoods_ml(estimate_of({1, -1, 0, 1}), m, uniform);
  for (double p : post.probabilities) CHECK(p == doctest::Approx(0.2).epsilon(1e-12));

  auto twin = matrix_of(3, 2, {1, -1, 1, -1, 0, 0});
  const auto err = random_error_model(rng, 2);
  const auto q = class_likelihoods_ml(estimate_of({1, 0}), twin, err);
  CHECK(q.probabilities[0] == q.probabilities[1]);
}

TEST_CASE("class subset restricts the posterior") {
  std::mt19937_64 rng(4);
  const auto m = random_matrix(rng, 6, 3);
  const auto err = random_error_model(rng, 3);
  const std::vector<int> subset{1, 4, 5};
  const auto est = estimate_of({1, 0, -1});
  const auto part = class_likelihoods_ml(est, m, err, subset);
  const auto full = class_likelihoods_ml(est, m, err);
  CHECK(part.class_set == subset);
  double s = 0;
  for (int k : subset) s += full.probability_of(k);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    CHECK(part.probabilities[i] == doctest::Approx(full.probability_of(subset[i]) / s).epsilon(1e-12));
  }
}

TEST_CASE("consistent attribute permutation leaves likelihoods unchanged") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 50; ++round) {
    const int attrs = 6;
    const auto m = random_matrix(rng, 5, attrs);
    const auto err = random_error_model(rng, attrs);
    std::vector<int> obs(attrs);
    for (auto& v : obs) v = std::uniform_int_distribution<int>(-1, 1)(rng);
    std::vector<std::size_t> perm(attrs);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> pobs(attrs);
    for (int c = 0; c < attrs; ++c) pobs[c] = obs[perm[c]];
    const auto a = class_likelihoods_ml(estimate_of(obs), m, err);
    const auto b = class_likelihoods_ml(estimate_of(pobs), m.permuted_columns(perm), err.permuted(perm));
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(b.probabilities[i] == doctest::Approx(a.probabilities[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("indirect prediction from leaf posteriors") {
  const auto m = matrix_of(3, 3, {1, -1, 0, -1, 0, 1, 1, 1, -1});
  for (int i = 0; i < 3; ++i) {
    std::vector<double> w(3, 0.0);
    w[i] = 1.0;
    const auto est = predict_attributes_indirect(Posterior::normalized({0, 1, 2}, w), m);
    for (int j = 0; j < 3; ++j) CHECK(est.values[j] == m.value(i, j));
  }

  const auto two = matrix_of(2, 1, {1, -1});
  const auto zero = predict_attributes_indirect(Posterior::normalized({0, 1}, {1, 1}), two);
  CHECK(zero.values[0] == 0);
  CHECK(zero.confidences[0][1] == 1.0);

  const auto pos = predict_attributes_indirect(Posterior::normalized({0, 1}, {0.8, 0.2}), two, 1.0 / 3.0);
  CHECK(pos.values[0] == 1);
  CHECK(triple_argmax(pos.confidences[0]) == ternary_slot(1));

  CHECK_THROWS_AS(predict_attributes_indirect(Posterior::normalized({0, 1}, {1, 1}), two, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(predict_attributes_indirect(Posterior::normalized({0, 1}, {1, 1}), two, 1.0), std::invalid_argument);
}

TEST_CASE("indirect thresholds and confidence triples") {
  const double tau = 0.25;
  const auto two = matrix_of(2, 1, {1, -1});
  // expectation 2p - 1
  for (double p : {0.0, 0.2, 0.374, 0.375, 0.5, 0.625, 0.626, 0.9, 1.0}) {
    const auto est = predict_attributes_indirect(Posterior::normalized({0, 1}, {p, 1 - p}), two, tau);
    const double e = 2 * p - 1;
    const int expect = e >= tau - 1e-12 ? 1 : e <= -tau + 1e-12 ? -1 : 0;
    INFO("p=" << p);
    CHECK(est.values[0] == expect);
    const auto& t = est.confidences[0];
    CHECK(t[0] + t[1] + t[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t[0] >= 0);
    CHECK(t[1] >= 0);
    CHECK(t[2] >= 0);
  }
  const auto at = indirect_confidence(tau, tau);
  CHECK(at[2] == doctest::Approx(0.5));
  CHECK(at[1] == doctest::Approx(0.5));
  CHECK(indirect_confidence(1.0, tau)[2] == 1.0);
  CHECK(indirect_confidence(-1.0, tau)[0] == 1.0);

  std::mt19937_64 rng(9);
  const auto m = random_matrix(rng, 7, 10);
  for (int round = 0; round < 100; ++round) {
    const auto post = testing::random_posterior(rng, {0, 1, 2, 3, 4, 5, 6}, 0.3);
    const auto est = predict_attributes_indirect(post, m);
    for (std::size_t j = 0; j < 10; ++j) {
      double e = 0;
      for (int i = 0; i < 7; ++i) e += post.probabilities[i] * m.value(i, j);
      CHECK(e >= -1.0 - 1e-12);
      CHECK(e <= 1.0 + 1e-12);
      CHECK(triple_argmax(est.confidences[j]) == ternary_slot(est.values[j]));
    }
  }
}

TEST_CASE("error model add-one smoothing") {
  const auto m = matrix_of(2, 1, {1, 1});
  std::vector<AttributeEstimate> preds(30, estimate_of({1}));
  std::vector<int> truth(30, 0);
  const auto err = estimate_attribute_error_model(preds, truth, m);
  const auto& row = err.rates[0][ternary_slot(1)];
  CHECK(row[0] == doctest::Approx(1.0 / 33));
  CHECK(row[1] == doctest::Approx(1.0 / 33));
  CHECK(row[2] == doctest::Approx(31.0 / 33));
  for (int s = 0; s < 2; ++s) {
    for (double x : err.rates[0][s]) CHECK(x == doctest::Approx(1.0 / 3));
  }
  for (const auto& r : err.rates[0]) CHECK(r[0] + r[1] + r[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rank_classes ordering and ties") {
  const auto p = Posterior::normalized({0, 1, 2}, {0.7, 0.2, 0.1});
  const auto r = rank_classes(p);
  CHECK(r.order == std::vector<int>{0, 1, 2});
  CHECK(r.rank == std::vector<int>{1, 2, 3});

  const auto t = rank_classes(Posterior::normalized({3, 1}, {0.5, 0.5}));
  CHECK(t.rank_of(1) == 1);
  CHECK(t.rank_of(3) == 2);
  CHECK(t.top(1) == std::vector<int>{1});
  CHECK_THROWS(t.rank_of(2));

  const auto q = rank_classes(Posterior::normalized({0, 1, 2, 3}, {0.1, 0.4, 0.1, 0.4}));
  CHECK(q.order == std::vector<int>{1, 3, 0, 2});
}

namespace {

// Two classes split on the sign of feature 0; attribute 0 follows the class,
// attribute 1 is +1 everywhere.
struct AlignedSet {
  std::vector<FeatureRecord> train, validation;
  AttributeMatrix attributes = matrix_of(2, 2, {-1, 1, 1, 1});
};

AlignedSet aligned_set() {
  AlignedSet s;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mag(1.0, 3.0), other(-2.0, 2.0);
  for (int i = 0; i < 80; ++i) {
    const int cls = i % 2;
    const double x0 = (cls == 0 ? -1 : 1) * mag(rng);
    FeatureRecord r{"i" + std::to_string(i), cls, {x0, other(rng)}};
    (i < 60 ? s.train : s.validation).push_back(r);
  }
  return s;
}

}  // namespace

TEST_CASE("direct bank on an aligned attribute and a constant attribute") {
  const auto s = aligned_set();
  const auto bank = train_direct_attribute_classifiers(s.train, s.attributes);
  REQUIRE(bank.attributes.size() == 2);
  CHECK_FALSE(bank.attributes[0].constant);
  CHECK(bank.attributes[1].constant);
  CHECK(bank.attributes[1].constant_value == 1);
  CHECK(bank.notes.size() == 1);

  int hits = 0;
  for (const auto& r : s.validation) {
    const auto est = predict_attributes_direct(bank, r.features);
    hits += est.values[0] == s.attributes.value(*r.class_id, 0);
    CHECK(est.values[1] == 1);
    const auto& c = est.confidences[1];
    CHECK(c[0] == doctest::Approx(kAttributeFloor));
    CHECK(c[1] == doctest::Approx(kAttributeFloor));
    CHECK(c[2] == doctest::Approx(1 - 2 * kAttributeFloor));
    for (const auto& t : est.confidences) CHECK(t[0] + t[1] + t[2] == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t j = 0; j < 2; ++j) CHECK(triple_argmax(est.confidences[j]) == ternary_slot(est.values[j]));
    const auto again = predict_attributes_direct(bank, r.features);
    CHECK(again.values == est.values);
    CHECK(again.confidences == est.confidences);
  }
  CHECK(hits == static_cast<int>(s.validation.size()));

  const auto err = estimate_direct_error_model(bank, s.validation, s.attributes);
  CHECK(err.rates[0][ternary_slot(1)][ternary_slot(1)] == doctest::Approx(11.0 / 13));
  CHECK_THROWS(predict_attributes_direct(bank, std::vector<double>{1.0}));
}

TEST_CASE("triple_argmax tie rule") {
  CHECK(triple_argmax({0.2, 0.2, 0.6}) == 2);
  CHECK(triple_argmax({0.4, 0.4, 0.2}) == 0);
  CHECK(triple_argmax({0.2, 0.4, 0.4}) == 1);
}
