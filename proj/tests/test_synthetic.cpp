#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "zsl/hierarchy_builder.hpp"
#include "zsl/kernels.hpp"
#include "zsl/synthetic.hpp"

using namespace zsl;
using synth::SynthConfig;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.classes = 12;
  c.novel = 3;
  c.dim = 16;
  c.attributes = 20;
  c.items_per_class = 20;
  return c;
}

bool same_records(const std::vector<FeatureRecord>& a, const std::vector<FeatureRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].item_id != b[i].item_id || a[i].class_id != b[i].class_id || a[i].features != b[i].features) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  const auto a = synth::generate(small_config());
  const auto b = synth::generate(small_config());
  CHECK(same_records(a.split.train, b.split.train));
  CHECK(same_records(a.split.validation, b.split.validation));
  CHECK(same_records(a.split.test, b.split.test));
  CHECK(a.prototypes.data() == b.prototypes.data());
  CHECK(clade_signature(a.tree) == clade_signature(b.tree));
  for (std::size_t r = 0; r < a.attributes.rows(); ++r) {
    for (std::size_t c = 0; c < a.attributes.cols(); ++c) CHECK(a.attributes.raw(r, c) == b.attributes.raw(r, c));
  }
  auto other = small_config();
  other.seed = 2;
  CHECK_FALSE(same_records(a.split.train, synth::generate(other).split.train));
}

TEST_CASE("generated data is consistent") {
  const auto d = synth::generate(small_config());
  CHECK(d.catalog.size() == 12);
  CHECK(d.catalog.novel().size() == 3);
  CHECK(validate_catalog(d.catalog, d.attributes, d.tree).ok());
  CHECK_NOTHROW(check_split(d.split, d.catalog));
  CHECK(feature_dimension(d.split.train) == 16);

  std::set<std::vector<double>> rows;
  for (std::size_t r = 0; r < d.attributes.rows(); ++r) {
    rows.insert(std::vector<double>(d.attributes.row(r).begin(), d.attributes.row(r).end()));
  }
  CHECK(rows.size() >= 2);

  std::map<int, std::array<int, 3>> counts;
  for (const auto& r : d.split.train) counts[*r.class_id][0]++;
  for (const auto& r : d.split.validation) counts[*r.class_id][1]++;
  for (const auto& r : d.split.test) counts[*r.class_id][2]++;
  for (const auto& info : d.catalog.classes()) {
    const auto c = counts[info.index];
    if (info.novel) {
      CHECK(c[0] == 0);
      CHECK(c[1] == 0);
      CHECK(c[2] == 20);
    } else {
      CHECK(std::abs(c[0] - 18) <= 1);
      CHECK(std::abs(c[1] - 1) <= 1);
      CHECK(std::abs(c[2] - 1) <= 1);
      CHECK(c[0] + c[1] + c[2] == 20);
    }
  }
}

TEST_CASE("zero flip rate gives one shared attribute row") {
  auto c = small_config();
  c.flip_rate = 0.0;
  const auto d = synth::generate(c);
  for (std::size_t r = 1; r < d.attributes.rows(); ++r) {
    for (std::size_t j = 0; j < d.attributes.cols(); ++j) CHECK(d.attributes.value(r, j) == d.attributes.value(0, j));
  }
}

TEST_CASE("noiseless items sit on their prototypes") {
  auto c = small_config();
  c.noise = 0.0;
  const auto d = synth::generate(c);
  int hits = 0, total = 0;
  for (const auto* part : {&d.split.train, &d.split.validation, &d.split.test}) {
    for (const auto& r : *part) {
      int best = 0;
      double best_d = INFINITY;
      for (std::size_t k = 0; k < d.prototypes.rows(); ++k) {
        const double dist = kernels::squared_distance(r.features, d.prototypes.row(k));
        if (dist < best_d) {
          best_d = dist;
          best = static_cast<int>(k);
        }
      }
      hits += best == *r.class_id;
      ++total;
      CHECK(synth::oracle_bayes_rank(d, r) == 1);
    }
  }
  CHECK(hits == total);
}

TEST_CASE("oracle rank range and symmetry") {
  const auto d = synth::generate(small_config());
  for (const auto& r : d.split.test) {
    const int rank = synth::oracle_bayes_rank(d, r);
    CHECK(rank >= 1);
    CHECK(rank <= 12);
  }

  // classes 0 and 1 share a prototype, class 2 is far away
  synth::SyntheticData twin;
  twin.prototypes = Matrix(3, 4, 0.0);
  for (std::size_t j = 0; j < 4; ++j) twin.prototypes(2, j) = 100.0;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 1.0);
  double sum = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    FeatureRecord r{"x", i % 2, std::vector<double>(4)};
    for (auto& x : r.features) x = noise(rng);
    sum += synth::oracle_bayes_rank(twin, r);
  }
  CHECK(std::abs(sum / n - 1.5) <= 0.05);
  CHECK_THROWS(synth::oracle_bayes_rank(twin, FeatureRecord{"u", std::nullopt, {0, 0, 0, 0}}));
}

TEST_CASE("infeasible configurations are rejected") {
  auto c = small_config();
  c.items_per_class = 1;
  CHECK_THROWS(synth::generate(c));
  c = small_config();
  c.novel = 11;
  CHECK_THROWS(synth::generate(c));
  c = small_config();
  c.train_fraction = 0.5;
  CHECK_THROWS(synth::generate(c));
  c = small_config();
  c.noise = -1;
  CHECK_THROWS(synth::generate(c));
}

TEST_CASE("random binary tree shape") {
  std::mt19937_64 rng(1);
  std::vector<std::string> labels;
  for (int i = 0; i < 9; ++i) labels.push_back("k" + std::to_string(i));
  const auto t = synth::random_binary_tree(labels, rng);
  CHECK(t.size() == 17);
  CHECK(t.leaf_total() == 9);
  for (const auto& nd : t.nodes()) CHECK((nd.is_leaf() || nd.children.size() == 2));
  CHECK(t.node(t.leaf_of(4)).label == "k4");
}
