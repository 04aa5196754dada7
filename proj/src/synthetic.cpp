#include "zsl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

#include "zsl/kernels.hpp"
#include "zsl/rng.hpp"

namespace zsl::synth {

namespace {

// Stream ids for derived sub-seeds.
constexpr std::uint64_t kTreeStream = 1;
constexpr std::uint64_t kNovelStream = 2;
constexpr std::uint64_t kAttributeStream = 3;
constexpr std::uint64_t kEmbeddingStream = 4;
constexpr std::uint64_t kClassStreamBase = 1000;

std::string class_label(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "class-%03d", k);
  return buf;
}

int step_ternary(int v, std::mt19937_64& rng) {
  if (v != 0) return 0;
  return std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
}

}  // namespace

void SynthConfig::validate() const {
  if (classes < 2) throw std::invalid_argument("synthetic config needs at least two classes");
  if (novel < 0 || novel >= classes - 1) throw std::invalid_argument("novel count must leave at least two seen classes");
  if (dim < 1 || attributes < 2) throw std::invalid_argument("dimension and attribute count must be positive");
  if (!(noise >= 0.0) || !(jitter >= 0.0)) throw std::invalid_argument("noise levels must be non-negative");
  if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw std::invalid_argument("flip rate must lie in [0, 1]");
  if (train_fraction < 0 || validation_fraction < 0 || test_fraction < 0 ||
      std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  }
  if (items_per_class < 2 && validation_fraction > 0) {
    throw std::invalid_argument("items per class < 2 with a validation split");
  }
  const int val = static_cast<int>(std::lround(items_per_class * validation_fraction));
  const int test = static_cast<int>(std::lround(items_per_class * test_fraction));
  if (items_per_class - val - test < 1) throw std::invalid_argument("split leaves no training items per class");
  if (validation_fraction > 0 && val < 1) throw std::invalid_argument("split leaves no validation items per class");
}

Hierarchy random_binary_tree(const std::vector<std::string>& labels, std::mt19937_64& rng) {
  const int n = static_cast<int>(labels.size());
  if (n < 2) throw std::invalid_argument("random tree needs at least two leaves");
  std::vector<HierarchyNode> nodes(2 * n - 1);
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int k = 0; k < n; ++k) {
    nodes[k].label = labels[k];
    nodes[k].class_id = k;
  }
  for (int m = 0; m < n - 1; ++m) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const std::size_t a = pick(rng);
    std::size_t b = std::uniform_int_distribution<std::size_t>(0, pool.size() - 2)(rng);
    if (b >= a) ++b;
    const int id = n + m;
    nodes[id].label = "node-" + std::to_string(m);
    nodes[id].children = {pool[a], pool[b]};
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(std::max(a, b)));
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(std::min(a, b)));
    pool.push_back(id);
  }
  return Hierarchy::assemble(nodes, 2 * n - 2);
}

SyntheticData generate(const SynthConfig& config) {
  config.validate();
  const int k_total = config.classes;
  const int na = config.attributes;
  const int d = config.dim;

  std::vector<std::string> labels(k_total);
  for (int k = 0; k < k_total; ++k) labels[k] = class_label(k);

  std::mt19937_64 tree_rng(derive_seed(config.seed, kTreeStream));
  Hierarchy tree = random_binary_tree(labels, tree_rng);

  std::mt19937_64 novel_rng(derive_seed(config.seed, kNovelStream));
  std::vector<int> order(k_total);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), novel_rng);
  std::vector<ClassInfo> infos(k_total);
  for (int k = 0; k < k_total; ++k) infos[k] = ClassInfo{k, labels[k], false};
  for (int i = 0; i < config.novel; ++i) infos[order[i]].novel = true;

  // Attributes propagate from the root with independent per-edge steps.
  std::vector<double> values;
  for (std::uint64_t attempt = 0;; ++attempt) {
    std::mt19937_64 rng(derive_seed(config.seed, kAttributeStream + 7919 * attempt));
    std::vector<std::vector<int>> node_values(tree.size(), std::vector<int>(na));
    std::uniform_int_distribution<int> root_value(-1, 1);
    for (int j = 0; j < na; ++j) node_values[tree.root()][j] = root_value(rng);
    std::bernoulli_distribution flip(config.flip_rate);
    for (const auto& nd : tree.nodes()) {  // preorder: parents first
      if (nd.parent == kNoNode) continue;
      for (int j = 0; j < na; ++j) {
        const int inherited = node_values[nd.parent][j];
        node_values[nd.id][j] = flip(rng) ? step_ternary(inherited, rng) : inherited;
      }
    }
    values.assign(static_cast<std::size_t>(k_total) * na, 0.0);
    std::set<std::vector<int>> distinct;
    for (int k = 0; k < k_total; ++k) {
      const auto& row = node_values[tree.leaf_of(k)];
      distinct.insert(row);
      for (int j = 0; j < na; ++j) values[static_cast<std::size_t>(k) * na + j] = row[j];
    }
    if (config.flip_rate == 0.0 || distinct.size() >= 2 || attempt > 64) break;
  }
  AttributeMatrix attributes(labels, [&] {
    std::vector<std::string> names(na);
    for (int j = 0; j < na; ++j) names[j] = "attr-" + std::to_string(j);
    return names;
  }(), values);

  // Linear attribute-to-feature embedding shared by all classes.
  std::mt19937_64 embed_rng(derive_seed(config.seed, kEmbeddingStream));
  std::normal_distribution<double> unit(0.0, 1.0);
  Matrix embedding(static_cast<std::size_t>(d), static_cast<std::size_t>(na));
  const double scale = config.embedding_scale / std::sqrt(static_cast<double>(na));
  for (int r = 0; r < d; ++r) {
    for (int j = 0; j < na; ++j) embedding(r, j) = scale * unit(embed_rng);
  }

  SyntheticData out;
  out.config = config;
  out.catalog = ClassCatalog(infos);
  out.tree = tree;
  out.prototypes = Matrix(static_cast<std::size_t>(k_total), static_cast<std::size_t>(d));

  const int n_val = static_cast<int>(std::lround(config.items_per_class * config.validation_fraction));
  const int n_test = static_cast<int>(std::lround(config.items_per_class * config.test_fraction));
  for (int k = 0; k < k_total; ++k) {
    std::mt19937_64 rng(derive_seed(config.seed, kClassStreamBase + static_cast<std::uint64_t>(k)));
    auto proto = out.prototypes.row(k);
    for (int r = 0; r < d; ++r) {
      proto[r] = kernels::dot(embedding.row(r), attributes.row(k)) + config.jitter * unit(rng);
    }
    std::vector<FeatureRecord> items(config.items_per_class);
    for (int i = 0; i < config.items_per_class; ++i) {
      char id[48];
      std::snprintf(id, sizeof id, "%s-item-%03d", labels[k].c_str(), i);
      items[i].item_id = id;
      items[i].class_id = k;
      items[i].features.resize(d);
      for (int r = 0; r < d; ++r) items[i].features[r] = proto[r] + config.noise * unit(rng);
    }
    if (infos[k].novel) {
      for (auto& it : items) out.split.test.push_back(std::move(it));
      continue;
    }
    std::shuffle(items.begin(), items.end(), rng);
    for (int i = 0; i < config.items_per_class; ++i) {
      auto& dst = i < n_val ? out.split.validation : (i < n_val + n_test ? out.split.test : out.split.train);
      dst.push_back(std::move(items[i]));
    }
  }
  out.attributes = std::move(attributes);
  return out;
}

int oracle_bayes_rank(const SyntheticData& data, const FeatureRecord& item) {
  if (!item.class_id) throw std::invalid_argument("oracle rank needs a labeled item");
  const int truth = *item.class_id;
  const double own = kernels::squared_distance(item.features, data.prototypes.row(truth));
  int rank = 1;
  for (int k = 0; k < static_cast<int>(data.prototypes.rows()); ++k) {
    if (k == truth) continue;
    const double dk = kernels::squared_distance(item.features, data.prototypes.row(k));
    if (dk < own || (dk == own && k < truth)) ++rank;
  }
  return rank;
}

AttributeMatrix ultrametric_attributes(const Hierarchy& tree, const std::vector<std::string>& labels) {
  // Height of a node: 0 at leaves, 1 + max child height above.
  std::vector<int> height(tree.size(), 0);
  for (int id = static_cast<int>(tree.size()) - 1; id >= 0; --id) {
    for (int c : tree.node(id).children) height[id] = std::max(height[id], height[c] + 1);
  }
  const auto classes = tree.classes();
  const std::size_t rows = labels.size();
  std::vector<std::vector<double>> cols;
  for (const auto& nd : tree.nodes()) {
    if (nd.parent == kNoNode) continue;
    const int length = height[nd.parent] - height[nd.id];
    std::vector<char> below(rows, 0);
    for (int c : tree.classes_below(nd.id)) below[c] = 1;
    for (int rep = 0; rep < length; ++rep) {
      std::vector<double> a(rows), b(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        a[r] = below[r] ? 1.0 : -1.0;
        b[r] = -a[r];
      }
      cols.push_back(std::move(a));
      cols.push_back(std::move(b));
    }
  }
  std::vector<std::string> names(cols.size());
  std::vector<double> values(rows * cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    names[c] = "edge-attr-" + std::to_string(c);
    for (std::size_t r = 0; r < rows; ++r) values[r * cols.size() + c] = cols[c][r];
  }
  return AttributeMatrix(labels, std::move(names), std::move(values));
}

}  // namespace zsl::synth
