#include "zsl/hierarchy_builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace zsl {

double correlation_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("correlation distance on vectors of different length");
  if (u.size() < 2) throw std::invalid_argument("correlation distance needs at least two entries");
  const double n = static_cast<double>(u.size());
  const double mu = std::accumulate(u.begin(), u.end(), 0.0) / n;
  const double mv = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double suv = 0.0, suu = 0.0, svv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mu;
    const double dv = v[i] - mv;
    suv += du * dv;
    suu += du * du;
    svv += dv * dv;
  }
  if (suu == 0.0 || svv == 0.0) return 1.0;
  const double r = std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
  return 1.0 - r;
}

HierarchyBuild build_hierarchy(const AttributeMatrix& attributes, std::span<const int> class_ids) {
  std::vector<int> classes(class_ids.begin(), class_ids.end());
  if (classes.empty()) {
    classes.resize(attributes.rows());
    std::iota(classes.begin(), classes.end(), 0);
  }
  const int n = static_cast<int>(classes.size());
  if (n < 2) throw std::invalid_argument("hierarchy needs at least two classes");

  // Cluster ids: 0..n-1 leaves, n.. merges. dist is indexed by cluster id.
  const int total = 2 * n - 1;
  std::vector<std::vector<double>> dist(total, std::vector<double>(total, 0.0));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double d = correlation_distance(attributes.row(classes[a]), attributes.row(classes[b]));
      dist[a][b] = dist[b][a] = d;
    }
  }
  std::vector<int> size(total, 1);
  std::vector<int> active(n);
  std::iota(active.begin(), active.end(), 0);

  std::vector<HierarchyNode> nodes(total);
  for (int a = 0; a < n; ++a) {
    nodes[a].id = a;
    nodes[a].class_id = classes[a];
    nodes[a].label = attributes.class_labels().at(classes[a]);
  }

  HierarchyBuild out;
  for (int step = 0; step < n - 1; ++step) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    // active is ascending, so the first strict minimum is the id-ordered tie-break.
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const double d = dist[active[x]][active[y]];
        if (d < best) {
          best = d;
          bi = active[x];
          bj = active[y];
        }
      }
    }
    const int merged = n + step;
    size[merged] = size[bi] + size[bj];
    for (int k : active) {
      if (k == bi || k == bj) continue;
      const double d = (size[bi] * dist[k][bi] + size[bj] * dist[k][bj]) / static_cast<double>(size[merged]);
      dist[k][merged] = dist[merged][k] = d;
    }
    active.erase(std::remove_if(active.begin(), active.end(), [&](int k) { return k == bi || k == bj; }),
                 active.end());
    active.push_back(merged);
    nodes[merged].id = merged;
    nodes[merged].label = "node-" + std::to_string(step);
    nodes[merged].children = {bi, bj};
    if (!out.steps.empty() && best < out.steps.back().distance - 1e-12) {
      throw std::logic_error("average-linkage merge distances decreased");
    }
    out.steps.push_back(LinkageStep{bi, bj, best, merged});
  }
  out.tree = Hierarchy::assemble(nodes, total - 1);
  return out;
}

Hierarchy annotate_rewards(const Hierarchy& tree, int baseline_leaves) {
  if (baseline_leaves < 1) throw std::invalid_argument("reward baseline must be positive");
  std::vector<HierarchyNode> nodes = tree.nodes();
  const double bits = std::log2(static_cast<double>(baseline_leaves));
  for (auto& nd : nodes) nd.reward = bits - std::log2(static_cast<double>(nd.leaf_count));
  return Hierarchy::from_raw(std::move(nodes), tree.root());
}

std::vector<double> aggregate_posterior(const Hierarchy& tree, const Posterior& leaf_posterior) {
  const std::vector<int> leaves = tree.classes();
  if (leaf_posterior.size() != leaves.size()) {
    throw std::invalid_argument("posterior class set does not match hierarchy leaves");
  }
  std::vector<double> probs(tree.size(), 0.0);
  std::vector<char> filled(tree.size(), 0);
  for (std::size_t k = 0; k < leaf_posterior.size(); ++k) {
    const int leaf = tree.leaf_of(leaf_posterior.class_set[k]);
    if (leaf == kNoNode || filled[leaf]) throw std::invalid_argument("posterior class set does not match hierarchy leaves");
    filled[leaf] = 1;
    probs[leaf] = leaf_posterior.probabilities[k];
  }
  // Preorder ids: children always follow their parent.
  for (int id = static_cast<int>(tree.size()) - 1; id >= 0; --id) {
    const auto& nd = tree.node(id);
    if (nd.is_leaf()) continue;
    double s = 0.0;
    for (int c : nd.children) s += probs[c];
    probs[id] = s;
  }
  return probs;
}

PrunedHierarchy prune_novel(const Hierarchy& tree, std::span<const int> novel_classes) {
  std::unordered_set<int> drop(novel_classes.begin(), novel_classes.end());
  for (int c : drop) {
    if (!tree.contains_class(c)) throw std::invalid_argument("pruned class not in hierarchy: " + std::to_string(c));
  }
  const int n = static_cast<int>(tree.size());
  // kept[v]: id in the new node list of v's replacement, or kNoNode when the
  // whole subtree is removed.
  std::vector<HierarchyNode> nodes;
  std::vector<int> origin;
  std::vector<int> kept(n, kNoNode);
  for (int id = n - 1; id >= 0; --id) {
    const auto& nd = tree.node(id);
    if (nd.is_leaf()) {
      if (drop.count(nd.class_id)) continue;
      HierarchyNode leaf;
      leaf.id = static_cast<int>(nodes.size());
      leaf.label = nd.label;
      leaf.class_id = nd.class_id;
      nodes.push_back(leaf);
      origin.push_back(id);
      kept[id] = leaf.id;
      continue;
    }
    std::vector<int> kids;
    for (int c : nd.children) {
      if (kept[c] != kNoNode) kids.push_back(kept[c]);
    }
    if (kids.empty()) continue;
    if (kids.size() == 1) {
      kept[id] = kids.front();
      continue;
    }
    HierarchyNode inner;
    inner.id = static_cast<int>(nodes.size());
    inner.label = nd.label;
    inner.children = std::move(kids);
    nodes.push_back(inner);
    origin.push_back(id);
    kept[id] = inner.id;
  }
  if (kept[tree.root()] == kNoNode) throw std::invalid_argument("pruning would empty the hierarchy");
  int remaining = 0;
  for (const auto& nd : nodes) remaining += nd.is_leaf() ? 1 : 0;
  if (remaining < 2) throw std::invalid_argument("pruning leaves fewer than two classes");

  PrunedHierarchy out;
  out.tree = Hierarchy::assemble(nodes, kept[tree.root()]);
  // Map by leaf set: the unpruned node spanning exactly this node's leaves.
  out.source_node.resize(out.tree.size());
  for (const auto& nd : out.tree.nodes()) {
    const auto cls = out.tree.classes_below(nd.id);
    int lca = tree.leaf_of(cls.front());
    for (int c : cls) lca = tree.lowest_common_ancestor(lca, tree.leaf_of(c));
    out.source_node[nd.id] = lca;
  }
  return out;
}

std::vector<int> locate_true_node_set(const Hierarchy& tree, int class_id) {
  int cur = tree.leaf_of(class_id);
  if (cur == kNoNode) throw std::invalid_argument("class not in hierarchy: " + std::to_string(class_id));
  std::vector<int> chain;
  for (; cur != kNoNode; cur = tree.node(cur).parent) chain.push_back(cur);
  return chain;
}

std::vector<std::vector<int>> clade_signature(const Hierarchy& tree) {
  std::vector<std::vector<int>> out;
  for (const auto& nd : tree.nodes()) {
    if (!nd.is_leaf()) out.push_back(tree.classes_below(nd.id));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace zsl
