#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "zsl/core.hpp"
#include "zsl/hierarchy_builder.hpp"

namespace testing {

inline std::string label_of(int k) { return "c" + std::to_string(k); }

inline zsl::ClassCatalog make_catalog(int k, const std::vector<int>& novel = {}) {
  std::vector<zsl::ClassInfo> infos;
  for (int i = 0; i < k; ++i) {
    infos.push_back({i, label_of(i), std::find(novel.begin(), novel.end(), i) != novel.end()});
  }
  return zsl::ClassCatalog(infos);
}

// parent[i] is the parent of node i (-1 for the root); class_of[i] is the
// class of leaf i or -1. Leaves get label_of(class).
inline zsl::Hierarchy tree_from_parents(const std::vector<int>& parent, const std::vector<int>& class_of) {
  std::vector<zsl::HierarchyNode> nodes(parent.size());
  int root = -1;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    nodes[i].class_id = class_of[i];
    nodes[i].label = class_of[i] >= 0 ? label_of(class_of[i]) : "n" + std::to_string(i);
    if (parent[i] < 0) root = static_cast<int>(i);
    else nodes[parent[i]].children.push_back(static_cast<int>(i));
  }
  return zsl::Hierarchy::assemble(nodes, root);
}

// Random tree over classes 0..leaves-1 by recursive random partition into
// 2..max_arity groups; at most 2 * leaves - 1 nodes.
inline zsl::Hierarchy random_tree(std::mt19937_64& rng, int leaves, int max_arity = 3) {
  std::vector<int> classes(leaves);
  std::iota(classes.begin(), classes.end(), 0);
  std::shuffle(classes.begin(), classes.end(), rng);
  std::vector<zsl::HierarchyNode> nodes;
  std::function<int(std::vector<int>)> grow = [&](std::vector<int> group) -> int {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (group.size() == 1) {
      nodes[id].class_id = group[0];
      nodes[id].label = label_of(group[0]);
      return id;
    }
    nodes[id].label = "n" + std::to_string(id);
    const int k = std::uniform_int_distribution<int>(2, std::min<int>(max_arity, group.size()))(rng);
    // k - 1 distinct cut points in 1..size-1
    std::vector<int> cuts(group.size() - 1);
    std::iota(cuts.begin(), cuts.end(), 1);
    std::shuffle(cuts.begin(), cuts.end(), rng);
    cuts.resize(k - 1);
    std::sort(cuts.begin(), cuts.end());
    int start = 0;
    cuts.push_back(static_cast<int>(group.size()));
    std::vector<int> kids;
    for (int cut : cuts) {
      kids.push_back(grow(std::vector<int>(group.begin() + start, group.begin() + cut)));
      start = cut;
    }
    nodes[id].children = kids;
    return id;
  };
  grow(classes);
  return zsl::Hierarchy::assemble(nodes, 0);
}

// Random leaf posterior over the tree's classes, optionally peaked.
inline zsl::Posterior random_posterior(std::mt19937_64& rng, const std::vector<int>& classes, double concentration = 1.0) {
  std::gamma_distribution<double> g(concentration, 1.0);
  std::vector<double> w(classes.size());
  for (auto& x : w) x = g(rng) + 1e-300;
  return zsl::Posterior::normalized(classes, w);
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("zsl_test_" + std::to_string(std::random_device{}()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }
};

}  // namespace testing
