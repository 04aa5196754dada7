#include "zsl/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace zsl {

ClassCatalog::ClassCatalog(std::vector<ClassInfo> classes) : classes_(std::move(classes)) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].index != static_cast<int>(i)) {
      throw std::invalid_argument("class indices must be dense in catalog order; got " +
                                  std::to_string(classes_[i].index) + " at position " + std::to_string(i));
    }
    if (classes_[i].label.empty()) throw std::invalid_argument("empty class label at index " + std::to_string(i));
    if (!seen.insert(classes_[i].label).second) {
      throw std::invalid_argument("duplicate class label: " + classes_[i].label);
    }
  }
}

std::optional<int> ClassCatalog::find(const std::string& label) const {
  for (const auto& c : classes_) {
    if (c.label == label) return c.index;
  }
  return std::nullopt;
}

std::vector<int> ClassCatalog::non_novel() const {
  std::vector<int> out;
  for (const auto& c : classes_) {
    if (!c.novel) out.push_back(c.index);
  }
  return out;
}

std::vector<int> ClassCatalog::novel() const {
  std::vector<int> out;
  for (const auto& c : classes_) {
    if (c.novel) out.push_back(c.index);
  }
  return out;
}

std::vector<int> ClassCatalog::all() const {
  std::vector<int> out(classes_.size());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

AttributeMatrix::AttributeMatrix(std::vector<std::string> class_labels, std::vector<std::string> attribute_names,
                                 std::vector<double> raw_values)
    : class_labels_(std::move(class_labels)), attribute_names_(std::move(attribute_names)), raw_(std::move(raw_values)) {
  if (raw_.size() != class_labels_.size() * attribute_names_.size()) {
    throw std::invalid_argument("attribute matrix size does not match rows x cols");
  }
}

std::optional<std::pair<std::size_t, std::size_t>> AttributeMatrix::first_non_ternary() const {
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c) {
      const double v = raw(r, c);
      if (v != -1.0 && v != 0.0 && v != 1.0) return std::make_pair(r, c);
    }
  }
  return std::nullopt;
}

AttributeMatrix AttributeMatrix::permuted_columns(std::span<const std::size_t> perm) const {
  if (perm.size() != cols()) throw std::invalid_argument("permutation length mismatch");
  std::vector<std::string> names(cols());
  std::vector<double> values(raw_.size());
  for (std::size_t c = 0; c < cols(); ++c) {
    names[c] = attribute_names_[perm[c]];
    for (std::size_t r = 0; r < rows(); ++r) values[r * cols() + c] = raw(r, perm[c]);
  }
  return AttributeMatrix(class_labels_, std::move(names), std::move(values));
}

std::size_t feature_dimension(std::span<const FeatureRecord> records) {
  if (records.empty()) return 0;
  const std::size_t d = records.front().features.size();
  for (const auto& r : records) {
    if (r.features.size() != d) {
      throw std::invalid_argument("record " + r.item_id + " has dimension " + std::to_string(r.features.size()) +
                                  ", expected " + std::to_string(d));
    }
    for (double v : r.features) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature in record " + r.item_id);
    }
  }
  return d;
}

void check_split(const DatasetSplit& split, const ClassCatalog& catalog) {
  std::unordered_set<std::string> ids;
  auto visit = [&](const std::vector<FeatureRecord>& part, const char* name, bool labels_non_novel) {
    for (const auto& r : part) {
      if (!ids.insert(r.item_id).second) throw std::invalid_argument("item id repeated across splits: " + r.item_id);
      if (labels_non_novel) {
        if (!r.class_id) throw std::invalid_argument(std::string("unlabeled record in ") + name + ": " + r.item_id);
        if (catalog.at(*r.class_id).novel) {
          throw std::invalid_argument(std::string("novel class in ") + name + " split: " + r.item_id);
        }
      }
    }
  };
  visit(split.train, "train", true);
  visit(split.validation, "validation", true);
  visit(split.test, "test", false);
}

Matrix Matrix::from_records(std::span<const FeatureRecord> records) {
  const std::size_t d = feature_dimension(records);
  Matrix m(records.size(), d);
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::copy(records[i].features.begin(), records[i].features.end(), m.row(i).begin());
  }
  return m;
}

Posterior Posterior::normalized(std::vector<int> class_set, std::vector<double> weights) {
  if (class_set.size() != weights.size()) throw std::invalid_argument("posterior class set / weight length mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("posterior weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("posterior weights sum to zero");
  for (double& w : weights) w /= total;
  return Posterior{std::move(class_set), std::move(weights)};
}

Posterior Posterior::from_log_weights(std::vector<int> class_set, std::span<const double> log_weights) {
  if (class_set.size() != log_weights.size() || log_weights.empty()) {
    throw std::invalid_argument("posterior class set / log weight length mismatch");
  }
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - top);
  return normalized(std::move(class_set), std::move(w));
}

double Posterior::probability_of(int class_id) const {
  for (std::size_t i = 0; i < class_set.size(); ++i) {
    if (class_set[i] == class_id) return probabilities[i];
  }
  return 0.0;
}

void Posterior::check(double tol) const {
  if (class_set.size() != probabilities.size()) throw std::logic_error("posterior length mismatch");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::logic_error("posterior entry outside [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > tol) throw std::logic_error("posterior does not sum to 1");
}

Hierarchy Hierarchy::assemble(const std::vector<HierarchyNode>& input, int root) {
  const int n = static_cast<int>(input.size());
  if (root < 0 || root >= n) throw std::invalid_argument("hierarchy root out of range");

  // Smallest class index below each node; detects cycles and revisits.
  std::vector<int> min_class(input.size(), -1);
  std::vector<char> state(input.size(), 0);  // 0 unvisited, 1 on stack, 2 done
  std::unordered_set<int> classes_seen;
  std::function<int(int)> visit = [&](int id) -> int {
    if (id < 0 || id >= n) throw std::invalid_argument("child id out of range: " + std::to_string(id));
    if (state[id] == 1) throw std::invalid_argument("cycle in hierarchy at node " + std::to_string(id));
    if (state[id] == 2) throw std::invalid_argument("node reachable twice: " + std::to_string(id));
    state[id] = 1;
    const auto& nd = input[id];
    int best;
    if (nd.children.empty()) {
      if (nd.class_id < 0) throw std::invalid_argument("leaf without class: node " + std::to_string(id));
      if (!classes_seen.insert(nd.class_id).second) {
        throw std::invalid_argument("duplicate class in hierarchy: " + std::to_string(nd.class_id));
      }
      best = nd.class_id;
    } else {
      if (nd.class_id >= 0) throw std::invalid_argument("inner node carries a class: node " + std::to_string(id));
      best = std::numeric_limits<int>::max();
      for (int c : nd.children) best = std::min(best, visit(c));
    }
    state[id] = 2;
    min_class[id] = best;
    return best;
  };
  visit(root);
  for (int i = 0; i < n; ++i) {
    if (state[i] != 2) throw std::invalid_argument("node unreachable from root: " + std::to_string(i));
  }
  if (classes_seen.size() < 2) throw std::invalid_argument("hierarchy needs at least two leaf classes");

  Hierarchy out;
  out.nodes_.reserve(input.size());
  std::function<int(int, int, int)> emit = [&](int old_id, int parent, int depth) -> int {
    const int new_id = static_cast<int>(out.nodes_.size());
    HierarchyNode nd;
    nd.id = new_id;
    nd.label = input[old_id].label;
    nd.parent = parent;
    nd.class_id = input[old_id].children.empty() ? input[old_id].class_id : kNoClass;
    nd.depth = depth;
    out.nodes_.push_back(nd);
    std::vector<int> kids = input[old_id].children;
    std::stable_sort(kids.begin(), kids.end(), [&](int a, int b) { return min_class[a] < min_class[b]; });
    int leaves = kids.empty() ? 1 : 0;
    std::vector<int> new_kids;
    for (int k : kids) {
      const int child = emit(k, new_id, depth + 1);
      new_kids.push_back(child);
      leaves += out.nodes_[child].leaf_count;
    }
    out.nodes_[new_id].children = std::move(new_kids);
    out.nodes_[new_id].leaf_count = leaves;
    return new_id;
  };
  out.root_ = emit(root, kNoNode, 0);
  const double total_bits = std::log2(static_cast<double>(out.nodes_[out.root_].leaf_count));
  for (auto& nd : out.nodes_) nd.reward = total_bits - std::log2(static_cast<double>(nd.leaf_count));

  int max_class = 0;
  for (int c : classes_seen) max_class = std::max(max_class, c);
  out.leaf_by_class_.assign(static_cast<std::size_t>(max_class) + 1, kNoNode);
  for (const auto& nd : out.nodes_) {
    if (nd.is_leaf()) out.leaf_by_class_[nd.class_id] = nd.id;
  }
  return out;
}

Hierarchy Hierarchy::from_raw(std::vector<HierarchyNode> nodes, int root) {
  Hierarchy out;
  out.nodes_ = std::move(nodes);
  out.root_ = root;
  int max_class = -1;
  for (const auto& nd : out.nodes_) max_class = std::max(max_class, nd.class_id);
  out.leaf_by_class_.assign(static_cast<std::size_t>(max_class + 1), kNoNode);
  for (const auto& nd : out.nodes_) {
    if (nd.is_leaf() && nd.class_id >= 0 && out.leaf_by_class_[nd.class_id] == kNoNode) {
      out.leaf_by_class_[nd.class_id] = nd.id;
    }
  }
  return out;
}

int Hierarchy::leaf_of(int class_id) const {
  if (class_id < 0 || class_id >= static_cast<int>(leaf_by_class_.size())) return kNoNode;
  return leaf_by_class_[class_id];
}

std::vector<int> Hierarchy::classes() const {
  std::vector<int> out;
  for (int c = 0; c < static_cast<int>(leaf_by_class_.size()); ++c) {
    if (leaf_by_class_[c] != kNoNode) out.push_back(c);
  }
  return out;
}

std::vector<int> Hierarchy::classes_below(int node_id) const {
  std::vector<int> out;
  std::vector<int> stack{node_id};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const auto& nd = node(id);
    if (nd.is_leaf()) {
      out.push_back(nd.class_id);
    } else {
      for (int c : nd.children) stack.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Hierarchy::is_ancestor_or_self(int ancestor, int id) const {
  for (int cur = id; cur != kNoNode; cur = node(cur).parent) {
    if (cur == ancestor) return true;
  }
  return false;
}

int Hierarchy::lowest_common_ancestor(int a, int b) const {
  while (node(a).depth > node(b).depth) a = node(a).parent;
  while (node(b).depth > node(a).depth) b = node(b).parent;
  while (a != b) {
    a = node(a).parent;
    b = node(b).parent;
  }
  return a;
}

NodePrediction NodePrediction::of(const Hierarchy& tree, int node_id) {
  const auto& nd = tree.node(node_id);
  return NodePrediction{node_id, nd.is_leaf(), nd.leaf_count, nd.reward};
}

ValidationReport validate_hierarchy(const Hierarchy& h) {
  ValidationReport rep;
  auto fail = [&](const std::string& msg) { rep.violations.push_back(msg); };
  const auto& nodes = h.nodes();
  const int n = static_cast<int>(nodes.size());
  if (n == 0) {
    fail("empty hierarchy");
    return rep;
  }
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (nodes[i].id != i) fail("node id mismatch at position " + std::to_string(i));
    if (nodes[i].parent == kNoNode) ++roots;
    for (int c : nodes[i].children) {
      if (c < 0 || c >= n) {
        fail("child id out of range at node " + std::to_string(i));
      } else if (nodes[c].parent != i) {
        fail("parent/child mismatch between " + std::to_string(i) + " and " + std::to_string(c));
      }
    }
  }
  if (roots != 1) fail("expected exactly one root, found " + std::to_string(roots));
  if (h.root() < 0 || h.root() >= n || nodes[h.root()].parent != kNoNode) {
    fail("root pointer invalid");
    return rep;
  }
  if (!rep.ok()) return rep;

  // Postorder walk from the root recomputing leaf counts and depths.
  std::vector<int> counted(n, -1);
  std::vector<int> order;
  std::vector<std::pair<int, int>> stack{{h.root(), 0}};
  std::vector<char> seen(n, 0);
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    if (seen[id]) {
      fail("node visited twice: " + std::to_string(id));
      return rep;
    }
    seen[id] = 1;
    order.push_back(id);
    if (nodes[id].depth != depth) fail("depth wrong at node " + std::to_string(id));
    for (int c : nodes[id].children) stack.emplace_back(c, depth + 1);
  }
  if (static_cast<int>(order.size()) != n) fail("nodes unreachable from root");
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto& nd = nodes[*it];
    int leaves = 0;
    if (nd.children.empty()) {
      leaves = 1;
      if (nd.class_id < 0) fail("leaf without class at node " + std::to_string(nd.id));
    } else {
      if (nd.class_id >= 0) fail("inner node carries class at node " + std::to_string(nd.id));
      for (int c : nd.children) leaves += counted[c];
    }
    counted[nd.id] = leaves;
    if (nd.leaf_count != leaves) fail("leaf_descendant_count wrong at node " + std::to_string(nd.id));
  }
  const int total = counted[h.root()];
  if (total < 2) fail("degenerate hierarchy with fewer than two leaves");
  const double total_bits = std::log2(static_cast<double>(std::max(total, 1)));
  for (const auto& nd : nodes) {
    const double expected = total_bits - std::log2(static_cast<double>(std::max(counted[nd.id], 1)));
    if (!(std::abs(nd.reward - expected) <= 1e-9)) fail("reward wrong at node " + std::to_string(nd.id));
  }
  std::unordered_set<int> classes;
  for (const auto& nd : nodes) {
    if (nd.children.empty() && nd.class_id >= 0 && !classes.insert(nd.class_id).second) {
      fail("duplicate leaf class " + std::to_string(nd.class_id));
    }
  }
  return rep;
}

ValidationReport validate_catalog(const ClassCatalog& classes, const AttributeMatrix& attributes,
                                  const Hierarchy& hierarchy) {
  ValidationReport rep = validate_hierarchy(hierarchy);
  auto fail = [&](const std::string& msg) { rep.violations.push_back(msg); };

  if (attributes.rows() != classes.size()) {
    fail("attribute matrix has " + std::to_string(attributes.rows()) + " rows for " + std::to_string(classes.size()) +
         " classes (missing rows)");
  }
  for (std::size_t i = 0; i < std::min(attributes.rows(), classes.size()); ++i) {
    if (attributes.class_labels()[i] != classes.at(static_cast<int>(i)).label) {
      fail("attribute row " + std::to_string(i) + " labeled '" + attributes.class_labels()[i] + "', expected '" +
           classes.at(static_cast<int>(i)).label + "'");
    }
  }
  for (std::size_t r = 0; r < attributes.rows(); ++r) {
    for (std::size_t c = 0; c < attributes.cols(); ++c) {
      const double v = attributes.raw(r, c);
      if (v != -1.0 && v != 0.0 && v != 1.0) {
        std::ostringstream os;
        os << "non-ternary value at (" << r << ", " << c << ")";
        fail(os.str());
      }
    }
  }

  int leaves = 0;
  for (const auto& nd : hierarchy.nodes()) {
    if (!nd.children.empty()) continue;
    ++leaves;
    if (nd.class_id < 0 || nd.class_id >= static_cast<int>(classes.size())) {
      fail("leaf " + std::to_string(nd.id) + " maps to unknown class");
    } else if (nd.label != classes.at(nd.class_id).label) {
      fail("leaf " + std::to_string(nd.id) + " label does not match its class");
    }
  }
  if (leaves != static_cast<int>(classes.size())) {
    fail("leaf/class count mismatch: " + std::to_string(leaves) + " leaves for " + std::to_string(classes.size()) +
         " classes");
  }
  return rep;
}

}  // namespace zsl
