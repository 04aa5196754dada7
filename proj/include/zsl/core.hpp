#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace zsl {

// One entry of the class catalog. Indices are dense 0..K-1 in catalog order.
struct ClassInfo {
  int index = 0;
  std::string label;
  bool novel = false;
};

class ClassCatalog {
 public:
  ClassCatalog() = default;
  // Throws std::invalid_argument unless indices are dense and labels unique.
  explicit ClassCatalog(std::vector<ClassInfo> classes);

  std::size_t size() const { return classes_.size(); }
  const ClassInfo& at(int index) const { return classes_.at(static_cast<std::size_t>(index)); }
  const std::vector<ClassInfo>& classes() const { return classes_; }
  std::optional<int> find(const std::string& label) const;

  // Ascending class indices.
  std::vector<int> non_novel() const;
  std::vector<int> novel() const;
  std::vector<int> all() const;

 private:
  std::vector<ClassInfo> classes_;
};

// Class-to-attribute ground truth. Entries are stored as read so that
// validate_catalog can report non-ternary input; downstream code reads them
// through value(), which assumes a validated matrix.
class AttributeMatrix {
 public:
  AttributeMatrix() = default;
  AttributeMatrix(std::vector<std::string> class_labels, std::vector<std::string> attribute_names,
                  std::vector<double> raw_values);

  std::size_t rows() const { return class_labels_.size(); }
  std::size_t cols() const { return attribute_names_.size(); }
  const std::vector<std::string>& class_labels() const { return class_labels_; }
  const std::vector<std::string>& attribute_names() const { return attribute_names_; }

  double raw(std::size_t row, std::size_t col) const { return raw_[row * cols() + col]; }
  int value(std::size_t row, std::size_t col) const { return static_cast<int>(raw_[row * cols() + col]); }
  std::span<const double> row(std::size_t r) const { return {raw_.data() + r * cols(), cols()}; }

  // First (row, col) holding something other than -1, 0, +1.
  std::optional<std::pair<std::size_t, std::size_t>> first_non_ternary() const;

  // Columns permuted: result column c is this matrix's column perm[c].
  AttributeMatrix permuted_columns(std::span<const std::size_t> perm) const;

 private:
  std::vector<std::string> class_labels_;
  std::vector<std::string> attribute_names_;
  std::vector<double> raw_;
};

struct FeatureRecord {
  std::string item_id;
  std::optional<int> class_id;
  std::vector<double> features;
};

struct DatasetSplit {
  std::vector<FeatureRecord> train;
  std::vector<FeatureRecord> validation;
  std::vector<FeatureRecord> test;
};

// Common dimension of all records; throws on ragged or non-finite input.
std::size_t feature_dimension(std::span<const FeatureRecord> records);

// Throws std::invalid_argument if item ids overlap across splits or a novel
// class appears in train/validation.
void check_split(const DatasetSplit& split, const ClassCatalog& catalog);

// Row-major dense matrix used for feature blocks and small square tables.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }

  static Matrix from_records(std::span<const FeatureRecord> records);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Probability vector over an ordered class set.
struct Posterior {
  std::vector<int> class_set;
  std::vector<double> probabilities;

  // Scales non-negative weights to sum 1. Throws on negative, non-finite or
  // all-zero input.
  static Posterior normalized(std::vector<int> class_set, std::vector<double> weights);
  // Softmax of log-weights (max-shifted).
  static Posterior from_log_weights(std::vector<int> class_set, std::span<const double> log_weights);

  std::size_t size() const { return class_set.size(); }
  // Probability of class_id, 0 if the class is not in the set.
  double probability_of(int class_id) const;
  // Throws std::logic_error unless entries are in [0,1] and sum to 1 within tol.
  void check(double tol = 1e-9) const;
};

constexpr int kNoClass = -1;
constexpr int kNoNode = -1;

struct HierarchyNode {
  int id = 0;
  std::string label;
  int parent = kNoNode;
  std::vector<int> children;
  int class_id = kNoClass;  // set on leaves only
  int leaf_count = 0;
  int depth = 0;
  double reward = 0.0;  // bits
  bool is_leaf() const { return children.empty(); }
};

// Rooted class tree. Node ids are dense indices into nodes().
class Hierarchy {
 public:
  Hierarchy() = default;

  // Builds a canonical tree from structure only (labels, children, class_id
  // of the given nodes). Parents, depths, leaf counts and rewards are
  // recomputed; siblings are ordered by the smallest class index below them
  // and node ids are renumbered in preorder. Throws on cycles, unreachable
  // nodes, leaves without a class, or duplicate classes.
  static Hierarchy assemble(const std::vector<HierarchyNode>& nodes, int root);

  // Wraps the nodes verbatim (no recomputation). Used to examine corrupted
  // trees with validate_catalog.
  static Hierarchy from_raw(std::vector<HierarchyNode> nodes, int root);

  const std::vector<HierarchyNode>& nodes() const { return nodes_; }
  const HierarchyNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }
  int root() const { return root_; }
  int leaf_total() const { return nodes_.empty() ? 0 : node(root_).leaf_count; }

  // Leaf node id for a class, or kNoNode.
  int leaf_of(int class_id) const;
  bool contains_class(int class_id) const { return leaf_of(class_id) != kNoNode; }
  // Leaf classes in ascending class index.
  std::vector<int> classes() const;
  // Classes under a node, ascending.
  std::vector<int> classes_below(int node_id) const;

  // True if `ancestor` is `node` or lies on its path to the root.
  bool is_ancestor_or_self(int ancestor, int node) const;
  int lowest_common_ancestor(int a, int b) const;

 private:
  std::vector<HierarchyNode> nodes_;
  int root_ = kNoNode;
  std::vector<int> leaf_by_class_;
};

struct NodePrediction {
  int node_id = kNoNode;
  bool is_leaf = false;
  int leaf_count = 0;
  double reward = 0.0;

  static NodePrediction of(const Hierarchy& tree, int node_id);
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Consistency of catalog, attribute matrix and the hierarchy over all
// catalog classes. Violations are returned, never thrown.
ValidationReport validate_catalog(const ClassCatalog& classes, const AttributeMatrix& attributes,
                                  const Hierarchy& hierarchy);

// Structural checks of a tree alone (one walk): single root, parent/child
// agreement, leaf counts, depths, rewards against log2 of leaf counts.
ValidationReport validate_hierarchy(const Hierarchy& hierarchy);

}  // namespace zsl
