#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "zsl/attributes.hpp"
#include "zsl/core.hpp"
#include "zsl/linear.hpp"
#include "zsl/metrics.hpp"

namespace zsl::io {

// Parse failure carrying the file and 1-based line.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line), detail_(what) {}
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

// Shortest decimal text that reads back to the same double; "nan" for NaN.
std::string format_double(double v);
double parse_double(const std::string& text);

std::vector<std::string> split_csv_line(const std::string& line);

// index,label,novel
ClassCatalog read_catalog(const std::filesystem::path& path);
void write_catalog(const ClassCatalog& catalog, const std::filesystem::path& path);

// item_id,label,f0..f{d-1}; an empty label marks an unlabeled record.
std::vector<FeatureRecord> read_features(const std::filesystem::path& path, const ClassCatalog& catalog);
void write_features(std::span<const FeatureRecord> records, const ClassCatalog& catalog,
                    const std::filesystem::path& path);

// class,<attribute names...>; rows must be ternary.
AttributeMatrix read_attribute_matrix(const std::filesystem::path& path);
void write_attribute_matrix(const AttributeMatrix& attributes, const std::filesystem::path& path);

// Nested objects {"label": ..., "children": [...]}, leaves {"label": ...,
// "class": name}; 2-space indentation, canonical sibling order.
std::string hierarchy_to_text(const Hierarchy& tree, const ClassCatalog& catalog);
Hierarchy hierarchy_from_text(const std::string& text, const ClassCatalog& catalog);
void export_hierarchy(const Hierarchy& tree, const ClassCatalog& catalog, const std::filesystem::path& path);
Hierarchy import_hierarchy(const std::filesystem::path& path, const ClassCatalog& catalog);

// Flat key = value text; '#' starts a comment line.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(const std::filesystem::path& path);
KeyValues parse_key_values(const std::string& text);
std::string key_values_to_text(const KeyValues& kv);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Trained-model bundle.
struct ModelBundle {
  CalibratedLinearModel conventional;
  DirectAttributeBank direct;
  AttributeErrorModel direct_errors;
  AttributeErrorModel indirect_errors;
  double indirect_threshold = 1.0 / 3.0;
};
std::string models_to_text(const ModelBundle& bundle);
ModelBundle models_from_text(const std::string& text);

// method,posterior_source,param,subset,avg_accuracy,avg_reward_strict,avg_reward_nominal,n_items
std::string curves_to_csv(std::span<const SweepCurve> curves);
std::vector<SweepCurve> curves_from_csv(const std::string& text);

std::string records_to_csv(std::span<const EvalRecord> records, const ClassCatalog& catalog);
std::vector<EvalRecord> records_from_csv(const std::string& text, const ClassCatalog& catalog);

}  // namespace zsl::io
