#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zsl/core.hpp"
#include "zsl/hierarchy_builder.hpp"
#include "zsl/io.hpp"
#include "zsl/metrics.hpp"

namespace zsl {

// Failure inside a named pipeline stage; what() reads "[stage] message".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline constexpr const char* kSourceConventional = "conventional";
inline constexpr const char* kSourceDirect = "direct-attr";
inline constexpr const char* kSourceIndirect = "indirect-attr";

struct ExperimentConfig {
  std::filesystem::path catalog;
  std::filesystem::path attributes;
  std::filesystem::path features_train;
  std::filesystem::path features_validation;
  std::filesystem::path features_test;
  std::filesystem::path hierarchy;  // empty: built from the attribute matrix
  std::filesystem::path models;     // empty: trained in the run

  std::vector<HierMethod> methods{HierMethod::darts, HierMethod::maxexp};
  std::vector<std::string> sources{kSourceConventional, kSourceDirect, kSourceIndirect};
  bool topn = true;
  // Ranking used for TOPN on conventional posteriors (attribute sources rank
  // with their own posterior).
  std::string topn_ranking = kSourceDirect;
  bool debias = false;  // adds debiased variants next to the plain ones

  std::vector<double> epsilons{0.05, 0.1, 0.2};
  std::vector<double> lambda_grid;
  std::vector<double> theta_grid;

  double svm_c = 1.0;
  double indirect_threshold = 1.0 / 3.0;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::filesystem::path out = "results";

  ExperimentConfig();

  // Paths are resolved against base_dir when relative. Unknown keys throw.
  static ExperimentConfig from_key_values(const io::KeyValues& kv, const std::filesystem::path& base_dir = {});
  static ExperimentConfig from_file(const std::filesystem::path& path);

  // Fully resolved settings; omits out and jobs, which never change results.
  io::KeyValues to_key_values() const;

  // Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  // Throws std::invalid_argument unless every referenced input file exists.
  void validate_paths() const;
};

std::vector<double> default_lambda_grid();
std::vector<double> default_theta_grid();

struct ExperimentData {
  ClassCatalog catalog;
  AttributeMatrix attributes;
  DatasetSplit split;
  std::optional<Hierarchy> hierarchy;
};

// Reads and cross-validates all inputs named by the config.
ExperimentData load_data(const ExperimentConfig& config);

// Full-catalog tree: the supplied hierarchy, or built by clustering.
Hierarchy resolve_hierarchy(const ExperimentData& data);

io::ModelBundle train_models(const ExperimentConfig& config, const ExperimentData& data);

struct TuningRow {
  std::string method;
  std::string posterior_source;
  double epsilon = 0.0;
  TuneResult result;
};

struct SummaryRow {
  std::string method;
  std::string posterior_source;
  std::string subset;
  std::string selection;  // "best-mra", "tuned-eps=<e>" or "ranking"
  double param = 0.0;
  double accuracy = 0.0;
  double info_gain_strict = 0.0;
  double info_gain_nominal = 0.0;
  double mra = 0.0;
  int leaf_baseline = 0;
  std::size_t n_items = 0;
};

struct ExperimentResult {
  Hierarchy tree;
  io::ModelBundle models;
  std::vector<TuningRow> tuning;
  std::vector<SweepCurve> curves;
  std::vector<EvalRecord> records;
  std::vector<SummaryRow> summary;
};

// Runs train (unless models are given), tune, sweep and summary in memory.
// Stage failures surface as StageError.
ExperimentResult run_pipeline(const ExperimentConfig& config, const ExperimentData& data,
                              const std::optional<io::ModelBundle>& models = std::nullopt);

std::string tuning_to_csv(const std::vector<TuningRow>& rows);
std::string summary_to_csv(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> summary_from_csv(const std::string& text);
std::string manifest_text(const ExperimentConfig& config);

// Loads, runs everything and writes hierarchy.json, models.json,
// tuning.csv, curves.csv, records.csv, summary.csv and manifest.txt into
// config.out. On failure an INVALID marker with the error is written instead.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace zsl
