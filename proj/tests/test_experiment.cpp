#include <filesystem>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "zsl/experiment.hpp"
#include "zsl/io.hpp"
#include "zsl/synthetic.hpp"

using namespace zsl;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

synth::SynthConfig tiny() {
  synth::SynthConfig c;
  c.classes = 10;
  c.novel = 2;
  c.dim = 8;
  c.attributes = 12;
  c.items_per_class = 30;
  c.train_fraction = 0.8;
  c.validation_fraction = 0.1;
  c.test_fraction = 0.1;
  return c;
}

// Writes a generated dataset and returns a config pointing at it.
ExperimentConfig write_dataset(const fs::path& dir, const synth::SyntheticData& d) {
  io::write_catalog(d.catalog, dir / "catalog.csv");
  io::write_attribute_matrix(d.attributes, dir / "attributes.csv");
  io::write_features(d.split.train, d.catalog, dir / "train.csv");
  io::write_features(d.split.validation, d.catalog, dir / "validation.csv");
  io::write_features(d.split.test, d.catalog, dir / "test.csv");
  io::KeyValues kv{{"catalog", "catalog.csv"},
                   {"attributes", "attributes.csv"},
                   {"features_train", "train.csv"},
                   {"features_validation", "validation.csv"},
                   {"features_test", "test.csv"},
                   {"lambda_grid", "0, 0.5, 2, 8"},
                   {"theta_grid", "0, 0.3, 0.6, 0.9"}};
  return ExperimentConfig::from_key_values(kv, dir);
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

}  // namespace

TEST_CASE("config parsing") {
  const io::KeyValues kv{{"catalog", "a/cat.csv"}, {"methods", "maxexp"},       {"sources", "direct-attr"},
                         {"topn", "0"},            {"epsilons", "0.1, 0.3"},    {"seed", "9"},
                         {"debias", "true"},       {"lambda_grid", "0, 1, 2"},    {"out", "res"}};
  const auto c = ExperimentConfig::from_key_values(kv, "/base");
  CHECK(c.catalog == fs::path("/base/a/cat.csv"));
  CHECK(c.out == fs::path("/base/res"));
  CHECK(c.methods == std::vector<HierMethod>{HierMethod::maxexp});
  CHECK(c.sources == std::vector<std::string>{"direct-attr"});
  CHECK_FALSE(c.topn);
  CHECK(c.debias);
  CHECK(c.epsilons == std::vector<double>{0.1, 0.3});
  CHECK(c.lambda_grid == std::vector<double>{0, 1, 2});
  CHECK(c.theta_grid == default_theta_grid());
  CHECK(c.seed == 9);
  CHECK_NOTHROW(c.validate());

  const auto again = ExperimentConfig::from_key_values(c.to_key_values());
  CHECK(again.to_key_values() == c.to_key_values());
  CHECK(c.to_key_values().count("out") == 0);
  CHECK(c.to_key_values().count("jobs") == 0);

  CHECK_THROWS(ExperimentConfig::from_key_values({{"colour", "red"}}));
  CHECK_THROWS(ExperimentConfig::from_key_values({{"methods", "dart"}}));
  CHECK_THROWS(ExperimentConfig::from_key_values({{"topn", "maybe"}}));

  auto bad = c;
  bad.sources = {"telepathy"};
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.epsilons = {1.5};
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.lambda_grid = {0, 2, 1};
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.theta_grid = {0, 1.0};
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.topn_ranking = "conventional";
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.indirect_threshold = 1.0;
  CHECK_THROWS(bad.validate());
  CHECK_THROWS(c.validate_paths());
}

TEST_CASE("default grids") {
  const auto l = default_lambda_grid();
  REQUIRE(l.size() == 20);
  CHECK(l.front() == 0.0);
  CHECK(l[1] == doctest::Approx(0.01));
  CHECK(l.back() == doctest::Approx(10000.0));
  const auto t = default_theta_grid();
  REQUIRE(t.size() == 20);
  CHECK(t.front() == 0.0);
  CHECK(t.back() == doctest::Approx(0.95));
}

TEST_CASE("pipeline output structure") {
  TempDir dir;
  const auto data = synth::generate(tiny());
  auto cfg = write_dataset(dir.path, data);
  const auto loaded = load_data(cfg);

  SUBCASE("two sources without TOPN") {
    cfg.sources = {kSourceConventional, kSourceDirect};
    cfg.topn = false;
    const auto res = run_pipeline(cfg, loaded);
    CHECK(res.curves.size() == 8);
    std::set<std::string> keys;
    for (const auto& c : res.curves) {
      keys.insert(c.method + "/" + c.posterior_source + "/" + c.subset);
      CHECK(c.points.size() == 4);
    }
    CHECK(keys.size() == 8);
    CHECK(res.tuning.size() == 2 * 2 * 3);
  }
  SUBCASE("TOPN adds curves keyed to the hierarchical method") {
    cfg.sources = {kSourceConventional, kSourceDirect};
    const auto res = run_pipeline(cfg, loaded);
    CHECK(res.curves.size() == 16);
    int topn = 0;
    for (const auto& c : res.curves) topn += c.method.rfind("topn-", 0) == 0;
    CHECK(topn == 8);
  }
  SUBCASE("debiased variants") {
    cfg.sources = {kSourceConventional};
    cfg.topn = false;
    cfg.debias = true;
    const auto res = run_pipeline(cfg, loaded);
    CHECK(res.curves.size() == 8);
    bool found = false;
    for (const auto& c : res.curves) found |= c.posterior_source == "conventional-debiased";
    CHECK(found);
  }
  SUBCASE("records and summary are consistent") {
    const auto res = run_pipeline(cfg, loaded);
    const auto csv = io::records_to_csv(res.records, loaded.catalog);
    CHECK(io::records_to_csv(io::records_from_csv(csv, loaded.catalog), loaded.catalog) == csv);
    const auto sum = summary_to_csv(res.summary);
    CHECK(summary_to_csv(summary_from_csv(sum)) == sum);
    const auto curves = io::curves_to_csv(res.curves);
    CHECK(io::curves_to_csv(io::curves_from_csv(curves)) == curves);
    for (const auto& r : res.records) {
      if (r.posterior_source.rfind(kSourceConventional, 0) == 0) CHECK(r.leaf_baseline == 8);
      else CHECK(r.leaf_baseline == 10);
    }
    std::set<std::string> selections;
    for (const auto& s : res.summary) selections.insert(s.selection.substr(0, 5));
    CHECK(selections.count("best-") == 1);
    CHECK(selections.count("tuned") == 1);
    CHECK(selections.count("ranki") == 1);
  }
}

TEST_CASE("results do not depend on the job count") {
  TempDir dir;
  const auto data = synth::generate(tiny());
  auto cfg = write_dataset(dir.path, data);
  cfg.out = dir.path / "j1";
  cfg.jobs = 1;
  run_experiment(cfg);
  cfg.out = dir.path / "j8";
  cfg.jobs = 8;
  run_experiment(cfg);
  for (const char* f : {"hierarchy.json", "models.json", "tuning.csv", "curves.csv", "records.csv", "summary.csv",
                        "manifest.txt"}) {
    INFO(f);
    CHECK(slurp(dir.path / "j1" / f) == slurp(dir.path / "j8" / f));
  }
  CHECK_FALSE(fs::exists(dir.path / "j1" / "INVALID"));

  // the manifest reproduces the run
  auto replay = ExperimentConfig::from_file(dir.path / "j1" / "manifest.txt");
  replay.out = dir.path / "replay";
  run_experiment(replay);
  CHECK(slurp(dir.path / "replay" / "summary.csv") == slurp(dir.path / "j1" / "summary.csv"));
  CHECK(slurp(dir.path / "replay" / "records.csv") == slurp(dir.path / "j1" / "records.csv"));

  // saved models and hierarchy give the same tables
  auto reuse = cfg;
  reuse.models = dir.path / "j1" / "models.json";
  reuse.hierarchy = dir.path / "j1" / "hierarchy.json";
  reuse.out = dir.path / "reuse";
  run_experiment(reuse);
  CHECK(slurp(dir.path / "reuse" / "curves.csv") == slurp(dir.path / "j1" / "curves.csv"));
}

TEST_CASE("failures are stage-tagged and mark the output invalid") {
  TempDir dir;
  const auto data = synth::generate(tiny());
  auto cfg = write_dataset(dir.path, data);
  cfg.out = dir.path / "out";
  run_experiment(cfg);
  REQUIRE_FALSE(fs::exists(cfg.out / "INVALID"));

  io::write_text(dir.path / "test.csv", "item_id,label,f0\nbroken,c0,1\n");
  try {
    run_experiment(cfg);
    FAIL("no error raised");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load");
  }
  CHECK(fs::exists(cfg.out / "INVALID"));

  auto missing = cfg;
  missing.catalog = dir.path / "nope.csv";
  try {
    run_experiment(missing);
    FAIL("no error raised");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load");
  }

  io::write_features(data.split.test, data.catalog, dir.path / "test.csv");
  auto bad_models = cfg;
  bad_models.models = dir.path / "garbage.json";
  io::write_text(bad_models.models, "{}");
  CHECK_THROWS_AS(run_experiment(bad_models), StageError);

  run_experiment(cfg);
  CHECK_FALSE(fs::exists(cfg.out / "INVALID"));
}
