// Command-line front end: synthetic data generation and the experiment stages.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "zsl/experiment.hpp"
#include "zsl/io.hpp"
#include "zsl/synthetic.hpp"

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> jobs;
};

zsl::synth::SynthConfig synth_config(const zsl::io::KeyValues& kv) {
  zsl::synth::SynthConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "classes") c.classes = std::stoi(v);
    else if (k == "novel") c.novel = std::stoi(v);
    else if (k == "dim") c.dim = std::stoi(v);
    else if (k == "attributes") c.attributes = std::stoi(v);
    else if (k == "noise") c.noise = std::stod(v);
    else if (k == "flip_rate") c.flip_rate = std::stod(v);
    else if (k == "embedding_scale") c.embedding_scale = std::stod(v);
    else if (k == "jitter") c.jitter = std::stod(v);
    else if (k == "items_per_class") c.items_per_class = std::stoi(v);
    else if (k == "train_fraction") c.train_fraction = std::stod(v);
    else if (k == "validation_fraction") c.validation_fraction = std::stod(v);
    else if (k == "test_fraction") c.test_fraction = std::stod(v);
    else if (k == "seed") c.seed = std::stoull(v);
    else throw std::invalid_argument("unknown generator key: " + k);
  }
  return c;
}

std::string synth_to_text(const zsl::synth::SynthConfig& c) {
  using zsl::io::format_double;
  zsl::io::KeyValues kv{{"classes", std::to_string(c.classes)},
                        {"novel", std::to_string(c.novel)},
                        {"dim", std::to_string(c.dim)},
                        {"attributes", std::to_string(c.attributes)},
                        {"noise", format_double(c.noise)},
                        {"flip_rate", format_double(c.flip_rate)},
                        {"embedding_scale", format_double(c.embedding_scale)},
                        {"jitter", format_double(c.jitter)},
                        {"items_per_class", std::to_string(c.items_per_class)},
                        {"train_fraction", format_double(c.train_fraction)},
                        {"validation_fraction", format_double(c.validation_fraction)},
                        {"test_fraction", format_double(c.test_fraction)},
                        {"seed", std::to_string(c.seed)}};
  return zsl::io::key_values_to_text(kv);
}

void run_gen(const Globals& g) {
  zsl::synth::SynthConfig c;
  try {
    c = synth_config(g.config.empty() ? zsl::io::KeyValues{} : zsl::io::read_key_values(g.config));
    if (g.seed) c.seed = *g.seed;
  } catch (const std::exception& e) {
    throw zsl::StageError("gen", e.what());
  }
  const std::filesystem::path out = g.out.empty() ? std::filesystem::path("synthetic") : std::filesystem::path(g.out);
  try {
    const auto data = zsl::synth::generate(c);
    zsl::io::write_catalog(data.catalog, out / "catalog.csv");
    zsl::io::write_attribute_matrix(data.attributes, out / "attributes.csv");
    zsl::io::write_features(data.split.train, data.catalog, out / "train.csv");
    zsl::io::write_features(data.split.validation, data.catalog, out / "validation.csv");
    zsl::io::write_features(data.split.test, data.catalog, out / "test.csv");
    zsl::io::export_hierarchy(data.tree, data.catalog, out / "generating_tree.json");
    zsl::io::write_text(out / "generator.txt", synth_to_text(c));
    zsl::ExperimentConfig exp;
    exp.catalog = "catalog.csv";
    exp.attributes = "attributes.csv";
    exp.features_train = "train.csv";
    exp.features_validation = "validation.csv";
    exp.features_test = "test.csv";
    exp.seed = c.seed;
    zsl::io::write_text(out / "experiment.cfg", zsl::io::key_values_to_text(exp.to_key_values()));
    std::cout << "wrote synthetic dataset to " << out.string() << "\n";
  } catch (const std::exception& e) {
    throw zsl::StageError("gen", e.what());
  }
}

zsl::ExperimentConfig experiment_config(const Globals& g) {
  try {
    if (g.config.empty()) throw std::invalid_argument("--config is required");
    auto c = zsl::ExperimentConfig::from_file(g.config);
    if (g.seed) c.seed = *g.seed;
    if (!g.out.empty()) c.out = g.out;
    if (g.jobs) c.jobs = *g.jobs;
    return c;
  } catch (const zsl::StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw zsl::StageError("config", e.what());
  }
}

std::optional<zsl::io::ModelBundle> maybe_models(const zsl::ExperimentConfig& c) {
  if (c.models.empty()) return std::nullopt;
  try {
    return zsl::io::models_from_text(zsl::io::read_text(c.models));
  } catch (const std::exception& e) {
    throw zsl::StageError("train", e.what());
  }
}

void write_or_tag(const std::filesystem::path& path, const std::string& text) {
  try {
    zsl::io::write_text(path, text);
  } catch (const std::exception& e) {
    throw zsl::StageError("write", e.what());
  }
}

void print_summary(const std::vector<zsl::SummaryRow>& rows) {
  std::printf("%-16s %-26s %-10s %-14s %10s %8s %9s %9s %7s\n", "method", "posterior_source", "subset", "selection",
              "param", "acc", "gain", "gain_nom", "mra");
  for (const auto& r : rows) {
    std::printf("%-16s %-26s %-10s %-14s %10.4g %8.4f %9.4f %9.4f %7.4f\n", r.method.c_str(),
                r.posterior_source.c_str(), r.subset.c_str(), r.selection.c_str(), r.param, r.accuracy,
                r.info_gain_strict, r.info_gain_nominal, r.mra);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind zero-shot classification with hierarchical and attribute-based classifiers"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Configuration file (key = value)");
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  auto* tree = app.add_subcommand("build-tree", "Build the class hierarchy from the attribute matrix");
  auto* train = app.add_subcommand("train", "Train classifiers and attribute error models");
  auto* tune = app.add_subcommand("tune", "Tune lambda and theta on the validation split");
  auto* eval = app.add_subcommand("eval", "Evaluate tuned and best settings on the test split");
  auto* sweep = app.add_subcommand("sweep", "Sweep parameter grids and write curves and records");
  auto* report = app.add_subcommand("report", "Run the full pipeline and print the summary table");
  for (auto* s : {gen, tree, train, tune, eval, sweep, report}) s->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      run_gen(g);
      return 0;
    }
    const auto cfg = experiment_config(g);
    const auto& out = cfg.out;
    if (report->parsed()) {
      const auto res = zsl::run_experiment(cfg);
      print_summary(res.summary);
      std::cout << "results in " << out.string() << "\n";
      return 0;
    }
    const auto data = zsl::load_data(cfg);
    if (tree->parsed()) {
      const auto h = zsl::resolve_hierarchy(data);
      try {
        zsl::io::export_hierarchy(h, data.catalog, out / "hierarchy.json");
      } catch (const std::exception& e) {
        throw zsl::StageError("write", e.what());
      }
    } else if (train->parsed()) {
      write_or_tag(out / "models.json", zsl::io::models_to_text(zsl::train_models(cfg, data)));
    } else {
      const auto res = zsl::run_pipeline(cfg, data, maybe_models(cfg));
      if (tune->parsed()) write_or_tag(out / "tuning.csv", zsl::tuning_to_csv(res.tuning));
      if (eval->parsed()) {
        write_or_tag(out / "tuning.csv", zsl::tuning_to_csv(res.tuning));
        write_or_tag(out / "summary.csv", zsl::summary_to_csv(res.summary));
        print_summary(res.summary);
      }
      if (sweep->parsed()) {
        write_or_tag(out / "curves.csv", zsl::io::curves_to_csv(res.curves));
        write_or_tag(out / "records.csv", zsl::io::records_to_csv(res.records, data.catalog));
      }
    }
    return 0;
  } catch (const zsl::StageError& e) {
    std::cerr << "zsl: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "zsl: error: [cli] " << e.what() << "\n";
    return 2;
  }
}
