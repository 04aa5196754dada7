#include "zsl/experiment.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <cmath>
#include <set>
#include <sstream>

#include "zsl/attributes.hpp"
#include "zsl/hier_classifiers.hpp"
#include "zsl/kernels.hpp"
#include "zsl/linear.hpp"
#include "zsl/parallel.hpp"
#include "zsl/rng.hpp"

namespace zsl {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr std::uint64_t kConventionalStream = 11;
constexpr std::uint64_t kDirectStream = 12;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = cur.find_last_not_of(" \t");
    out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) {
    try {
      out.push_back(io::parse_double(s));
    } catch (const std::exception&) {
      throw std::invalid_argument("config key " + key + ": bad number '" + s + "'");
    }
  }
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += io::format_double(values[i]);
  }
  return out;
}

std::string join(const std::vector<std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += values[i];
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw std::invalid_argument("config key " + key + ": expected a boolean, got '" + v + "'");
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

template <class F>
auto staged(const std::string& stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::string epsilon_tag(double eps) { return "tuned-eps=" + io::format_double(eps); }

}  // namespace

std::vector<double> default_lambda_grid() {
  std::vector<double> grid{0.0};
  for (int k = 0; k < 19; ++k) grid.push_back(std::pow(10.0, -2.0 + k / 3.0));
  return grid;
}

std::vector<double> default_theta_grid() {
  std::vector<double> grid;
  for (int k = 0; k < 20; ++k) grid.push_back(k * 0.05);
  return grid;
}

ExperimentConfig::ExperimentConfig() : lambda_grid(default_lambda_grid()), theta_grid(default_theta_grid()) {}

ExperimentConfig ExperimentConfig::from_key_values(const io::KeyValues& kv, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
  };
  for (const auto& [key, value] : kv) {
    if (key == "catalog") c.catalog = path_of(value);
    else if (key == "attributes") c.attributes = path_of(value);
    else if (key == "features_train") c.features_train = path_of(value);
    else if (key == "features_validation") c.features_validation = path_of(value);
    else if (key == "features_test") c.features_test = path_of(value);
    else if (key == "hierarchy") c.hierarchy = value.empty() ? std::filesystem::path() : path_of(value);
    else if (key == "models") c.models = value.empty() ? std::filesystem::path() : path_of(value);
    else if (key == "methods") {
      c.methods.clear();
      for (const auto& m : split_list(value)) {
        if (m == "darts") c.methods.push_back(HierMethod::darts);
        else if (m == "maxexp") c.methods.push_back(HierMethod::maxexp);
        else throw std::invalid_argument("unknown method: " + m);
      }
    } else if (key == "sources") c.sources = split_list(value);
    else if (key == "topn") c.topn = parse_bool(key, value);
    else if (key == "topn_ranking") c.topn_ranking = value;
    else if (key == "debias") c.debias = parse_bool(key, value);
    else if (key == "epsilons") c.epsilons = parse_doubles(key, value);
    else if (key == "lambda_grid") c.lambda_grid = parse_doubles(key, value);
    else if (key == "theta_grid") c.theta_grid = parse_doubles(key, value);
    else if (key == "svm_c") c.svm_c = io::parse_double(value);
    else if (key == "indirect_threshold") c.indirect_threshold = io::parse_double(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "jobs") c.jobs = std::stoi(value);
    else if (key == "out") c.out = path_of(value);
    else if (key == "version" || key == "kernels" || key.rfind("resolved.", 0) == 0) continue;  // manifest info
    else throw std::invalid_argument("unknown config key: " + key);
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  return from_key_values(io::read_key_values(path), path.parent_path());
}

io::KeyValues ExperimentConfig::to_key_values() const {
  io::KeyValues kv;
  kv["catalog"] = catalog.string();
  kv["attributes"] = attributes.string();
  kv["features_train"] = features_train.string();
  kv["features_validation"] = features_validation.string();
  kv["features_test"] = features_test.string();
  kv["hierarchy"] = hierarchy.string();
  kv["models"] = models.string();
  std::vector<std::string> m;
  for (auto h : methods) m.push_back(method_name(h));
  kv["methods"] = join(m);
  kv["sources"] = join(sources);
  kv["topn"] = topn ? "1" : "0";
  kv["topn_ranking"] = topn_ranking;
  kv["debias"] = debias ? "1" : "0";
  kv["epsilons"] = join_doubles(epsilons);
  kv["lambda_grid"] = join_doubles(lambda_grid);
  kv["theta_grid"] = join_doubles(theta_grid);
  kv["svm_c"] = io::format_double(svm_c);
  kv["indirect_threshold"] = io::format_double(indirect_threshold);
  kv["seed"] = std::to_string(seed);
  return kv;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw std::invalid_argument("no methods selected");
  if (sources.empty()) throw std::invalid_argument("no posterior sources selected");
  std::set<std::string> seen;
  for (const auto& s : sources) {
    if (s != kSourceConventional && s != kSourceDirect && s != kSourceIndirect) {
      throw std::invalid_argument("unknown posterior source: " + s);
    }
    if (!seen.insert(s).second) throw std::invalid_argument("duplicate posterior source: " + s);
  }
  if (topn_ranking != kSourceDirect && topn_ranking != kSourceIndirect) {
    throw std::invalid_argument("topn_ranking must be an attribute source");
  }
  if (epsilons.empty()) throw std::invalid_argument("no epsilon values");
  for (double e : epsilons) {
    if (!(e >= 0.0 && e < 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1)");
  }
  auto check_grid = [](const std::vector<double>& g, const char* name, double lo, double hi) {
    if (g.empty()) throw std::invalid_argument(std::string(name) + " is empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(g[i] >= lo && g[i] <= hi)) throw std::invalid_argument(std::string(name) + " value out of range");
      if (i && !(g[i] > g[i - 1])) throw std::invalid_argument(std::string(name) + " must be strictly increasing");
    }
  };
  check_grid(lambda_grid, "lambda_grid", 0.0, 1e300);
  check_grid(theta_grid, "theta_grid", 0.0, std::nextafter(1.0, 0.0));
  if (!(svm_c > 0.0) || !std::isfinite(svm_c)) throw std::invalid_argument("svm_c must be positive");
  if (!(indirect_threshold > 0.0 && indirect_threshold < 1.0)) {
    throw std::invalid_argument("indirect_threshold must lie in (0, 1)");
  }
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
}

void ExperimentConfig::validate_paths() const {
  for (const auto* p : {&catalog, &attributes, &features_train, &features_validation, &features_test}) {
    if (p->empty()) throw std::invalid_argument("an input path is missing from the config");
    if (!std::filesystem::exists(*p)) throw std::invalid_argument("input file does not exist: " + p->string());
  }
  if (!hierarchy.empty() && !std::filesystem::exists(hierarchy)) {
    throw std::invalid_argument("hierarchy file does not exist: " + hierarchy.string());
  }
  if (!models.empty() && !std::filesystem::exists(models)) {
    throw std::invalid_argument("models file does not exist: " + models.string());
  }
}

ExperimentData load_data(const ExperimentConfig& config) {
  return staged("load", [&] {
    config.validate();
    config.validate_paths();
    ExperimentData d;
    d.catalog = io::read_catalog(config.catalog);
    d.attributes = io::read_attribute_matrix(config.attributes);
    d.split.train = io::read_features(config.features_train, d.catalog);
    d.split.validation = io::read_features(config.features_validation, d.catalog);
    d.split.test = io::read_features(config.features_test, d.catalog);
    check_split(d.split, d.catalog);
    std::vector<FeatureRecord> all;
    for (const auto* part : {&d.split.train, &d.split.validation, &d.split.test}) {
      all.insert(all.end(), part->begin(), part->end());
    }
    feature_dimension(all);
    for (const auto* part : {&d.split.train, &d.split.validation, &d.split.test}) {
      for (const auto& r : *part) {
        if (!r.class_id) throw std::invalid_argument("record " + r.item_id + " has no label; evaluation needs labels");
      }
    }
    if (!config.hierarchy.empty()) d.hierarchy = io::import_hierarchy(config.hierarchy, d.catalog);
    return d;
  });
}

Hierarchy resolve_hierarchy(const ExperimentData& data) {
  return staged("build-tree", [&] {
    Hierarchy tree = data.hierarchy ? *data.hierarchy : build_hierarchy(data.attributes).tree;
    const auto report = validate_catalog(data.catalog, data.attributes, tree);
    if (!report.ok()) throw std::invalid_argument("inconsistent inputs: " + report.violations.front());
    return tree;
  });
}

io::ModelBundle train_models(const ExperimentConfig& config, const ExperimentData& data) {
  return staged("train", [&] {
    io::ModelBundle b;
    LinearTrainOptions conv;
    conv.c = config.svm_c;
    conv.seed = derive_seed(config.seed, kConventionalStream);
    const auto seen = data.catalog.non_novel();
    b.conventional = train_one_vs_rest(data.split.train, seen, conv, config.jobs);
    LinearTrainOptions direct = conv;
    direct.seed = derive_seed(config.seed, kDirectStream);
    b.direct = train_direct_attribute_classifiers(data.split.train, data.attributes, direct, config.jobs);
    b.direct_errors = estimate_direct_error_model(b.direct, data.split.validation, data.attributes);
    b.indirect_threshold = config.indirect_threshold;
    b.indirect_errors = estimate_indirect_error_model(b.conventional, data.split.validation, data.attributes,
                                                      config.indirect_threshold);
    return b;
  });
}

namespace {

// Posteriors of one source on validation and test.
struct SourcePosteriors {
  std::vector<Posterior> validation;
  std::vector<Posterior> test;
};

SourcePosteriors predict_source(const std::string& source, const io::ModelBundle& m, const ExperimentData& data,
                                int jobs) {
  auto one = [&](const FeatureRecord& r) {
    if (source == kSourceConventional) return predict_leaf_posterior(m.conventional, r.features);
    if (source == kSourceDirect) {
      return class_likelihoods_ml(predict_attributes_direct(m.direct, r.features), data.attributes, m.direct_errors);
    }
    const Posterior leaf = predict_leaf_posterior(m.conventional, r.features);
    return class_likelihoods_ml(predict_attributes_indirect(leaf, data.attributes, m.indirect_threshold),
                                data.attributes, m.indirect_errors);
  };
  SourcePosteriors out;
  out.validation.resize(data.split.validation.size());
  out.test.resize(data.split.test.size());
  parallel_for(out.validation.size(), jobs, [&](std::size_t i) { out.validation[i] = one(data.split.validation[i]); });
  parallel_for(out.test.size(), jobs, [&](std::size_t i) { out.test[i] = one(data.split.test[i]); });
  return out;
}

// One posterior source as fed to the hierarchical classifiers.
struct Arm {
  std::string name;  // posterior_source column
  const CorrectnessJudge* judge = nullptr;
  std::vector<std::vector<double>> validation_nodes;
  std::vector<std::vector<double>> test_nodes;
  const std::vector<std::vector<int>>* rankings = nullptr;
};

struct SubsetStats {
  std::size_t n = 0;
  std::size_t hits = 0;
  double strict = 0.0, nominal = 0.0, rank_sum = 0.0;
};

NodePrediction classify(HierMethod method, const Hierarchy& tree, std::span<const double> probs, double param) {
  return method == HierMethod::darts ? darts_classify(tree, probs, param) : maxexp_classify(tree, probs, param);
}

std::array<SubsetStats, 2> evaluate_at(HierMethod method, const Arm& arm, const std::vector<EvalItem>& items,
                                       double param) {
  std::array<SubsetStats, 2> s{};
  const Hierarchy& tree = arm.judge->tree();
  const int baseline = tree.leaf_total();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto pred = classify(method, tree, arm.test_nodes[i], param);
    const Outcome o = info_gain_node(*arm.judge, pred.node_id, items[i].true_class);
    auto& t = s[items[i].novel];
    ++t.n;
    t.hits += o.correct;
    t.strict += o.strict_reward();
    t.nominal += o.reward;
    t.rank_sum += mra_hierarchical_rank(*arm.judge, pred.node_id, items[i].true_class, baseline);
  }
  return s;
}

SummaryRow summary_row(const std::string& method, const std::string& source, int subset, const std::string& sel,
                       double param, const SubsetStats& s, int baseline) {
  SummaryRow r{method, source, subset ? "novel" : "non-novel", sel, param, 0, 0, 0, 0, baseline, s.n};
  if (s.n == 0) {
    r.accuracy = r.info_gain_strict = r.info_gain_nominal = r.mra = std::nan("");
    return r;
  }
  const double n = static_cast<double>(s.n);
  r.accuracy = s.hits / n;
  r.info_gain_strict = s.strict / n;
  r.info_gain_nominal = s.nominal / n;
  r.mra = 1.0 - (s.rank_sum / n) / baseline;
  return r;
}

}  // namespace

ExperimentResult run_pipeline(const ExperimentConfig& config, const ExperimentData& data,
                              const std::optional<io::ModelBundle>& models) {
  staged("config", [&] {
    config.validate();
    return 0;
  });
  ExperimentResult res;
  res.tree = resolve_hierarchy(data);
  const auto novel = data.catalog.novel();
  const PrunedHierarchy pruned = staged("build-tree", [&] { return prune_novel(res.tree, novel); });
  const CorrectnessJudge full_judge(res.tree);
  const CorrectnessJudge pruned_judge(pruned.tree, res.tree, pruned.source_node);

  res.models = models ? *models : train_models(config, data);
  staged("train", [&] {
    const std::size_t d = feature_dimension(data.split.train);
    if (res.models.conventional.dimension != d || res.models.direct.dimension != d) {
      throw std::invalid_argument("model dimension does not match the features");
    }
    if (res.models.conventional.classes != data.catalog.non_novel()) {
      throw std::invalid_argument("model classes do not match the catalog's seen classes");
    }
    if (res.models.direct.attributes.size() != data.attributes.cols()) {
      throw std::invalid_argument("model attribute count does not match the attribute matrix");
    }
    return 0;
  });

  // Posteriors for every source that any arm or ranking needs.
  std::vector<std::string> needed = config.sources;
  const bool conv_topn = config.topn && contains(config.sources, kSourceConventional);
  if (conv_topn && !contains(needed, config.topn_ranking)) needed.push_back(config.topn_ranking);
  std::map<std::string, SourcePosteriors> post;
  staged("predict", [&] {
    for (const auto& s : needed) post[s] = predict_source(s, res.models, data, config.jobs);
    return 0;
  });

  std::vector<int> val_truth;
  for (const auto& r : data.split.validation) val_truth.push_back(*r.class_id);
  std::vector<EvalItem> items;
  for (const auto& r : data.split.test) items.push_back(EvalItem{r.item_id, *r.class_id, data.catalog.at(*r.class_id).novel});

  std::map<std::string, std::vector<std::vector<int>>> rankings;
  for (const auto& [name, p] : post) {
    if (name == kSourceConventional) continue;
    auto& r = rankings[name];
    r.resize(p.test.size());
    parallel_for(r.size(), config.jobs, [&](std::size_t i) { r[i] = rank_classes(p.test[i]).order; });
  }

  std::vector<Arm> arms;
  staged("predict", [&] {
    for (const auto& s : config.sources) {
      const bool conv = s == kSourceConventional;
      const Hierarchy& tree = conv ? pruned.tree : res.tree;
      for (int debiased = 0; debiased <= (config.debias ? 1 : 0); ++debiased) {
        Arm arm;
        arm.name = debiased ? s + "-debiased" : s;
        arm.judge = conv ? &pruned_judge : &full_judge;
        if (config.topn) arm.rankings = &rankings.at(conv ? config.topn_ranking : s);
        const auto& p = post.at(s);
        std::vector<Posterior> val = p.validation, test = p.test;
        if (debiased) {
          const Matrix confusion = confusion_from_predictions(p.validation.front().class_set, p.validation, val_truth);
          parallel_for(val.size(), config.jobs, [&](std::size_t i) { val[i] = debias_posterior(confusion, val[i]); });
          parallel_for(test.size(), config.jobs, [&](std::size_t i) { test[i] = debias_posterior(confusion, test[i]); });
        }
        arm.validation_nodes.resize(val.size());
        arm.test_nodes.resize(test.size());
        parallel_for(val.size(), config.jobs,
                     [&](std::size_t i) { arm.validation_nodes[i] = aggregate_posterior(tree, val[i]); });
        parallel_for(test.size(), config.jobs,
                     [&](std::size_t i) { arm.test_nodes[i] = aggregate_posterior(tree, test[i]); });
        arms.push_back(std::move(arm));
      }
    }
    return 0;
  });

  // Tuning on validation.
  std::vector<std::vector<TuneResult>> tuned(arms.size() * config.methods.size());
  staged("tune", [&] {
    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    for (std::size_t a = 0; a < arms.size(); ++a) {
      for (std::size_t m = 0; m < config.methods.size(); ++m) tasks.emplace_back(a, m);
    }
    parallel_for(tasks.size(), config.jobs, [&](std::size_t t) {
      const auto [a, m] = tasks[t];
      TuningSet set{arms[a].validation_nodes, val_truth};
      auto& out = tuned[a * config.methods.size() + m];
      for (double eps : config.epsilons) {
        out.push_back(config.methods[m] == HierMethod::darts ? darts_tune_lambda(*arms[a].judge, set, eps)
                                                             : maxexp_tune_theta(*arms[a].judge, set, eps));
      }
    });
    for (std::size_t a = 0; a < arms.size(); ++a) {
      for (std::size_t m = 0; m < config.methods.size(); ++m) {
        for (std::size_t e = 0; e < config.epsilons.size(); ++e) {
          res.tuning.push_back(TuningRow{method_name(config.methods[m]), arms[a].name, config.epsilons[e],
                                         tuned[a * config.methods.size() + m][e]});
        }
      }
    }
    return 0;
  });

  // Sweeps over the test set.
  staged("sweep", [&] {
    for (auto method : config.methods) {
      const auto& grid = method == HierMethod::darts ? config.lambda_grid : config.theta_grid;
      for (const auto& arm : arms) {
        SweepInput in;
        in.judge = arm.judge;
        in.posterior_source = arm.name;
        in.node_probs = arm.test_nodes;
        in.items = items;
        in.rankings = arm.rankings;
        auto curves = sweep(method, grid, in, &res.records);
        res.curves.insert(res.curves.end(), curves.begin(), curves.end());
      }
    }
    return 0;
  });

  // Table-style summary.
  staged("eval", [&] {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      const HierMethod method = config.methods[m];
      const std::string name = method_name(method);
      const auto& grid = method == HierMethod::darts ? config.lambda_grid : config.theta_grid;
      for (std::size_t a = 0; a < arms.size(); ++a) {
        const Arm& arm = arms[a];
        const int baseline = arm.judge->tree().leaf_total();
        std::vector<std::array<SubsetStats, 2>> per_param(grid.size());
        parallel_for(grid.size(), config.jobs,
                     [&](std::size_t g) { per_param[g] = evaluate_at(method, arm, items, grid[g]); });
        for (int subset = 0; subset < 2; ++subset) {
          std::size_t best = 0;
          double best_mra = -INFINITY;
          for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto& s = per_param[g][subset];
            if (s.n == 0) break;
            const double mra = 1.0 - (s.rank_sum / s.n) / baseline;
            if (mra > best_mra) {
              best_mra = mra;
              best = g;
            }
          }
          res.summary.push_back(summary_row(name, arm.name, subset, "best-mra", grid[best], per_param[best][subset], baseline));
          if (arm.rankings) {
            // TOPN at the same parameter; rank accuracy does not apply.
            for (const auto& c : res.curves) {
              if (c.method == "topn-" + name && c.posterior_source == arm.name &&
                  c.subset == (subset ? "novel" : "non-novel")) {
                const auto& p = c.points[best];
                res.summary.push_back(SummaryRow{c.method, arm.name, c.subset, "best-mra", p.param, p.accuracy,
                                                 p.reward_strict, p.reward_nominal, std::nan(""), baseline, p.n_items});
              }
            }
          }
        }
        for (std::size_t e = 0; e < config.epsilons.size(); ++e) {
          const double param = tuned[a * config.methods.size() + m][e].value;
          const auto stats = evaluate_at(method, arm, items, param);
          for (int subset = 0; subset < 2; ++subset) {
            res.summary.push_back(
                summary_row(name, arm.name, subset, epsilon_tag(config.epsilons[e]), param, stats[subset], baseline));
          }
        }
      }
    }
    // Flat attribute rankings over the whole catalog.
    const int k_all = static_cast<int>(data.catalog.size());
    for (const auto& s : config.sources) {
      if (s == kSourceConventional) continue;
      const auto& p = post.at(s);
      std::array<SubsetStats, 2> st{};
      for (std::size_t i = 0; i < items.size(); ++i) {
        const int rank = rank_classes(p.test[i]).rank_of(items[i].true_class);
        auto& t = st[items[i].novel];
        ++t.n;
        t.hits += rank == 1;
        const double gain = info_gain_rank(rank, k_all);
        t.strict += gain;
        t.nominal += gain;
        t.rank_sum += rank;
      }
      for (int subset = 0; subset < 2; ++subset) {
        res.summary.push_back(summary_row("mle-rank", s, subset, "ranking", std::nan(""), st[subset], k_all));
      }
    }
    return 0;
  });
  return res;
}

std::string tuning_to_csv(const std::vector<TuningRow>& rows) {
  std::string out = "method,posterior_source,epsilon,value,validation_accuracy,unreachable\n";
  for (const auto& r : rows) {
    out += r.method + "," + r.posterior_source + "," + io::format_double(r.epsilon) + "," +
           io::format_double(r.result.value) + "," + io::format_double(r.result.accuracy) + "," +
           (r.result.unreachable ? "1" : "0") + "\n";
  }
  return out;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "method,posterior_source,subset,selection,param,avg_accuracy,avg_info_gain_strict,avg_info_gain_nominal,mra,"
      "leaf_baseline,n_items\n";
  for (const auto& r : rows) {
    out += r.method + "," + r.posterior_source + "," + r.subset + "," + r.selection + "," + io::format_double(r.param) +
           "," + io::format_double(r.accuracy) + "," + io::format_double(r.info_gain_strict) + "," +
           io::format_double(r.info_gain_nominal) + "," + io::format_double(r.mra) + "," +
           std::to_string(r.leaf_baseline) + "," + std::to_string(r.n_items) + "\n";
  }
  return out;
}

std::vector<SummaryRow> summary_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line.rfind("method,posterior_source,subset,selection,", 0) != 0) {
    throw io::FormatError("summary", 1, "unexpected summary header");
  }
  std::vector<SummaryRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 11) throw io::FormatError("summary", n, "expected 11 fields");
    rows.push_back(SummaryRow{f[0], f[1], f[2], f[3], io::parse_double(f[4]), io::parse_double(f[5]),
                              io::parse_double(f[6]), io::parse_double(f[7]), io::parse_double(f[8]), std::stoi(f[9]),
                              static_cast<std::size_t>(std::stoull(f[10]))});
  }
  return rows;
}

std::string manifest_text(const ExperimentConfig& config) {
  io::KeyValues kv = config.to_key_values();
  kv["version"] = kVersion;
  kv["kernels"] = kernels::isa_name(kernels::active_isa());
  kv["resolved.attribute_floor"] = io::format_double(kAttributeFloor);
  kv["resolved.lambda_cap"] = io::format_double(kLambdaCap);
  kv["resolved.lambda_tolerance"] = io::format_double(DartsParams{}.tolerance);
  kv["resolved.svm_gap_tolerance"] = io::format_double(LinearTrainOptions{}.gap_tolerance);
  kv["resolved.svm_max_epochs"] = std::to_string(LinearTrainOptions{}.max_epochs);
  kv["resolved.seed.conventional"] = std::to_string(derive_seed(config.seed, kConventionalStream));
  kv["resolved.seed.direct"] = std::to_string(derive_seed(config.seed, kDirectStream));
  kv["resolved.baseline.conventional"] = "leaves of the tree pruned to seen classes";
  kv["resolved.baseline.attribute"] = "leaves of the full tree";
  kv["resolved.novel_correctness"] = "full-tree ancestor test";
  kv["resolved.topn_reward"] = "log2(baseline) - log2(N) on hit";
  kv["resolved.summary_selection"] = "best-mra on grid per subset; tuned per epsilon on validation";
  return "# zsl run manifest; usable as --config\n" + io::key_values_to_text(kv);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto marker = config.out / "INVALID";
  try {
    const ExperimentData data = load_data(config);
    std::optional<io::ModelBundle> models;
    if (!config.models.empty()) {
      models = staged("train", [&] { return io::models_from_text(io::read_text(config.models)); });
    }
    ExperimentResult res = run_pipeline(config, data, models);
    staged("write", [&] {
      std::filesystem::create_directories(config.out);
      std::filesystem::remove(marker);
      io::export_hierarchy(res.tree, data.catalog, config.out / "hierarchy.json");
      io::write_text(config.out / "models.json", io::models_to_text(res.models));
      io::write_text(config.out / "tuning.csv", tuning_to_csv(res.tuning));
      io::write_text(config.out / "curves.csv", io::curves_to_csv(res.curves));
      io::write_text(config.out / "records.csv", io::records_to_csv(res.records, data.catalog));
      io::write_text(config.out / "summary.csv", summary_to_csv(res.summary));
      io::write_text(config.out / "manifest.txt", manifest_text(config));
      return 0;
    });
    return res;
  } catch (const std::exception& e) {
    std::error_code ec;
    std::filesystem::create_directories(config.out, ec);
    if (!ec) io::write_text(marker, std::string(e.what()) + "\n");
    throw;
  }
}

}  // namespace zsl
