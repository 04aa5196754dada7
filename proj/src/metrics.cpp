#include "zsl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace zsl {

Outcome info_gain_node(const Hierarchy& tree, int node_id, int true_class) {
  if (!tree.contains_class(true_class)) {
    throw std::invalid_argument("true class is not a leaf of the evaluation tree: " + std::to_string(true_class));
  }
  return info_gain_node(CorrectnessJudge(tree), node_id, true_class);
}

Outcome info_gain_node(const CorrectnessJudge& judge, int node_id, int true_class) {
  return Outcome{judge.tree().node(node_id).reward, judge.correct(node_id, true_class)};
}

double info_gain_rank(int rank, int baseline) {
  if (rank < 1) throw std::invalid_argument("rank must be at least 1");
  return std::log2(static_cast<double>(baseline)) - std::log2(static_cast<double>(rank));
}

double mra_flat(std::span<const double> ranks, int baseline) {
  if (ranks.empty()) throw std::invalid_argument("mean rank accuracy of an empty set");
  double total = 0.0;
  for (double r : ranks) total += r;
  return 1.0 - (total / static_cast<double>(ranks.size())) / static_cast<double>(baseline);
}

double mra_hierarchical_rank(const CorrectnessJudge& judge, int node_id, int true_class, int baseline) {
  const double n = judge.tree().node(node_id).leaf_count;
  if (judge.correct(node_id, true_class)) return std::max(1.0, n / 2.0);
  return n + (baseline - n) / 2.0;
}

Outcome topn_eval(std::span<const int> top, int true_class, int baseline) {
  if (top.empty()) throw std::invalid_argument("top-N list must be non-empty");
  const bool hit = std::find(top.begin(), top.end(), true_class) != top.end();
  const double reward =
      std::max(0.0, std::log2(static_cast<double>(baseline)) - std::log2(static_cast<double>(top.size())));
  return Outcome{reward, hit};
}

std::string method_name(HierMethod m) { return m == HierMethod::darts ? "darts" : "maxexp"; }

namespace {

struct Accumulator {
  std::size_t n = 0;
  std::size_t hits = 0;
  double strict = 0.0;
  double nominal = 0.0;

  void add(const Outcome& o) {
    ++n;
    hits += o.correct ? 1 : 0;
    strict += o.strict_reward();
    nominal += o.reward;
  }
  CurvePoint point(double param) const {
    CurvePoint p;
    p.param = param;
    p.n_items = n;
    if (n > 0) {
      const double dn = static_cast<double>(n);
      p.accuracy = static_cast<double>(hits) / dn;
      p.reward_strict = strict / dn;
      p.reward_nominal = nominal / dn;
    } else {
      p.accuracy = p.reward_strict = p.reward_nominal = std::nan("");
    }
    return p;
  }
};

}  // namespace

std::vector<SweepCurve> sweep(HierMethod method, std::span<const double> grid, const SweepInput& input,
                              std::vector<EvalRecord>* records) {
  if (!input.judge) throw std::invalid_argument("sweep needs a correctness judge");
  if (input.node_probs.size() != input.items.size()) throw std::invalid_argument("sweep inputs are misaligned");
  if (input.rankings && input.rankings->size() != input.items.size()) {
    throw std::invalid_argument("sweep rankings are misaligned");
  }
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (!(grid[g] > grid[g - 1])) throw std::invalid_argument("sweep grid must be strictly increasing");
  }
  const Hierarchy& tree = input.judge->tree();
  const int baseline = tree.leaf_total();
  const std::string name = method_name(method);
  const std::string topn_name = "topn-" + name;
  const bool with_topn = input.rankings != nullptr;

  SweepCurve plain[2], topn[2];
  const char* subsets[2] = {"non-novel", "novel"};
  for (int s = 0; s < 2; ++s) {
    plain[s] = SweepCurve{name, input.posterior_source, subsets[s], {}};
    topn[s] = SweepCurve{topn_name, input.posterior_source, subsets[s], {}};
  }

  for (double param : grid) {
    Accumulator acc[2], acc_topn[2];
    for (std::size_t i = 0; i < input.items.size(); ++i) {
      const auto& item = input.items[i];
      const NodePrediction pred = method == HierMethod::darts ? darts_classify(tree, input.node_probs[i], param)
                                                              : maxexp_classify(tree, input.node_probs[i], param);
      const Outcome o = info_gain_node(*input.judge, pred.node_id, item.true_class);
      acc[item.novel].add(o);
      if (records) {
        records->push_back(EvalRecord{item.item_id, item.true_class, item.novel, name, input.posterior_source, param,
                                      pred.node_id, pred.leaf_count, baseline, o.reward, o.correct});
      }
      if (with_topn) {
        const TopN top = topn_combine(pred, (*input.rankings)[i]);
        const Outcome t = topn_eval(top.classes, item.true_class, baseline);
        acc_topn[item.novel].add(t);
        if (records) {
          records->push_back(EvalRecord{item.item_id, item.true_class, item.novel, topn_name, input.posterior_source,
                                        param, pred.node_id, static_cast<int>(top.classes.size()), baseline, t.reward,
                                        t.correct});
        }
      }
    }
    for (int s = 0; s < 2; ++s) {
      plain[s].points.push_back(acc[s].point(param));
      if (with_topn) topn[s].points.push_back(acc_topn[s].point(param));
    }
  }

  std::vector<SweepCurve> out{plain[0], plain[1]};
  if (with_topn) {
    out.push_back(topn[0]);
    out.push_back(topn[1]);
  }
  return out;
}

std::optional<double> reward_at_accuracy(const SweepCurve& curve, double accuracy, bool strict) {
  // Upper envelope of reward per distinct accuracy, then linear interpolation.
  std::map<double, double> best;
  for (const auto& p : curve.points) {
    if (p.n_items == 0) continue;
    const double r = strict ? p.reward_strict : p.reward_nominal;
    auto [it, inserted] = best.emplace(p.accuracy, r);
    if (!inserted) it->second = std::max(it->second, r);
  }
  if (best.empty()) return std::nullopt;
  if (accuracy < best.begin()->first - 1e-12 || accuracy > best.rbegin()->first + 1e-12) return std::nullopt;
  auto hi = best.lower_bound(accuracy);
  if (hi == best.end()) return best.rbegin()->second;
  if (hi->first == accuracy || hi == best.begin()) return hi->second;
  auto lo = std::prev(hi);
  const double t = (accuracy - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

}  // namespace zsl
