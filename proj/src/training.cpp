#include "morsel/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "morsel/eval.hpp"
#include "morsel/numeric.hpp"
#include "morsel/parallel.hpp"
#include "morsel/rng.hpp"

namespace morsel {

namespace {

constexpr double kAdaEps = 1e-8;

// Seed-stream tags; distinct leading constants keep the shuffle, gradient
// and dev-decoding streams disjoint.
constexpr std::uint64_t kShuffleTag = 0x100;
constexpr std::uint64_t kGradientTag = 0x200;
constexpr std::uint64_t kDevDecodeTag = 0x300;

}  // namespace

std::string_view dev_metric_name(DevMetric metric) {
  switch (metric) {
    case DevMetric::Accuracy: return "accuracy";
    case DevMetric::MorphemeF1: return "morpheme-f1";
    case DevMetric::EditDistance: return "edit-distance";
    case DevMetric::ConstituentF1: return "constituent-f1";
  }
  return "morpheme-f1";
}

std::optional<DevMetric> dev_metric_from_name(std::string_view name) {
  if (name == "accuracy") return DevMetric::Accuracy;
  if (name == "morpheme-f1") return DevMetric::MorphemeF1;
  if (name == "edit-distance") return DevMetric::EditDistance;
  if (name == "constituent-f1") return DevMetric::ConstituentF1;
  return std::nullopt;
}

namespace {

// Applies `missed` pure-decay steps to one coordinate with the accumulator
// frozen; with G = 0 the factor clamps to zero, which only ever applies to
// warm-started weights.
void decay_one(SparseFeatureVector& theta, const OptimizerState& state, std::string_view key,
               double lr, double lambda, long long missed) {
  if (missed <= 0 || lambda == 0.0) return;
  double th = theta.get(key);
  if (th == 0.0) return;
  double g2 = 0.0;
  if (auto it = state.sum_squares.find(key); it != state.sum_squares.end()) g2 = it->second;
  double factor = std::max(0.0, 1.0 - lr * lambda / std::sqrt(g2 + kAdaEps));
  theta.set(std::string(key), th * std::pow(factor, static_cast<double>(missed)));
}

long long last_touched(const OptimizerState& state, std::string_view key) {
  if (auto it = state.last_step.find(key); it != state.last_step.end()) return it->second;
  return 0;
}

}  // namespace

void adagrad_step(SparseFeatureVector& theta, const SparseFeatureVector& grad,
                  OptimizerState& state, double learning_rate, double lambda) {
  ++state.step;
  for (const auto& [key, g] : grad.entries()) {
    if (!std::isfinite(g))
      throw Error("adagrad_step: non-finite gradient for feature '" + key + "'");
    decay_one(theta, state, key, learning_rate, lambda,
              state.step - 1 - last_touched(state, key));
    double th = theta.get(key);
    double geff = g - lambda * th;
    double& g2 = state.sum_squares[key];
    g2 += geff * geff;
    theta.set(key, th + learning_rate * geff / std::sqrt(g2 + kAdaEps));
    state.last_step[key] = state.step;
  }
}

void adagrad_catch_up(SparseFeatureVector& theta, OptimizerState& state, double learning_rate,
                      double lambda) {
  std::vector<std::string> keys;
  keys.reserve(theta.size());
  for (const auto& [key, value] : theta.entries()) keys.push_back(key);
  for (const std::string& key : keys) {
    decay_one(theta, state, key, learning_rate, lambda,
              state.step - last_touched(state, key));
    state.last_step[key] = state.step;
  }
}

double dev_score_segments(DevMetric metric, const std::vector<std::vector<std::string>>& pred,
                          const std::vector<std::vector<std::string>>& gold) {
  switch (metric) {
    case DevMetric::Accuracy: return accuracy(pred, gold);
    case DevMetric::MorphemeF1: return morpheme_f1(pred, gold).f1;
    case DevMetric::EditDistance: return -boundary_edit_distance(pred, gold);
    case DevMetric::ConstituentF1:
      throw ConfigError("dev_score_segments: constituent-f1 needs trees");
  }
  return 0.0;
}

std::vector<Analysis> decode_words(const std::vector<std::string>& words,
                                   const ModelParameters& model, int n_samples,
                                   std::uint64_t seed, int workers) {
  std::vector<Analysis> out(words.size());
  for_each_index(words.size(), workers, [&](std::size_t i) {
    out[i] = decode(words[i], model, n_samples, derive_seed(seed, i));
  });
  return out;
}

std::vector<FlatAnalysis> flat_decode_words(const std::vector<std::string>& words,
                                            const ModelParameters& model, int n_samples,
                                            std::uint64_t seed, int workers) {
  std::vector<FlatAnalysis> out(words.size());
  for_each_index(words.size(), workers, [&](std::size_t i) {
    out[i] = flat_decode(words[i], model, n_samples, derive_seed(seed, i));
  });
  return out;
}

namespace {

struct DevData {
  std::vector<std::string> words;
  std::vector<std::vector<std::string>> gold_segments;
  std::vector<AnalyzedForm> gold_forms;
};

double evaluate_dev(const DevData& dev, ModelKind kind, const ModelParameters& model,
                    const TrainConfig& cfg) {
  std::uint64_t seed = derive_seed(cfg.seed, kDevDecodeTag);
  if (kind == ModelKind::Hierarchical) {
    std::vector<Analysis> decoded =
        decode_words(dev.words, model, cfg.decode_samples, seed, cfg.workers);
    if (cfg.dev_metric == DevMetric::ConstituentF1) {
      std::vector<AnalyzedForm> pred;
      pred.reserve(decoded.size());
      for (const Analysis& a : decoded) pred.push_back({a.canonical, a.tree});
      return constituent_f1(pred, dev.gold_forms).f1;
    }
    std::vector<std::vector<std::string>> pred;
    pred.reserve(decoded.size());
    for (const Analysis& a : decoded)
      pred.push_back(tree_to_segments(a.tree, a.canonical));
    return dev_score_segments(cfg.dev_metric, pred, dev.gold_segments);
  }
  if (cfg.dev_metric == DevMetric::ConstituentF1)
    throw ConfigError("train: constituent-f1 is undefined for the flat model");
  std::vector<FlatAnalysis> decoded =
      flat_decode_words(dev.words, model, cfg.decode_samples, seed, cfg.workers);
  std::vector<std::vector<std::string>> pred;
  pred.reserve(decoded.size());
  for (const FlatAnalysis& a : decoded)
    pred.push_back(segmentation_segments(a.segmentation, a.canonical));
  return dev_score_segments(cfg.dev_metric, pred, dev.gold_segments);
}

void check_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (cfg.lambda_grid.empty()) throw ConfigError("train: empty lambda grid");
  if (cfg.patience < 1) throw ConfigError("train: patience must be >= 1");
  if (cfg.gradient_samples < 1) throw ConfigError("train: gradient_samples must be >= 1");
  if (cfg.decode_samples < 1) throw ConfigError("train: decode_samples must be >= 1");
  if (!(cfg.learning_rate > 0)) throw ConfigError("train: learning rate must be positive");
  for (double l : cfg.lambda_grid)
    if (l < 0 || !std::isfinite(l)) throw ConfigError("train: lambda must be finite and >= 0");
}

void check_budgets(const std::vector<TreebankEntry>& train_set, const ModelParameters& init) {
  std::string offenders;
  int count = 0;
  for (const TreebankEntry& e : train_set) {
    if (static_cast<int>(e.canonical.size()) >
        static_cast<int>(e.surface.size()) + init.insertion_budget) {
      ++count;
      if (count <= 8) {
        if (!offenders.empty()) offenders += ", ";
        offenders += "'" + e.surface + "' (|u| = " + std::to_string(e.canonical.size()) + ")";
      }
    }
  }
  if (count > 0)
    throw DataError("train: " + std::to_string(count) +
                    " training entries violate the insertion budget: " + offenders +
                    (count > 8 ? ", ..." : ""));
}

std::string format_log_line(int epoch, double lambda, double score) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d\t%g\t%.6f\n", epoch, lambda, score);
  return buf;
}

}  // namespace

TrainResult train(const std::vector<TreebankEntry>& train_set,
                  const std::vector<TreebankEntry>& dev_set, ModelKind kind,
                  const ModelParameters& init, const TrainConfig& cfg) {
  check_config(cfg);
  if (train_set.empty()) throw DataError("train: empty training set");
  if (dev_set.empty()) throw DataError("train: empty dev set");
  check_budgets(train_set, init);

  DevData dev;
  dev.words.reserve(dev_set.size());
  for (const TreebankEntry& e : dev_set) {
    dev.words.push_back(e.surface);
    dev.gold_segments.push_back(tree_to_segments(e.tree, e.canonical));
    dev.gold_forms.push_back({e.canonical, e.tree});
  }

  TrainResult result;
  result.kind = kind;
  result.model = init;
  result.model.weights = SparseFeatureVector();
  result.dev_score = kNegInf;

  std::string log;
  for (std::size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
    double lambda = cfg.lambda_grid[li];
    ModelParameters work = init;
    work.weights = SparseFeatureVector();
    OptimizerState state;

    double best_score = evaluate_dev(dev, kind, work, cfg);
    SparseFeatureVector best_weights = work.weights;
    int best_epoch = 0;
    log += format_log_line(0, lambda, best_score);

    int since_improvement = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      std::vector<std::size_t> order(train_set.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng shuffle_rng(derive_seed(cfg.seed, kShuffleTag + li, static_cast<std::uint64_t>(epoch)));
      fisher_yates_shuffle(order, shuffle_rng);

      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const TreebankEntry& entry = train_set[order[pos]];
        std::uint64_t grad_seed = derive_seed(cfg.seed, kGradientTag + li,
                                              static_cast<std::uint64_t>(epoch), pos);
        LikelihoodEstimate est =
            kind == ModelKind::Hierarchical
                ? log_likelihood_and_gradient(entry, work, cfg.gradient_samples, grad_seed,
                                              cfg.workers)
                : flat_log_likelihood_and_gradient(entry, work, cfg.gradient_samples,
                                                   grad_seed, cfg.workers);
        adagrad_step(work.weights, est.gradient, state, cfg.learning_rate, lambda);
      }
      adagrad_catch_up(work.weights, state, cfg.learning_rate, lambda);

      double score = evaluate_dev(dev, kind, work, cfg);
      log += format_log_line(epoch, lambda, score);
      if (score > best_score) {
        best_score = score;
        best_weights = work.weights;
        best_epoch = epoch;
        since_improvement = 0;
      } else if (++since_improvement >= cfg.patience) {
        break;
      }
    }

    if (best_score > result.dev_score) {
      result.dev_score = best_score;
      result.lambda = lambda;
      result.best_epoch = best_epoch;
      result.model.weights = std::move(best_weights);
    }
  }

  char buf[128];
  std::snprintf(buf, sizeof(buf), "# selected lambda %g (epoch %d, dev %.6f)\n", result.lambda,
                result.best_epoch, result.dev_score);
  log += buf;
  result.log = std::move(log);
  return result;
}

}  // namespace morsel
