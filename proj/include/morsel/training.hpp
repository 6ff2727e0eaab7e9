#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "morsel/baseline.hpp"
#include "morsel/data.hpp"
#include "morsel/joint.hpp"
#include "morsel/model.hpp"
#include "morsel/sparse.hpp"

namespace morsel {

enum class DevMetric { Accuracy, MorphemeF1, EditDistance, ConstituentF1 };

std::string_view dev_metric_name(DevMetric metric);
std::optional<DevMetric> dev_metric_from_name(std::string_view name);

struct TrainConfig {
  int epochs = 100;
  double learning_rate = 0.1;
  std::vector<double> lambda_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  int gradient_samples = 100;  // importance samples per stochastic gradient
  int decode_samples = 100;    // canonical-form samples per decoded word
  int patience = 10;           // epochs without dev improvement before stopping
  DevMetric dev_metric = DevMetric::MorphemeF1;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = serial reference; >= 1 OpenMP threads
};

// AdaGrad accumulator with lazy L2: a coordinate's decay for the steps it
// was not touched is applied retroactively the next time it is touched (or
// at a synchronization point), with the accumulator frozen during catch-up.
struct OptimizerState {
  std::unordered_map<std::string, double, StringHash, StringEq> sum_squares;
  std::unordered_map<std::string, long long, StringHash, StringEq> last_step;
  long long step = 0;
};

// One stochastic update: g includes the -lambda * theta term on every
// touched coordinate.  Throws on non-finite gradient entries.
void adagrad_step(SparseFeatureVector& theta, const SparseFeatureVector& grad,
                  OptimizerState& state, double learning_rate, double lambda);

// Applies pending lazy decay to every coordinate of theta, bringing it
// current with state.step.
void adagrad_catch_up(SparseFeatureVector& theta, OptimizerState& state, double learning_rate,
                      double lambda);

struct TrainResult {
  ModelKind kind = ModelKind::Hierarchical;
  ModelParameters model;  // best-dev checkpoint across the lambda grid
  double lambda = 0.0;
  double dev_score = 0.0;  // higher is better (edit distance is negated)
  int best_epoch = 0;
  std::string log;  // "epoch<TAB>lambda<TAB>dev-metric" lines
};

// Dev score of a decoded batch under the configured metric; edit distance is
// returned negated so that greater is always better.
double dev_score_segments(DevMetric metric, const std::vector<std::vector<std::string>>& pred,
                          const std::vector<std::vector<std::string>>& gold);

// The full protocol: for each lambda, epoch loop with shuffled example
// order, per-example importance-sampled gradients, per-epoch dev decoding,
// early stopping on the dev metric; returns the best checkpoint.
// `init` supplies alphabet, budget, lexicon and feature configs; weights
// start at zero.
TrainResult train(const std::vector<TreebankEntry>& train_set,
                  const std::vector<TreebankEntry>& dev_set, ModelKind kind,
                  const ModelParameters& init, const TrainConfig& cfg);

// Deterministic batch decoding (one derived seed per word; slot-indexed
// outputs, so results are identical for every worker count).
std::vector<Analysis> decode_words(const std::vector<std::string>& words,
                                   const ModelParameters& model, int n_samples,
                                   std::uint64_t seed, int workers = 0);
std::vector<FlatAnalysis> flat_decode_words(const std::vector<std::string>& words,
                                            const ModelParameters& model, int n_samples,
                                            std::uint64_t seed, int workers = 0);

}  // namespace morsel
