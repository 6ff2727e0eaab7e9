#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "morsel/baseline.hpp"
#include "morsel/data.hpp"
#include "morsel/errors.hpp"
#include "morsel/eval.hpp"
#include "morsel/joint.hpp"
#include "morsel/model_io.hpp"
#include "morsel/numeric.hpp"
#include "morsel/training.hpp"
#include "morsel/transducer.hpp"

namespace {

constexpr const char* kVersion = "morsel 0.1.0";

using nlohmann::json;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw morsel::DataError("cannot write file: " + path);
  out << content;
  if (!out) throw morsel::DataError("failed while writing file: " + path);
}

void write_manifest(const std::string& path, json manifest) {
  manifest["version"] = kVersion;
  write_text_file(path, manifest.dump(2) + "\n");
}

std::vector<std::string> load_words(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw morsel::DataError("cannot open word list: " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    words.push_back(line);
  }
  return words;
}

std::string join_plus(const std::vector<std::string>& segments) {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out.push_back('+');
    out += segments[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

struct TrainOpts {
  std::string model_kind = "hier";
  std::string treebank;
  std::string lexicon;
  std::string out;
  int split_index = 0;
  int train_size = 5454;
  int dev_size = 1000;
  int test_size = 1000;
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  int insertion_budget = 5;
  int context_radius = 2;
  int epochs = 100;
  double learning_rate = 0.1;
  std::vector<double> lambda_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  int gradient_samples = 100;
  int decode_samples = 100;
  int patience = 10;
  std::string dev_metric = "morpheme-f1";
  std::uint64_t seed = 0;
  int workers = 0;
};

int run_train(const TrainOpts& opt) {
  auto kind = morsel::model_kind_from_name(opt.model_kind);
  if (!kind) throw morsel::ConfigError("unknown --model kind '" + opt.model_kind + "'");
  auto metric = morsel::dev_metric_from_name(opt.dev_metric);
  if (!metric) throw morsel::ConfigError("unknown --dev-metric '" + opt.dev_metric + "'");

  std::vector<morsel::TreebankEntry> entries = morsel::load_treebank(opt.treebank);
  morsel::ModelParameters init;
  init.alphabet = morsel::Alphabet(opt.alphabet);
  init.insertion_budget = opt.insertion_budget;
  init.transducer_features.context_radius = opt.context_radius;
  init.lexicon = morsel::load_lexicon(opt.lexicon);
  for (const morsel::TreebankEntry& e : entries)
    if (!init.alphabet.contains_all(e.canonical))
      throw morsel::DataError("entry '" + e.surface + "': canonical form '" + e.canonical +
                              "' uses characters outside the alphabet");

  morsel::SplitSpec spec;
  spec.seed = opt.seed;
  spec.train_size = opt.train_size;
  spec.dev_size = opt.dev_size;
  spec.test_size = opt.test_size;
  spec.split_index = opt.split_index;
  morsel::Splits splits = morsel::make_splits(entries, spec);

  morsel::TrainConfig cfg;
  cfg.epochs = opt.epochs;
  cfg.learning_rate = opt.learning_rate;
  cfg.lambda_grid = opt.lambda_grid;
  cfg.gradient_samples = opt.gradient_samples;
  cfg.decode_samples = opt.decode_samples;
  cfg.patience = opt.patience;
  cfg.dev_metric = *metric;
  cfg.seed = opt.seed;
  cfg.workers = opt.workers;

  morsel::TrainResult result = morsel::train(splits.train, splits.dev, *kind, init, cfg);

  morsel::SavedModel saved;
  saved.kind = *kind;
  saved.params = result.model;
  saved.lambda = result.lambda;
  saved.dev_score = result.dev_score;
  saved.dev_metric = std::string(morsel::dev_metric_name(*metric));
  saved.seed = opt.seed;
  morsel::save_model(opt.out, saved);
  write_text_file(opt.out + ".log", result.log);

  json manifest{{"subcommand", "train"},
                {"model", opt.model_kind},
                {"treebank", opt.treebank},
                {"lexicon", opt.lexicon},
                {"out", opt.out},
                {"split", opt.split_index},
                {"train-size", opt.train_size},
                {"dev-size", opt.dev_size},
                {"test-size", opt.test_size},
                {"alphabet", opt.alphabet},
                {"insertion-budget", opt.insertion_budget},
                {"context-radius", opt.context_radius},
                {"epochs", opt.epochs},
                {"learning-rate", opt.learning_rate},
                {"lambda-grid", opt.lambda_grid},
                {"gradient-samples", opt.gradient_samples},
                {"decode-samples", opt.decode_samples},
                {"patience", opt.patience},
                {"dev-metric", opt.dev_metric},
                {"seed", opt.seed},
                {"workers", opt.workers},
                {"selected-lambda", result.lambda},
                {"best-epoch", result.best_epoch},
                {"dev-score", result.dev_score}};
  write_manifest(opt.out + ".manifest.json", manifest);

  std::printf("trained %s model: lambda %g, best epoch %d, dev %s %.4f\n",
              opt.model_kind.c_str(), result.lambda, result.best_epoch,
              opt.dev_metric.c_str(), result.dev_score);
  return 0;
}

// ---------------------------------------------------------------------------

struct PredictOpts {
  std::string model;
  std::string words;
  std::string out;
  std::string lexicon;  // optional override
  int samples = 100;
  std::uint64_t seed = 0;
  int workers = 0;
};

int run_predict(const PredictOpts& opt) {
  morsel::SavedModel saved = morsel::load_model(opt.model);
  if (!opt.lexicon.empty()) saved.params.lexicon = morsel::load_lexicon(opt.lexicon);
  std::vector<std::string> words = load_words(opt.words);

  std::string out;
  if (saved.kind == morsel::ModelKind::Hierarchical) {
    std::vector<morsel::Analysis> decoded =
        morsel::decode_words(words, saved.params, opt.samples, opt.seed, opt.workers);
    for (const morsel::Analysis& a : decoded)
      out += a.surface + "\t" + a.canonical + "\t" +
             morsel::tree_to_sexpr(a.tree, a.canonical) + "\n";
  } else {
    std::vector<morsel::FlatAnalysis> decoded =
        morsel::flat_decode_words(words, saved.params, opt.samples, opt.seed, opt.workers);
    for (const morsel::FlatAnalysis& a : decoded)
      out += a.surface + "\t" + a.canonical + "\t" +
             join_plus(morsel::segmentation_segments(a.segmentation, a.canonical)) + "\n";
  }
  write_text_file(opt.out, out);

  json manifest{{"subcommand", "predict"}, {"model", opt.model},
                {"words", opt.words},      {"out", opt.out},
                {"lexicon", opt.lexicon},  {"samples", opt.samples},
                {"seed", opt.seed},        {"workers", opt.workers},
                {"model-kind", std::string(morsel::model_kind_name(saved.kind))}};
  write_manifest(opt.out + ".manifest.json", manifest);
  std::printf("wrote %zu predictions to %s\n", words.size(), opt.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateOpts {
  std::string pred;
  std::string gold;
  std::string out;  // optional
};

struct Prediction {
  std::string surface;
  std::string canonical;
  std::optional<morsel::ParseTree> tree;
  std::vector<std::string> segments;
};

Prediction parse_prediction(std::string_view line, int line_number) {
  std::size_t t1 = line.find('\t');
  std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
  if (t1 == std::string_view::npos || t2 == std::string_view::npos)
    throw morsel::DataError("prediction line " + std::to_string(line_number) +
                            ": expected '<w>\\t<u>\\t<analysis>'");
  Prediction p;
  p.surface = std::string(line.substr(0, t1));
  p.canonical = std::string(line.substr(t1 + 1, t2 - t1 - 1));
  std::string_view body = line.substr(t2 + 1);
  if (!body.empty() && body[0] == '(') {
    std::string canonical;
    p.tree = morsel::parse_sexpr(body, &canonical, line_number);
    if (canonical != p.canonical)
      throw morsel::DataError("prediction line " + std::to_string(line_number) +
                              ": tree yield '" + canonical + "' does not match canonical '" +
                              p.canonical + "'");
    p.segments = morsel::tree_to_segments(*p.tree, p.canonical);
  } else {
    std::string joined;
    std::size_t pos = 0;
    while (true) {
      std::size_t plus = body.find('+', pos);
      std::string_view seg = body.substr(pos, plus == std::string_view::npos ? plus : plus - pos);
      if (seg.empty())
        throw morsel::DataError("prediction line " + std::to_string(line_number) +
                                ": empty segment");
      p.segments.emplace_back(seg);
      joined += seg;
      if (plus == std::string_view::npos) break;
      pos = plus + 1;
    }
    if (joined != p.canonical)
      throw morsel::DataError("prediction line " + std::to_string(line_number) +
                              ": segments join to '" + joined + "', not '" + p.canonical + "'");
  }
  return p;
}

int run_evaluate(const EvaluateOpts& opt) {
  std::vector<morsel::TreebankEntry> gold = morsel::load_treebank(opt.gold);

  std::ifstream in(opt.pred);
  if (!in) throw morsel::DataError("cannot open predictions: " + opt.pred);
  std::vector<Prediction> preds;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    preds.push_back(parse_prediction(line, line_number));
  }

  if (preds.size() != gold.size())
    throw morsel::DataError("prediction/gold counts differ (" + std::to_string(preds.size()) +
                            " vs " + std::to_string(gold.size()) + ")");
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].surface != gold[i].surface)
      throw morsel::DataError("item " + std::to_string(i + 1) + ": prediction surface '" +
                              preds[i].surface + "' does not match gold '" + gold[i].surface +
                              "'");

  std::vector<std::vector<std::string>> pred_segments, gold_segments;
  std::vector<morsel::AnalyzedForm> pred_forms, gold_forms;
  bool all_trees = true;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    pred_segments.push_back(preds[i].segments);
    gold_segments.push_back(morsel::tree_to_segments(gold[i].tree, gold[i].canonical));
    if (preds[i].tree) {
      pred_forms.push_back({preds[i].canonical, *preds[i].tree});
    } else {
      all_trees = false;
    }
    gold_forms.push_back({gold[i].canonical, gold[i].tree});
  }

  morsel::SegMetrics seg = morsel::seg_metrics(pred_segments, gold_segments);
  std::optional<morsel::TreeMetrics> tree;
  if (all_trees) tree = morsel::tree_metrics(pred_forms, gold_forms);

  std::string report = morsel::render_report(seg, tree);
  std::fputs(report.c_str(), stdout);
  if (!opt.out.empty()) {
    write_text_file(opt.out, report);
    json manifest{{"subcommand", "evaluate"},
                  {"pred", opt.pred},
                  {"gold", opt.gold},
                  {"out", opt.out},
                  {"items", preds.size()},
                  {"tree-metrics", all_trees}};
    write_manifest(opt.out + ".manifest.json", manifest);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SampleOpts {
  std::string model;
  std::string word;
  std::string out;  // optional; default stdout
  int n = 10;
  std::uint64_t seed = 0;
};

int run_sample(const SampleOpts& opt) {
  morsel::SavedModel saved = morsel::load_model(opt.model);
  const morsel::ModelParameters& params = saved.params;
  std::ostringstream out;
  out << "# weight\tlog-target\tlog-proposal\tcanonical\tanalysis\n";
  char buf[64];
  if (saved.kind == morsel::ModelKind::Hierarchical) {
    std::vector<morsel::WeightedSample> samples =
        morsel::propose_batch(opt.word, params, opt.n, opt.seed);
    for (const morsel::WeightedSample& s : samples) {
      std::snprintf(buf, sizeof(buf), "%.6g\t%.6g\t%.6g\t", s.weight, s.log_target,
                    s.log_proposal);
      out << buf << s.analysis.canonical << "\t"
          << morsel::tree_to_sexpr(s.analysis.tree, s.analysis.canonical) << "\n";
    }
  } else {
    morsel::EditLattice lattice(opt.word, params.weights, params.alphabet,
                                params.insertion_budget, params.transducer_features);
    struct Row {
      double log_target, log_proposal, weight;
      std::string canonical, rendering;
    };
    std::vector<Row> rows;
    std::vector<double> logw;
    for (int i = 0; i < opt.n; ++i) {
      morsel::Rng rng(morsel::derive_seed(opt.seed, static_cast<std::uint64_t>(i)));
      morsel::CanonicalSample cs = lattice.sample(rng);
      morsel::ChainChart chart(cs.canonical, params.weights, params.lexicon,
                               params.chain_features);
      morsel::SegmentationSample ss = chart.sample(rng);
      double log_pair = morsel::log_pair_score(cs.canonical, opt.word, params.weights,
                                               params.insertion_budget,
                                               params.transducer_features);
      double log_chain = morsel::log_semimarkov_score(ss.segmentation, cs.canonical,
                                                      params.weights, params.lexicon,
                                                      params.chain_features);
      Row row;
      row.log_target = log_chain + log_pair;
      row.log_proposal = (log_pair - lattice.log_partition()) +
                         (log_chain - chart.log_partition());
      row.canonical = cs.canonical;
      row.rendering =
          join_plus(morsel::segmentation_segments(ss.segmentation, cs.canonical));
      logw.push_back(row.log_target - row.log_proposal);
      rows.push_back(std::move(row));
    }
    double lse = morsel::log_sum(logw);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.6g\t%.6g\t%.6g\t", std::exp(logw[i] - lse),
                    rows[i].log_target, rows[i].log_proposal);
      out << buf << rows[i].canonical << "\t" << rows[i].rendering << "\n";
    }
  }
  if (opt.out.empty()) {
    std::fputs(out.str().c_str(), stdout);
  } else {
    write_text_file(opt.out, out.str());
    json manifest{{"subcommand", "sample"}, {"model", opt.model}, {"word", opt.word},
                  {"out", opt.out},         {"n", opt.n},         {"seed", opt.seed}};
    write_manifest(opt.out + ".manifest.json", manifest);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct OracleOpts {
  std::string word;
  std::string model;  // optional
  std::string alphabet = "ab";
  int insertion_budget = 1;
  int samples = 20000;
  std::uint64_t seed = 0;
  double fd_step = 1e-5;
};

int run_oracle(const OracleOpts& opt) {
  morsel::ModelParameters params;
  if (!opt.model.empty()) {
    params = morsel::load_model(opt.model).params;
  } else {
    params.alphabet = morsel::Alphabet(opt.alphabet);
    params.insertion_budget = opt.insertion_budget;
  }

  bool ok = true;
  auto report = [&](const char* name, bool pass, double detail) {
    std::printf("%s\t%s\t%.3g\n", name, pass ? "ok" : "FAIL", detail);
    ok = ok && pass;
  };

  // Exact partition, two routes: explicit triple enumeration vs the
  // closed-form DP factorization sum_u pair_score(u, w) * inside(u).
  double log_z = morsel::brute_force_log_partition(opt.word, params);
  {
    double log_dp = morsel::kNegInf;
    std::vector<std::string> stack{""};
    int max_len = static_cast<int>(opt.word.size()) + params.insertion_budget;
    std::vector<std::string> all;
    for (int len = 0; len < max_len; ++len) {
      std::vector<std::string> next;
      for (const std::string& s : stack)
        for (int c = 0; c < params.alphabet.size(); ++c) next.push_back(s + params.alphabet.at(c));
      all.insert(all.end(), next.begin(), next.end());
      stack = std::move(next);
    }
    for (const std::string& u : all) {
      double lp;
      try {
        lp = morsel::log_pair_score(u, opt.word, params.weights, params.insertion_budget,
                                    params.transducer_features);
      } catch (const morsel::BudgetError&) {
        continue;
      }
      log_dp = morsel::log_add(log_dp, lp + morsel::log_inside(u, params.weights, params.lexicon,
                                                               params.parser_features));
    }
    double rel = std::abs(log_dp - log_z) / std::max(1.0, std::abs(log_z));
    report("partition-enumeration-vs-dp", rel < 1e-10, rel);
  }

  // Transducer partition vs per-u pair scores.
  {
    double lattice_z = morsel::log_transducer_partition(opt.word, params.weights,
                                                        params.alphabet,
                                                        params.insertion_budget,
                                                        params.transducer_features);
    double sum = morsel::kNegInf;
    std::vector<std::string> stack{""};
    int max_len = static_cast<int>(opt.word.size()) + params.insertion_budget;
    for (int len = 0; len < max_len; ++len) {
      std::vector<std::string> next;
      for (const std::string& s : stack)
        for (int c = 0; c < params.alphabet.size(); ++c) next.push_back(s + params.alphabet.at(c));
      for (const std::string& u : next)
        sum = morsel::log_add(sum, morsel::log_pair_score(u, opt.word, params.weights,
                                                          params.insertion_budget,
                                                          params.transducer_features));
      stack = std::move(next);
    }
    double rel = std::abs(sum - lattice_z) / std::max(1.0, std::abs(lattice_z));
    report("transducer-partition-vs-enumeration", rel < 1e-10, rel);
  }

  // Exact gradient vs central finite differences of the brute-force log Z.
  {
    morsel::SparseFeatureVector grad = morsel::brute_force_logz_gradient(opt.word, params);
    double worst = 0.0;
    for (const auto& [key, value] : grad.sorted_entries()) {
      morsel::ModelParameters p = params;
      p.weights.add(key, opt.fd_step);
      double up = morsel::brute_force_log_partition(opt.word, p);
      p.weights.add(key, -2 * opt.fd_step);
      double down = morsel::brute_force_log_partition(opt.word, p);
      double fd = (up - down) / (2 * opt.fd_step);
      double rel = std::abs(fd - value) / std::max(1e-8, std::abs(value));
      worst = std::max(worst, rel);
    }
    report("gradient-vs-finite-differences", worst < 1e-4, worst);
  }

  // Importance-sampled gradient vs the exact one (stochastic; L2 relative
  // error so single near-zero coordinates do not dominate).
  {
    morsel::SparseFeatureVector exact = morsel::brute_force_logz_gradient(opt.word, params);
    morsel::SparseFeatureVector est =
        morsel::estimate_logz_gradient(opt.word, params, opt.samples, opt.seed);
    morsel::SparseFeatureVector diff = est;
    diff.add_scaled(exact, -1.0);
    double rel = std::sqrt(diff.squared_norm()) /
                 std::max(1.0, std::sqrt(exact.squared_norm()));
    report("sampled-gradient-vs-exact", rel < 0.05, rel);
  }

  return ok ? 0 : 3;
}

// ---------------------------------------------------------------------------

struct SplitsOpts {
  std::string treebank;
  std::string out_dir;
  std::uint64_t seed = 0;
  int train_size = 5454;
  int dev_size = 1000;
  int test_size = 1000;
};

int run_splits(const SplitsOpts& opt) {
  std::vector<morsel::TreebankEntry> entries = morsel::load_treebank(opt.treebank);
  std::filesystem::create_directories(opt.out_dir);
  auto write_indices = [&](const std::string& path, const std::vector<std::size_t>& idx) {
    std::string body;
    for (std::size_t i : idx) body += std::to_string(i) + "\n";
    write_text_file(path, body);
  };
  for (int index = 0; index < 10; ++index) {
    morsel::SplitSpec spec;
    spec.seed = opt.seed;
    spec.train_size = opt.train_size;
    spec.dev_size = opt.dev_size;
    spec.test_size = opt.test_size;
    spec.split_index = index;
    morsel::Splits splits = morsel::make_splits(entries, spec);
    std::string stem = opt.out_dir + "/split" + std::to_string(index);
    write_indices(stem + ".train.idx", splits.train_indices);
    write_indices(stem + ".dev.idx", splits.dev_indices);
    write_indices(stem + ".test.idx", splits.test_indices);
  }
  json manifest{{"subcommand", "splits"},     {"treebank", opt.treebank},
                {"out-dir", opt.out_dir},     {"seed", opt.seed},
                {"train-size", opt.train_size}, {"dev-size", opt.dev_size},
                {"test-size", opt.test_size},   {"entries", entries.size()}};
  write_manifest(opt.out_dir + "/splits.manifest.json", manifest);
  std::printf("wrote 10 splits over %zu entries to %s\n", entries.size(), opt.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"canonical morphological segmentation: joint transducer + grammar models"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  TrainOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "train a model on a treebank split");
  train->add_option("--model", train_opts.model_kind, "hier or flat")->envname("MORSEL_MODEL");
  train->add_option("--treebank", train_opts.treebank, "treebank tsv")
      ->required()
      ->envname("MORSEL_TREEBANK");
  train->add_option("--lexicon", train_opts.lexicon, "word list")
      ->required()
      ->envname("MORSEL_LEXICON");
  train->add_option("--out", train_opts.out, "output model path")
      ->required()
      ->envname("MORSEL_OUT");
  train->add_option("--split", train_opts.split_index, "split index in [0, 10)")
      ->envname("MORSEL_SPLIT");
  train->add_option("--train-size", train_opts.train_size, "train split size")
      ->envname("MORSEL_TRAIN_SIZE");
  train->add_option("--dev-size", train_opts.dev_size, "dev split size")
      ->envname("MORSEL_DEV_SIZE");
  train->add_option("--test-size", train_opts.test_size, "test split size")
      ->envname("MORSEL_TEST_SIZE");
  train->add_option("--alphabet", train_opts.alphabet, "canonical-side alphabet")
      ->envname("MORSEL_ALPHABET");
  train->add_option("--insertion-budget", train_opts.insertion_budget,
                    "max canonical minus surface length")
      ->envname("MORSEL_INSERTION_BUDGET");
  train->add_option("--context-radius", train_opts.context_radius,
                    "transducer context window radius")
      ->envname("MORSEL_CONTEXT_RADIUS");
  train->add_option("--epochs", train_opts.epochs, "max epochs")->envname("MORSEL_EPOCHS");
  train->add_option("--learning-rate", train_opts.learning_rate, "AdaGrad base rate")
      ->envname("MORSEL_LEARNING_RATE");
  train->add_option("--lambda-grid", train_opts.lambda_grid, "L2 grid (comma separated)")
      ->delimiter(',')
      ->envname("MORSEL_LAMBDA_GRID");
  train->add_option("--gradient-samples", train_opts.gradient_samples,
                    "importance samples per gradient")
      ->envname("MORSEL_GRADIENT_SAMPLES");
  train->add_option("--decode-samples", train_opts.decode_samples,
                    "canonical samples per decoded word")
      ->envname("MORSEL_DECODE_SAMPLES");
  train->add_option("--patience", train_opts.patience, "early-stopping patience")
      ->envname("MORSEL_PATIENCE");
  train->add_option("--dev-metric", train_opts.dev_metric,
                    "accuracy | morpheme-f1 | edit-distance | constituent-f1")
      ->envname("MORSEL_DEV_METRIC");
  train->add_option("--seed", train_opts.seed, "master seed")->envname("MORSEL_SEED");
  train->add_option("--workers", train_opts.workers, "0 = serial reference, N = OpenMP threads")
      ->envname("MORSEL_WORKERS");

  PredictOpts predict_opts;
  CLI::App* predict = app.add_subcommand("predict", "decode a word list with a trained model");
  predict->add_option("--model", predict_opts.model, "model file")
      ->required()
      ->envname("MORSEL_MODEL");
  predict->add_option("--words", predict_opts.words, "input word list")
      ->required()
      ->envname("MORSEL_WORDS");
  predict->add_option("--out", predict_opts.out, "predictions tsv")
      ->required()
      ->envname("MORSEL_OUT");
  predict->add_option("--lexicon", predict_opts.lexicon, "override the embedded lexicon")
      ->envname("MORSEL_LEXICON");
  predict->add_option("--samples", predict_opts.samples, "canonical samples per word")
      ->envname("MORSEL_SAMPLES");
  predict->add_option("--seed", predict_opts.seed, "decode seed")->envname("MORSEL_SEED");
  predict->add_option("--workers", predict_opts.workers,
                      "0 = serial reference, N = OpenMP threads")
      ->envname("MORSEL_WORKERS");

  EvaluateOpts evaluate_opts;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against a gold treebank");
  evaluate->add_option("--pred", evaluate_opts.pred, "predictions tsv")
      ->required()
      ->envname("MORSEL_PRED");
  evaluate->add_option("--gold", evaluate_opts.gold, "gold treebank tsv")
      ->required()
      ->envname("MORSEL_GOLD");
  evaluate->add_option("--out", evaluate_opts.out, "also write the report here")
      ->envname("MORSEL_OUT");

  SampleOpts sample_opts;
  CLI::App* sample = app.add_subcommand("sample", "emit weighted proposal samples for a word");
  sample->add_option("--model", sample_opts.model, "model file")
      ->required()
      ->envname("MORSEL_MODEL");
  sample->add_option("--word", sample_opts.word, "surface word")
      ->required()
      ->envname("MORSEL_WORD");
  sample->add_option("--out", sample_opts.out, "output path (default stdout)")
      ->envname("MORSEL_OUT");
  sample->add_option("-n,--n", sample_opts.n, "number of samples")->envname("MORSEL_N");
  sample->add_option("--seed", sample_opts.seed, "sampling seed")->envname("MORSEL_SEED");

  OracleOpts oracle_opts;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "run guarded exact checks (partition, enumeration, gradient-vs-FD)");
  oracle->add_option("--word", oracle_opts.word, "surface word (guarded size)")
      ->required()
      ->envname("MORSEL_WORD");
  oracle->add_option("--model", oracle_opts.model, "model file (default: zero weights)")
      ->envname("MORSEL_MODEL");
  oracle->add_option("--alphabet", oracle_opts.alphabet, "alphabet when no model is given")
      ->envname("MORSEL_ALPHABET");
  oracle->add_option("--insertion-budget", oracle_opts.insertion_budget,
                     "insertion budget when no model is given")
      ->envname("MORSEL_INSERTION_BUDGET");
  oracle->add_option("--samples", oracle_opts.samples, "importance samples for the IS check")
      ->envname("MORSEL_SAMPLES");
  oracle->add_option("--seed", oracle_opts.seed, "sampling seed")->envname("MORSEL_SEED");
  oracle->add_option("--fd-step", oracle_opts.fd_step, "finite-difference step")
      ->envname("MORSEL_FD_STEP");

  SplitsOpts splits_opts;
  CLI::App* splits = app.add_subcommand("splits", "materialize the 10 data splits as index files");
  splits->add_option("--treebank", splits_opts.treebank, "treebank tsv")
      ->required()
      ->envname("MORSEL_TREEBANK");
  splits->add_option("--out-dir", splits_opts.out_dir, "output directory")
      ->required()
      ->envname("MORSEL_OUT_DIR");
  splits->add_option("--seed", splits_opts.seed, "split seed")->envname("MORSEL_SEED");
  splits->add_option("--train-size", splits_opts.train_size, "train split size")
      ->envname("MORSEL_TRAIN_SIZE");
  splits->add_option("--dev-size", splits_opts.dev_size, "dev split size")
      ->envname("MORSEL_DEV_SIZE");
  splits->add_option("--test-size", splits_opts.test_size, "test split size")
      ->envname("MORSEL_TEST_SIZE");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train) return run_train(train_opts);
    if (*predict) return run_predict(predict_opts);
    if (*evaluate) return run_evaluate(evaluate_opts);
    if (*sample) return run_sample(sample_opts);
    if (*oracle) return run_oracle(oracle_opts);
    if (*splits) return run_splits(splits_opts);
    std::fprintf(stderr, "no subcommand selected\n");
    return 1;
  } catch (const morsel::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const morsel::GuardError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const morsel::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const morsel::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const morsel::BudgetError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
