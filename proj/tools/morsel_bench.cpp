#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "morsel/joint.hpp"
#include "morsel/model.hpp"
#include "morsel/rng.hpp"
#include "morsel/training.hpp"

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

std::vector<std::string> synthetic_words(int count, std::uint64_t seed) {
  morsel::Rng rng(seed);
  const morsel::Alphabet& alphabet = morsel::Alphabet::lowercase_latin();
  std::vector<std::string> words;
  for (int i = 0; i < count; ++i) {
    std::size_t len = 5 + rng.uniform_index(5);
    std::string w;
    for (std::size_t j = 0; j < len; ++j)
      w.push_back(alphabet.at(static_cast<int>(rng.uniform_index(
          static_cast<std::size_t>(alphabet.size())))));
    words.push_back(std::move(w));
  }
  return words;
}

bool same_analyses(const std::vector<morsel::Analysis>& a,
                   const std::vector<morsel::Analysis>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].canonical != b[i].canonical || !(a[i].tree == b[i].tree)) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmark: serial reference vs OpenMP kernels"};
  int word_count = 24;
  int decode_samples = 60;
  int gradient_samples = 400;
  std::uint64_t seed = 7;
  std::vector<int> worker_counts = {0, 1, 2, 4};
  app.add_option("--words", word_count, "number of synthetic words");
  app.add_option("--decode-samples", decode_samples, "samples per decoded word");
  app.add_option("--gradient-samples", gradient_samples, "samples per gradient estimate");
  app.add_option("--seed", seed, "seed");
  app.add_option("--workers", worker_counts, "worker counts to compare")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  morsel::ModelParameters model;
  model.insertion_budget = 2;
  // A few nonzero weights so the samplers are not uniform.
  model.weights.set("t:a:saa", 0.4);
  model.weights.set("t:a:ie", 0.3);
  model.weights.set("p:r:W+", 0.2);
  model.weights.set("p:r:WPW", 0.1);
  model.lexicon.insert("able");
  model.lexicon.insert("er");

  std::vector<std::string> words = synthetic_words(word_count, seed);

  std::vector<morsel::Analysis> reference;
  std::vector<morsel::SparseFeatureVector> reference_grads;
  std::printf("workers\tdecode-ms\tgradient-ms\tmatches-serial\n");
  for (int workers : worker_counts) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<morsel::Analysis> decoded =
        morsel::decode_words(words, model, decode_samples, seed, workers);
    double decode_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    std::vector<morsel::SparseFeatureVector> grads;
    grads.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i)
      grads.push_back(morsel::estimate_logz_gradient(
          words[i], model, gradient_samples, morsel::derive_seed(seed, i), workers));
    double gradient_ms = ms_since(t0);

    bool matches = true;
    if (workers == worker_counts.front()) {
      reference = decoded;
      reference_grads = grads;
    } else {
      matches = same_analyses(decoded, reference) && grads == reference_grads;
    }
    std::printf("%d\t%.1f\t%.1f\t%s\n", workers, decode_ms, gradient_ms,
                matches ? "yes" : "NO");
    if (!matches) return 1;
  }
  return 0;
}
