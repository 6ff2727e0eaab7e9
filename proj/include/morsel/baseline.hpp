#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "morsel/configs.hpp"
#include "morsel/data.hpp"
#include "morsel/joint.hpp"
#include "morsel/model.hpp"
#include "morsel/rng.hpp"
#include "morsel/sparse.hpp"
#include "morsel/types.hpp"

namespace morsel {

// Unlabeled segmentation of a canonical form, stored as the strictly
// increasing interior boundary indices (all in (0, |u|)); an empty list is
// the single-segment analysis.
struct FlatSegmentation {
  std::vector<int> boundaries;

  bool operator==(const FlatSegmentation&) const = default;
};

std::optional<std::string> validate_segmentation(const FlatSegmentation& s, std::string_view u);
std::vector<std::string> segmentation_segments(const FlatSegmentation& s, std::string_view u);
FlatSegmentation segmentation_from_segments(const std::vector<std::string>& segments);
// Bridge from a constituency tree: boundaries at the preterminal yield.
FlatSegmentation segmentation_from_tree(const ParseTree& tree);
// All 2^(n-1) segmentations of a length-n string, by boundary bitmask.
// GuardError outside n in [1, 12].
std::vector<FlatSegmentation> enumerate_segmentations(int n);

// --- feature extraction -----------------------------------------------------
//
// Identifiers (all prefixed "s:"), one set per segment [i, j):
//   s:seg:<segment>   segment indicator
//   s:lex             segment is an attested word
//   s:len:<b>         segment length bucketed to 1..8 (8 = "8 or more")
//   s:bb:<l><r>       right-boundary bigram: u[j-1] and u[j] ('$' at the end)

SparseFeatureVector chain_feature_vector(const FlatSegmentation& s, std::string_view u,
                                         const Lexicon& lexicon,
                                         const ChainFeatureConfig& cfg = {});

double log_semimarkov_score(const FlatSegmentation& s, std::string_view u,
                            const SparseFeatureVector& weights, const Lexicon& lexicon,
                            const ChainFeatureConfig& cfg = {});
double semimarkov_score(const FlatSegmentation& s, std::string_view u,
                        const SparseFeatureVector& weights, const Lexicon& lexicon,
                        const ChainFeatureConfig& cfg = {});

struct SegmentationSample {
  FlatSegmentation segmentation;
  double log_probability = 0.0;
};

// Forward/backward tables over segment arcs; serves the partition value,
// exact segmentation sampling, feature expectations and Viterbi.
class ChainChart {
 public:
  ChainChart(std::string_view u, const SparseFeatureVector& weights, const Lexicon& lexicon,
             const ChainFeatureConfig& cfg = {});

  double log_partition() const;
  SegmentationSample sample(Rng& rng) const;
  // E_{s ~ p(s|u)}[chain_feature_vector]; the psi-gradient of log_partition.
  SparseFeatureVector expected_features() const;
  // Ties broken toward fewer segments, then leftmost-longest.
  std::pair<FlatSegmentation, double> viterbi() const;

 private:
  std::size_t arc(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_ + 1) +
           static_cast<std::size_t>(j);
  }

  std::string u_;
  const Lexicon& lexicon_;
  ChainFeatureConfig cfg_;
  int n_ = 0;
  std::vector<double> seg_logw_;  // [i][j] for 0 <= i < j <= n
  std::vector<double> suffix_;    // log sum over segmentations of u[i:]
};

double log_semimarkov_partition(std::string_view u, const SparseFeatureVector& weights,
                                const Lexicon& lexicon, const ChainFeatureConfig& cfg = {});
double semimarkov_partition(std::string_view u, const SparseFeatureVector& weights,
                            const Lexicon& lexicon, const ChainFeatureConfig& cfg = {});
SparseFeatureVector chain_expected_features(std::string_view u,
                                            const SparseFeatureVector& weights,
                                            const Lexicon& lexicon,
                                            const ChainFeatureConfig& cfg = {});
std::pair<FlatSegmentation, double> semimarkov_viterbi(std::string_view u,
                                                       const SparseFeatureVector& weights,
                                                       const Lexicon& lexicon,
                                                       const ChainFeatureConfig& cfg = {});
SegmentationSample sample_segmentation(std::string_view u, const SparseFeatureVector& weights,
                                       const Lexicon& lexicon, const ChainFeatureConfig& cfg,
                                       std::uint64_t seed);

// --- joint flat model (transducer factor shared with the hierarchical one) --

struct FlatAnalysis {
  std::string surface;
  std::string canonical;
  FlatSegmentation segmentation;
  std::optional<Alignment> alignment;
};

double flat_log_unnormalized_marginal(std::string_view u, const FlatSegmentation& s,
                                      std::string_view w, const ModelParameters& model);
double flat_brute_force_log_partition(std::string_view w, const ModelParameters& model);
double flat_brute_force_partition(std::string_view w, const ModelParameters& model);
SparseFeatureVector flat_brute_force_logz_gradient(std::string_view w,
                                                   const ModelParameters& model);
SparseFeatureVector flat_estimate_logz_gradient(std::string_view w,
                                                const ModelParameters& model, int n_samples,
                                                std::uint64_t seed, int workers = 0);
LikelihoodEstimate flat_log_likelihood_and_gradient(const TreebankEntry& entry,
                                                    const ModelParameters& model, int n_samples,
                                                    std::uint64_t seed, int workers = 0);
FlatAnalysis flat_decode(std::string_view w, const ModelParameters& model, int n_samples,
                         std::uint64_t seed);

}  // namespace morsel
