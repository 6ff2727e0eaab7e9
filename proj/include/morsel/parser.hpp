#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "morsel/configs.hpp"
#include "morsel/rng.hpp"
#include "morsel/sparse.hpp"
#include "morsel/types.hpp"

namespace morsel {

// A production anchored at spans of the canonical form.  Binary productions
// are Word -> Prefix Word or Word -> Word Suffix over [i, k) split at j;
// preterminal productions expand label -> terminal yield over [i, j).
struct AnchoredProduction {
  enum class Kind { Preterminal, Binary } kind = Kind::Preterminal;
  Label parent = Label::Word;
  Label left = Label::Word;   // binary only
  Label right = Label::Word;  // binary only
  int i = 0;
  int split = -1;  // binary only
  int j = 0;
};

// Anchored productions of a validated tree, Root wrapper excluded, in
// pre-order.  The caller is expected to have validated the tree.
std::vector<AnchoredProduction> anchored_productions(const ParseTree& tree);

// --- feature extraction -----------------------------------------------------
//
// Identifiers (all prefixed "p:"):
//   p:seg:<segment>        span's segment string
//   p:lex                  segment is an attested word
//   p:sl:<L>:<segment>     segment x parent label (L in {W, P, S})
//   p:r:<rule>             rule identity: WPW, WWS, W+, P+, S+
//   p:par:W                parent-label backoff, binary rules only

SparseFeatureVector tree_feature_vector(const ParseTree& tree, std::string_view u,
                                        const Lexicon& lexicon,
                                        const ParserFeatureConfig& cfg = {});

// log score_omega(t, u); Root contributes nothing.  Throws ValidationError
// on an ill-formed tree.
double log_tree_score(const ParseTree& tree, std::string_view u,
                      const SparseFeatureVector& weights, const Lexicon& lexicon,
                      const ParserFeatureConfig& cfg = {});
double tree_score(const ParseTree& tree, std::string_view u, const SparseFeatureVector& weights,
                  const Lexicon& lexicon, const ParserFeatureConfig& cfg = {});

struct TreeSample {
  ParseTree tree;
  double log_probability = 0.0;  // exact log-probability of the drawn tree
};

// Inside chart over u; serves the partition value, exact tree sampling and
// the feature expectation (inside-outside).
class InsideChart {
 public:
  InsideChart(std::string_view u, const SparseFeatureVector& weights, const Lexicon& lexicon,
              const ParserFeatureConfig& cfg = {});

  // log sum over all trees of score_omega; the Root wrapper adds nothing.
  double log_inside() const;
  TreeSample sample(Rng& rng) const;
  // E_{t ~ p(t|u)}[tree_feature_vector]; the omega-gradient of log_inside.
  SparseFeatureVector expected_features() const;

 private:
  std::size_t cell(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_ + 1) +
           static_cast<std::size_t>(j);
  }
  double preterminal_logw(Label label, int i, int j) const;
  double binary_logw(bool prefix_rule, int i, int split, int j) const;

  std::string u_;
  const SparseFeatureVector& weights_;
  const Lexicon& lexicon_;
  ParserFeatureConfig cfg_;
  int n_ = 0;
  // inside values per label; Prefix and Suffix cells equal their preterminal
  // weights since they have no binary productions
  std::vector<double> in_word_, in_prefix_, in_suffix_;
  std::vector<double> pre_word_, pre_prefix_, pre_suffix_;
};

double log_inside(std::string_view u, const SparseFeatureVector& weights, const Lexicon& lexicon,
                  const ParserFeatureConfig& cfg = {});
double inside(std::string_view u, const SparseFeatureVector& weights, const Lexicon& lexicon,
              const ParserFeatureConfig& cfg = {});

// Max-scoring tree with deterministic tie-breaking: preterminal before
// binary, then smaller split point, then the Prefix branch before the Suffix
// branch.  Returns the Root-wrapped tree and its log score.
std::pair<ParseTree, double> cky_viterbi(std::string_view u, const SparseFeatureVector& weights,
                                         const Lexicon& lexicon,
                                         const ParserFeatureConfig& cfg = {});

TreeSample sample_tree(std::string_view u, const SparseFeatureVector& weights,
                       const Lexicon& lexicon, const ParserFeatureConfig& cfg,
                       std::uint64_t seed);

SparseFeatureVector inside_expected_features(std::string_view u,
                                             const SparseFeatureVector& weights,
                                             const Lexicon& lexicon,
                                             const ParserFeatureConfig& cfg = {});

}  // namespace morsel
