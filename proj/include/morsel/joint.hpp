#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "morsel/data.hpp"
#include "morsel/model.hpp"
#include "morsel/parser.hpp"
#include "morsel/sparse.hpp"
#include "morsel/transducer.hpp"
#include "morsel/types.hpp"

namespace morsel {

// A full (or alignment-marginalized) analysis of a surface word.
struct Analysis {
  std::string surface;
  std::string canonical;
  ParseTree tree;
  std::optional<Alignment> alignment;
};

struct WeightedSample {
  Analysis analysis;  // alignment marginalized out
  double log_target = 0.0;
  double log_proposal = 0.0;
  double weight = 0.0;  // self-normalized within the batch that produced it
};

// log[tree_score(t, u) * pair_score(u, w)]: the unnormalized joint with the
// alignment summed out in closed form.
double log_unnormalized_marginal(std::string_view u, const ParseTree& tree, std::string_view w,
                                 const ModelParameters& model);

// Exact partition function by triple enumeration; guarded because the sum is
// exponential. Requires |alphabet| <= 3 and |w| + k <= 5.
double brute_force_partition(std::string_view w, const ModelParameters& model);
double brute_force_log_partition(std::string_view w, const ModelParameters& model);

// Exact gradient of log Z(w): the model expectation of the combined feature
// vector, computed by enumerating canonical forms and using the closed-form
// per-u expectations. Same guard as brute_force_partition.
SparseFeatureVector brute_force_logz_gradient(std::string_view w, const ModelParameters& model);

// Draws u from the transducer and t from the parser, both under the current
// parameters, and records target/proposal log-densities. The singleton's
// self-normalized weight is 1.
WeightedSample propose(std::string_view w, const ModelParameters& model, std::uint64_t seed);

std::vector<WeightedSample> propose_batch(std::string_view w, const ModelParameters& model,
                                          int n_samples, std::uint64_t seed, int workers = 0);

// Per-sample sufficient statistics. The Rao-Blackwellized term replaces the
// sampled alignment with its exact posterior expectation; the naive term uses
// the raw sampled alignment and is kept for variance comparisons.
SparseFeatureVector rb_gradient_term(const Analysis& analysis, const ModelParameters& model);
SparseFeatureVector naive_gradient_term(const Analysis& analysis, const ModelParameters& model);

// Self-normalized importance-sampling estimate of grad log Z(w).
SparseFeatureVector estimate_logz_gradient(std::string_view w, const ModelParameters& model,
                                           int n_samples, std::uint64_t seed, int workers = 0);
SparseFeatureVector estimate_logz_gradient_naive(std::string_view w,
                                                 const ModelParameters& model, int n_samples,
                                                 std::uint64_t seed, int workers = 0);

struct LikelihoodEstimate {
  double log_likelihood = 0.0;
  SparseFeatureVector gradient;
};

// Estimated log p(t_gold, u_gold | w) and its gradient (observed statistics
// minus the estimated expectation). Throws DataError, citing the entry, when
// the gold canonical form violates the insertion budget.
LikelihoodEstimate log_likelihood_and_gradient(const TreebankEntry& entry,
                                               const ModelParameters& model, int n_samples,
                                               std::uint64_t seed, int workers = 0);

// Importance-sampled decoding: sample canonical forms, deduplicate, run CKY
// on each, return the analysis with the best unnormalized marginal score.
// Ties prefer the lexicographically smallest u.
Analysis decode(std::string_view w, const ModelParameters& model, int n_samples,
                std::uint64_t seed);

}  // namespace morsel
