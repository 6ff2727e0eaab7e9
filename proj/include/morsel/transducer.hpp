#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "morsel/configs.hpp"
#include "morsel/rng.hpp"
#include "morsel/sparse.hpp"
#include "morsel/types.hpp"

namespace morsel {

// --- feature extraction -----------------------------------------------------
//
// Identifiers (all prefixed "t:"):
//   t:a:<core>                 action identity
//   t:p:<core>:<prev>          action x previously emitted character ('^' at start)
//   t:c<o>:<core>:<char>       action x surface character at window offset o
// where <core> is "s<x><y>" (substitute x -> y), "d<x>" (delete x) or
// "i<y>" (insert y), <o> is the offset shifted by the radius and written as a
// single digit, and out-of-range window positions read '^' / '$'.
// The surface anchor of Substitute/Delete is the consumed position; Insert is
// anchored at the next unconsumed position.

// g(u, a, w): counts of every feature fired by the alignment's actions.
SparseFeatureVector alignment_features(std::string_view u, const Alignment& a,
                                       std::string_view w,
                                       const TransducerFeatureConfig& cfg = {});

// log score_eta(u, a, w) = g(u, a, w) . eta.  Throws ValidationError if a is
// not a valid alignment for (u, w).
double log_score_triple(std::string_view u, const Alignment& a, std::string_view w,
                        const SparseFeatureVector& weights,
                        const TransducerFeatureConfig& cfg = {});
double score_triple(std::string_view u, const Alignment& a, std::string_view w,
                    const SparseFeatureVector& weights,
                    const TransducerFeatureConfig& cfg = {});

// log sum over all monotone alignments of (u, w); DP over (position in u,
// position in w).  BudgetError when |u| > |w| + insertion_budget.
double log_pair_score(std::string_view u, std::string_view w,
                      const SparseFeatureVector& weights, int insertion_budget,
                      const TransducerFeatureConfig& cfg = {});
double pair_score(std::string_view u, std::string_view w, const SparseFeatureVector& weights,
                  int insertion_budget, const TransducerFeatureConfig& cfg = {});

// Posterior expectation of g over alignments given (u, w):
// E_{a ~ p(a|u,w)}[g(u, a, w)]; this is the eta-gradient of log_pair_score.
SparseFeatureVector alignment_posterior_features(std::string_view u, std::string_view w,
                                                 const SparseFeatureVector& weights,
                                                 int insertion_budget,
                                                 const TransducerFeatureConfig& cfg = {});

struct CanonicalSample {
  std::string canonical;
  Alignment alignment;
  double log_path_probability = 0.0;  // exact log-probability of the drawn path
};

// Acyclic weighted lattice over edit-action paths for a fixed surface form.
// States are (surface position j, characters emitted so far e, previously
// emitted character); accepting states consume all of w and have e >= 1, so
// the accepting paths are exactly the alignments of every canonical string u
// with 1 <= |u| <= |w| + insertion_budget.
class EditLattice {
 public:
  EditLattice(std::string_view w, const SparseFeatureVector& weights,
              const Alphabet& alphabet, int insertion_budget,
              const TransducerFeatureConfig& cfg = {});

  double log_partition() const { return log_z_; }
  // Unconditional expectation of g over accepting paths; the eta-gradient of
  // log_partition.
  SparseFeatureVector expected_features() const;
  // Exact draw (u, a) with probability score_triple / partition.
  CanonicalSample sample(Rng& rng) const;

  std::size_t state_count() const;
  int max_canonical_length() const { return emax_; }
  const std::string& surface() const { return w_; }

 private:
  friend class LatticeTestPeek;
  int action_count() const { return 1 + 2 * sigma_; }
  std::size_t state_index(int j, int e, int p) const {
    return (static_cast<std::size_t>(j) * static_cast<std::size_t>(emax_ + 1) +
            static_cast<std::size_t>(e)) *
               static_cast<std::size_t>(sigma_ + 1) +
           static_cast<std::size_t>(p);
  }
  std::size_t arc_index(int j, int p, int a) const {
    return (static_cast<std::size_t>(j) * static_cast<std::size_t>(sigma_ + 1) +
            static_cast<std::size_t>(p)) *
               static_cast<std::size_t>(action_count()) +
           static_cast<std::size_t>(a);
  }

  std::string w_;
  Alphabet alphabet_;
  TransducerFeatureConfig cfg_;
  int n_ = 0;      // |w|
  int emax_ = 0;   // |w| + insertion_budget
  int sigma_ = 0;  // |alphabet|
  std::vector<double> arc_logw_;  // [j][prev][action], shared across e
  std::vector<double> alpha_, beta_;
  double log_z_ = kNegInf;
};

// Sum over every canonical string admitted by the lattice and every monotone
// alignment; log domain.
double log_transducer_partition(std::string_view w, const SparseFeatureVector& weights,
                                const Alphabet& alphabet, int insertion_budget,
                                const TransducerFeatureConfig& cfg = {});
double transducer_partition(std::string_view w, const SparseFeatureVector& weights,
                            const Alphabet& alphabet, int insertion_budget,
                            const TransducerFeatureConfig& cfg = {});

SparseFeatureVector lattice_expected_features(std::string_view w,
                                              const SparseFeatureVector& weights,
                                              const Alphabet& alphabet, int insertion_budget,
                                              const TransducerFeatureConfig& cfg = {});

CanonicalSample sample_canonical(std::string_view w, const SparseFeatureVector& weights,
                                 const Alphabet& alphabet, int insertion_budget,
                                 const TransducerFeatureConfig& cfg, std::uint64_t seed);

}  // namespace morsel
