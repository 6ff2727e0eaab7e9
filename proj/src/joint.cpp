#include "morsel/joint.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <unordered_map>
#include <utility>

#include "morsel/numeric.hpp"
#include "morsel/parallel.hpp"

namespace morsel {

namespace {

void check_brute_guard(std::string_view w, const ModelParameters& model, const char* op) {
  if (model.alphabet.size() > 3 ||
      static_cast<int>(w.size()) + model.insertion_budget > 5)
    throw GuardError(std::string(op) +
                     ": exhaustive enumeration requires |alphabet| <= 3 and "
                     "|w| + insertion budget <= 5");
}

std::vector<std::string> all_canonical_strings(const Alphabet& alphabet, int max_len) {
  std::vector<std::string> out;
  std::vector<std::string> frontier{std::string()};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    next.reserve(frontier.size() * alphabet.size());
    for (const std::string& s : frontier)
      for (std::size_t c = 0; c < alphabet.size(); ++c) next.push_back(s + alphabet.at(c));
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

double log_unnormalized_marginal(std::string_view u, const ParseTree& tree, std::string_view w,
                                 const ModelParameters& model) {
  double tree_part = log_tree_score(tree, u, model.weights, model.lexicon,
                                    model.parser_features);
  double pair_part = log_pair_score(u, w, model.weights, model.insertion_budget,
                                    model.transducer_features);
  return tree_part + pair_part;
}

double brute_force_log_partition(std::string_view w, const ModelParameters& model) {
  check_brute_guard(w, model, "brute_force_partition");
  int max_len = static_cast<int>(w.size()) + model.insertion_budget;
  double log_z = kNegInf;
  for (const std::string& u : all_canonical_strings(model.alphabet, max_len)) {
    std::vector<Alignment> alignments =
        enumerate_alignments(u, w, model.transducer_features.allow_insert,
                             model.transducer_features.allow_delete);
    if (alignments.empty()) continue;
    double log_align = kNegInf;
    for (const Alignment& a : alignments)
      log_align =
          log_add(log_align, log_score_triple(u, a, w, model.weights,
                                              model.transducer_features));
    double log_trees = kNegInf;
    for (const ParseTree& t : enumerate_trees(u))
      log_trees = log_add(log_trees, log_tree_score(t, u, model.weights, model.lexicon,
                                                    model.parser_features));
    log_z = log_add(log_z, log_align + log_trees);
  }
  return log_z;
}

double brute_force_partition(std::string_view w, const ModelParameters& model) {
  return std::exp(brute_force_log_partition(w, model));
}

SparseFeatureVector brute_force_logz_gradient(std::string_view w,
                                              const ModelParameters& model) {
  check_brute_guard(w, model, "brute_force_logz_gradient");
  int max_len = static_cast<int>(w.size()) + model.insertion_budget;

  struct PerU {
    std::string u;
    double log_align = kNegInf;  // log sum over alignments
    double log_trees = kNegInf;  // log sum over trees
    SparseFeatureVector align_post;  // expectation of g given u
    SparseFeatureVector tree_post;   // expectation of f given u
  };
  std::vector<PerU> table;
  double log_z = kNegInf;
  for (const std::string& u : all_canonical_strings(model.alphabet, max_len)) {
    std::vector<Alignment> alignments =
        enumerate_alignments(u, w, model.transducer_features.allow_insert,
                             model.transducer_features.allow_delete);
    if (alignments.empty()) continue;
    PerU row;
    row.u = u;
    std::vector<double> align_logs;
    align_logs.reserve(alignments.size());
    for (const Alignment& a : alignments) {
      double l = log_score_triple(u, a, w, model.weights, model.transducer_features);
      align_logs.push_back(l);
      row.log_align = log_add(row.log_align, l);
    }
    for (std::size_t i = 0; i < alignments.size(); ++i)
      row.align_post.add_scaled(
          alignment_features(u, alignments[i], w, model.transducer_features),
          std::exp(align_logs[i] - row.log_align));

    std::vector<ParseTree> trees = enumerate_trees(u);
    std::vector<double> tree_logs;
    tree_logs.reserve(trees.size());
    for (const ParseTree& t : trees) {
      double l = log_tree_score(t, u, model.weights, model.lexicon, model.parser_features);
      tree_logs.push_back(l);
      row.log_trees = log_add(row.log_trees, l);
    }
    for (std::size_t i = 0; i < trees.size(); ++i)
      row.tree_post.add_scaled(
          tree_feature_vector(trees[i], u, model.lexicon, model.parser_features),
          std::exp(tree_logs[i] - row.log_trees));

    log_z = log_add(log_z, row.log_align + row.log_trees);
    table.push_back(std::move(row));
  }

  SparseFeatureVector grad;
  for (const PerU& row : table) {
    double mass = std::exp(row.log_align + row.log_trees - log_z);
    grad.add_scaled(row.align_post, mass);
    grad.add_scaled(row.tree_post, mass);
  }
  return grad;
}

WeightedSample propose(std::string_view w, const ModelParameters& model, std::uint64_t seed) {
  EditLattice lattice(w, model.weights, model.alphabet, model.insertion_budget,
                      model.transducer_features);
  Rng rng(seed);
  CanonicalSample cs = lattice.sample(rng);
  InsideChart chart(cs.canonical, model.weights, model.lexicon, model.parser_features);
  TreeSample ts = chart.sample(rng);

  double log_pair = log_pair_score(cs.canonical, w, model.weights, model.insertion_budget,
                                   model.transducer_features);
  double log_tree = log_tree_score(ts.tree, cs.canonical, model.weights, model.lexicon,
                                   model.parser_features);
  WeightedSample s;
  s.analysis.surface.assign(w);
  s.analysis.canonical = cs.canonical;
  s.analysis.tree = ts.tree;
  s.log_target = log_tree + log_pair;
  s.log_proposal =
      (log_pair - lattice.log_partition()) + (log_tree - chart.log_inside());
  s.weight = 1.0;
  return s;
}

std::vector<WeightedSample> propose_batch(std::string_view w, const ModelParameters& model,
                                          int n_samples, std::uint64_t seed, int workers) {
  if (n_samples < 1) throw ValidationError("propose_batch: n_samples must be >= 1");
  EditLattice lattice(w, model.weights, model.alphabet, model.insertion_budget,
                      model.transducer_features);
  double log_zt = lattice.log_partition();
  std::vector<WeightedSample> out(static_cast<std::size_t>(n_samples));
  for_each_index(out.size(), workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    CanonicalSample cs = lattice.sample(rng);
    InsideChart chart(cs.canonical, model.weights, model.lexicon, model.parser_features);
    TreeSample ts = chart.sample(rng);
    double log_pair = log_pair_score(cs.canonical, w, model.weights, model.insertion_budget,
                                     model.transducer_features);
    double log_tree = log_tree_score(ts.tree, cs.canonical, model.weights, model.lexicon,
                                     model.parser_features);
    WeightedSample& s = out[i];
    s.analysis.surface.assign(w);
    s.analysis.canonical = std::move(cs.canonical);
    s.analysis.tree = std::move(ts.tree);
    s.log_target = log_tree + log_pair;
    s.log_proposal = (log_pair - log_zt) + (log_tree - chart.log_inside());
  });
  std::vector<double> logw(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) logw[i] = out[i].log_target - out[i].log_proposal;
  double lse = log_sum(logw);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].weight = std::exp(logw[i] - lse);
  return out;
}

SparseFeatureVector rb_gradient_term(const Analysis& analysis, const ModelParameters& model) {
  SparseFeatureVector stat = tree_feature_vector(analysis.tree, analysis.canonical,
                                                 model.lexicon, model.parser_features);
  stat.add_scaled(alignment_posterior_features(analysis.canonical, analysis.surface,
                                               model.weights, model.insertion_budget,
                                               model.transducer_features),
                  1.0);
  return stat;
}

SparseFeatureVector naive_gradient_term(const Analysis& analysis, const ModelParameters& model) {
  if (!analysis.alignment)
    throw ValidationError("naive_gradient_term: analysis carries no alignment");
  SparseFeatureVector stat = tree_feature_vector(analysis.tree, analysis.canonical,
                                                 model.lexicon, model.parser_features);
  stat.add_scaled(alignment_features(analysis.canonical, *analysis.alignment, analysis.surface,
                                     model.transducer_features),
                  1.0);
  return stat;
}

namespace {

struct EstimateResult {
  double log_z_hat = kNegInf;
  SparseFeatureVector gradient;
};

// Shared importance-sampling engine.  Draws (u, a) from the edit lattice and
// t from the inside chart under the current parameters; the importance
// weight of a sample reduces to transducer_partition * inside(u) because the
// alignment and tree proposal factors cancel against the target.  The
// Rao-Blackwellized statistic swaps the sampled alignment's features for
// their exact posterior expectation given u.
EstimateResult estimate_engine(std::string_view w, const ModelParameters& model, int n_samples,
                               std::uint64_t seed, int workers, bool rao_blackwell) {
  if (n_samples < 1)
    throw ValidationError("estimate_logz_gradient: n_samples must be >= 1");
  EditLattice lattice(w, model.weights, model.alphabet, model.insertion_budget,
                      model.transducer_features);
  double log_zt = lattice.log_partition();

  struct Draw {
    std::uint32_t u_index = 0;
    Rng rng{0};  // stream state after the canonical draw
    Alignment alignment;
  };
  std::size_t n = static_cast<std::size_t>(n_samples);
  std::vector<Draw> draws(n);
  std::vector<std::string> unique_u;
  std::unordered_map<std::string, std::uint32_t, StringHash, StringEq> index_of;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    CanonicalSample cs = lattice.sample(rng);
    auto [it, inserted] =
        index_of.try_emplace(cs.canonical, static_cast<std::uint32_t>(unique_u.size()));
    if (inserted) unique_u.push_back(cs.canonical);
    draws[i].u_index = it->second;
    draws[i].rng = rng;
    if (!rao_blackwell) draws[i].alignment = std::move(cs.alignment);
  }

  struct PerU {
    std::unique_ptr<InsideChart> chart;
    double log_inside = kNegInf;
    SparseFeatureVector align_post;
  };
  std::vector<PerU> per_u(unique_u.size());
  for_each_index(unique_u.size(), workers, [&](std::size_t k) {
    per_u[k].chart = std::make_unique<InsideChart>(unique_u[k], model.weights, model.lexicon,
                                                   model.parser_features);
    per_u[k].log_inside = per_u[k].chart->log_inside();
    if (rao_blackwell)
      per_u[k].align_post =
          alignment_posterior_features(unique_u[k], w, model.weights, model.insertion_budget,
                                       model.transducer_features);
  });

  std::vector<ParseTree> trees(n);
  for_each_index(n, workers, [&](std::size_t i) {
    Rng rng = draws[i].rng;
    trees[i] = per_u[draws[i].u_index].chart->sample(rng).tree;
  });

  std::vector<double> logw(n);
  for (std::size_t i = 0; i < n; ++i)
    logw[i] = log_zt + per_u[draws[i].u_index].log_inside;
  double lse = log_sum(logw);

  EstimateResult result;
  result.log_z_hat = lse - std::log(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double wbar = std::exp(logw[i] - lse);
    if (wbar <= 0) continue;
    const PerU& row = per_u[draws[i].u_index];
    const std::string& u = unique_u[draws[i].u_index];
    result.gradient.add_scaled(
        tree_feature_vector(trees[i], u, model.lexicon, model.parser_features), wbar);
    if (rao_blackwell)
      result.gradient.add_scaled(row.align_post, wbar);
    else
      result.gradient.add_scaled(
          alignment_features(u, draws[i].alignment, w, model.transducer_features), wbar);
  }
  return result;
}

}  // namespace

SparseFeatureVector estimate_logz_gradient(std::string_view w, const ModelParameters& model,
                                           int n_samples, std::uint64_t seed, int workers) {
  return estimate_engine(w, model, n_samples, seed, workers, true).gradient;
}

SparseFeatureVector estimate_logz_gradient_naive(std::string_view w,
                                                 const ModelParameters& model, int n_samples,
                                                 std::uint64_t seed, int workers) {
  return estimate_engine(w, model, n_samples, seed, workers, false).gradient;
}

LikelihoodEstimate log_likelihood_and_gradient(const TreebankEntry& entry,
                                               const ModelParameters& model, int n_samples,
                                               std::uint64_t seed, int workers) {
  if (static_cast<int>(entry.canonical.size()) >
      static_cast<int>(entry.surface.size()) + model.insertion_budget)
    throw DataError("entry '" + entry.surface + "': canonical form '" + entry.canonical +
                    "' exceeds surface length + insertion budget (" +
                    std::to_string(entry.surface.size()) + " + " +
                    std::to_string(model.insertion_budget) + ")");

  SparseFeatureVector observed = tree_feature_vector(entry.tree, entry.canonical, model.lexicon,
                                                     model.parser_features);
  observed.add_scaled(
      alignment_posterior_features(entry.canonical, entry.surface, model.weights,
                                   model.insertion_budget, model.transducer_features),
      1.0);

  EstimateResult est = estimate_engine(entry.surface, model, n_samples, seed, workers, true);

  LikelihoodEstimate out;
  out.log_likelihood =
      log_unnormalized_marginal(entry.canonical, entry.tree, entry.surface, model) -
      est.log_z_hat;
  out.gradient = std::move(observed);
  out.gradient.add_scaled(est.gradient, -1.0);
  return out;
}

Analysis decode(std::string_view w, const ModelParameters& model, int n_samples,
                std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("decode: n_samples must be >= 1");
  EditLattice lattice(w, model.weights, model.alphabet, model.insertion_budget,
                      model.transducer_features);
  std::set<std::string> candidates;  // ascending, so ties pick the smallest u
  for (int i = 0; i < n_samples; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    candidates.insert(lattice.sample(rng).canonical);
  }

  Analysis best;
  best.surface.assign(w);
  double best_score = kNegInf;
  for (const std::string& u : candidates) {
    auto [tree, log_tree] = cky_viterbi(u, model.weights, model.lexicon, model.parser_features);
    double score = log_tree + log_pair_score(u, w, model.weights, model.insertion_budget,
                                             model.transducer_features);
    if (score > best_score) {
      best_score = score;
      best.canonical = u;
      best.tree = std::move(tree);
    }
  }
  return best;
}

}  // namespace morsel
