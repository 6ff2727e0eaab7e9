#include "morsel/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <unordered_map>

#include "morsel/numeric.hpp"
#include "morsel/parallel.hpp"
#include "morsel/transducer.hpp"

namespace morsel {

namespace {

template <class Emit>
void emit_segment_features(std::string_view u, int i, int j, const Lexicon& lexicon,
                           const ChainFeatureConfig& cfg, std::string& buf, Emit&& emit) {
  std::string_view seg =
      u.substr(static_cast<std::size_t>(i), static_cast<std::size_t>(j - i));
  if (cfg.segment) {
    buf.assign("s:seg:");
    buf.append(seg);
    emit(std::string_view(buf));
  }
  if (cfg.lexicon_membership && lexicon.contains(seg)) emit(std::string_view("s:lex"));
  if (cfg.length_bucket) {
    buf.assign("s:len:");
    buf.push_back(static_cast<char>('0' + std::min(j - i, 8)));
    emit(std::string_view(buf));
  }
  if (cfg.boundary_bigram) {
    buf.assign("s:bb:");
    buf.push_back(u[static_cast<std::size_t>(j - 1)]);
    buf.push_back(j < static_cast<int>(u.size()) ? u[static_cast<std::size_t>(j)] : '$');
    emit(std::string_view(buf));
  }
}

double segment_logw(std::string_view u, int i, int j, const SparseFeatureVector& weights,
                    const Lexicon& lexicon, const ChainFeatureConfig& cfg, std::string& buf) {
  double s = 0.0;
  emit_segment_features(u, i, j, lexicon, cfg, buf,
                        [&](std::string_view key) { s += weights.get(key); });
  return s;
}

template <class Fn>
void for_each_segment(const FlatSegmentation& s, std::string_view u, Fn&& fn) {
  int start = 0;
  for (int b : s.boundaries) {
    fn(start, b);
    start = b;
  }
  fn(start, static_cast<int>(u.size()));
}

}  // namespace

std::optional<std::string> validate_segmentation(const FlatSegmentation& s,
                                                 std::string_view u) {
  if (u.empty()) return "canonical form is empty";
  int n = static_cast<int>(u.size());
  int prev = 0;
  for (int b : s.boundaries) {
    if (b <= prev || b >= n)
      return "boundary " + std::to_string(b) + " out of order or out of range for length " +
             std::to_string(n);
    prev = b;
  }
  return std::nullopt;
}

std::vector<std::string> segmentation_segments(const FlatSegmentation& s, std::string_view u) {
  if (auto err = validate_segmentation(s, u))
    throw ValidationError("segmentation_segments: " + *err);
  std::vector<std::string> out;
  for_each_segment(s, u, [&](int i, int j) {
    out.emplace_back(u.substr(static_cast<std::size_t>(i), static_cast<std::size_t>(j - i)));
  });
  return out;
}

FlatSegmentation segmentation_from_segments(const std::vector<std::string>& segments) {
  FlatSegmentation s;
  int pos = 0;
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    pos += static_cast<int>(segments[i].size());
    s.boundaries.push_back(pos);
  }
  return s;
}

namespace {

void collect_leaf_ends(const ParseTree& t, std::vector<int>& ends) {
  if (t.leaf() && t.label != Label::Root) {
    ends.push_back(t.end);
    return;
  }
  for (const ParseTree& c : t.children) collect_leaf_ends(c, ends);
}

}  // namespace

FlatSegmentation segmentation_from_tree(const ParseTree& tree) {
  std::vector<int> ends;
  collect_leaf_ends(tree, ends);
  if (ends.empty()) throw ValidationError("segmentation_from_tree: tree has no leaves");
  FlatSegmentation s;
  s.boundaries.assign(ends.begin(), ends.end() - 1);
  return s;
}

std::vector<FlatSegmentation> enumerate_segmentations(int n) {
  if (n < 1 || n > 12)
    throw GuardError("enumerate_segmentations: length must be in [1, 12], got " +
                     std::to_string(n));
  std::vector<FlatSegmentation> out;
  std::uint32_t masks = 1u << (n - 1);
  out.reserve(masks);
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    FlatSegmentation s;
    for (int b = 1; b < n; ++b)
      if (mask & (1u << (b - 1))) s.boundaries.push_back(b);
    out.push_back(std::move(s));
  }
  return out;
}

SparseFeatureVector chain_feature_vector(const FlatSegmentation& s, std::string_view u,
                                         const Lexicon& lexicon,
                                         const ChainFeatureConfig& cfg) {
  if (auto err = validate_segmentation(s, u))
    throw ValidationError("chain_feature_vector: " + *err);
  SparseFeatureVector f;
  std::string buf;
  for_each_segment(s, u, [&](int i, int j) {
    emit_segment_features(u, i, j, lexicon, cfg, buf,
                          [&](std::string_view key) { f.add(key, 1.0); });
  });
  return f;
}

double log_semimarkov_score(const FlatSegmentation& s, std::string_view u,
                            const SparseFeatureVector& weights, const Lexicon& lexicon,
                            const ChainFeatureConfig& cfg) {
  if (auto err = validate_segmentation(s, u))
    throw ValidationError("log_semimarkov_score: " + *err);
  double total = 0.0;
  std::string buf;
  for_each_segment(s, u, [&](int i, int j) {
    total += segment_logw(u, i, j, weights, lexicon, cfg, buf);
  });
  return total;
}

double semimarkov_score(const FlatSegmentation& s, std::string_view u,
                        const SparseFeatureVector& weights, const Lexicon& lexicon,
                        const ChainFeatureConfig& cfg) {
  return std::exp(log_semimarkov_score(s, u, weights, lexicon, cfg));
}

ChainChart::ChainChart(std::string_view u, const SparseFeatureVector& weights,
                       const Lexicon& lexicon, const ChainFeatureConfig& cfg)
    : u_(u), lexicon_(lexicon), cfg_(cfg), n_(static_cast<int>(u.size())) {
  if (u.empty()) throw ValidationError("chain chart: canonical form is empty");
  seg_logw_.assign(static_cast<std::size_t>(n_ + 1) * static_cast<std::size_t>(n_ + 1),
                   kNegInf);
  std::string buf;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j <= n_; ++j)
      seg_logw_[arc(i, j)] = segment_logw(u_, i, j, weights, lexicon_, cfg_, buf);
  suffix_.assign(static_cast<std::size_t>(n_ + 1), kNegInf);
  suffix_[static_cast<std::size_t>(n_)] = 0.0;
  for (int i = n_ - 1; i >= 0; --i) {
    double v = kNegInf;
    for (int j = i + 1; j <= n_; ++j)
      v = log_add(v, seg_logw_[arc(i, j)] + suffix_[static_cast<std::size_t>(j)]);
    suffix_[static_cast<std::size_t>(i)] = v;
  }
}

double ChainChart::log_partition() const { return suffix_[0]; }

SegmentationSample ChainChart::sample(Rng& rng) const {
  SegmentationSample out;
  std::vector<double> logw;
  int i = 0;
  while (i < n_) {
    logw.clear();
    for (int j = i + 1; j <= n_; ++j)
      logw.push_back(seg_logw_[arc(i, j)] + suffix_[static_cast<std::size_t>(j)]);
    std::size_t pick = sample_log_categorical(logw, rng);
    out.log_probability += logw[pick] - suffix_[static_cast<std::size_t>(i)];
    int j = i + 1 + static_cast<int>(pick);
    if (j < n_) out.segmentation.boundaries.push_back(j);
    i = j;
  }
  return out;
}

SparseFeatureVector ChainChart::expected_features() const {
  std::vector<double> prefix(static_cast<std::size_t>(n_ + 1), kNegInf);
  prefix[0] = 0.0;
  for (int j = 1; j <= n_; ++j) {
    double v = kNegInf;
    for (int i = 0; i < j; ++i)
      v = log_add(v, prefix[static_cast<std::size_t>(i)] + seg_logw_[arc(i, j)]);
    prefix[static_cast<std::size_t>(j)] = v;
  }
  double log_z = log_partition();
  SparseFeatureVector acc;
  std::string buf;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j <= n_; ++j) {
      double post = std::exp(prefix[static_cast<std::size_t>(i)] + seg_logw_[arc(i, j)] +
                             suffix_[static_cast<std::size_t>(j)] - log_z);
      if (post <= 0) continue;
      emit_segment_features(u_, i, j, lexicon_, cfg_, buf,
                            [&](std::string_view key) { acc.add(key, post); });
    }
  return acc;
}

std::pair<FlatSegmentation, double> ChainChart::viterbi() const {
  std::vector<double> best(static_cast<std::size_t>(n_ + 1), kNegInf);
  std::vector<int> count(static_cast<std::size_t>(n_ + 1), 0);
  std::vector<int> next(static_cast<std::size_t>(n_ + 1), -1);
  best[static_cast<std::size_t>(n_)] = 0.0;
  // Suffix DP; at each start the preferred arc is (score desc, segment count
  // asc, end index desc) so ties resolve to fewer segments, then to the
  // longest first segment from the left.
  for (int i = n_ - 1; i >= 0; --i) {
    std::size_t si = static_cast<std::size_t>(i);
    for (int j = i + 1; j <= n_; ++j) {
      std::size_t sj = static_cast<std::size_t>(j);
      double v = seg_logw_[arc(i, j)] + best[sj];
      int c = 1 + count[sj];
      bool take = v > best[si] || (v == best[si] && c <= count[si]);
      if (take) {
        best[si] = v;
        count[si] = c;
        next[si] = j;
      }
    }
  }
  FlatSegmentation s;
  for (int i = next[0]; i != -1 && i < n_; i = next[static_cast<std::size_t>(i)])
    s.boundaries.push_back(i);
  return {std::move(s), best[0]};
}

double log_semimarkov_partition(std::string_view u, const SparseFeatureVector& weights,
                                const Lexicon& lexicon, const ChainFeatureConfig& cfg) {
  return ChainChart(u, weights, lexicon, cfg).log_partition();
}

double semimarkov_partition(std::string_view u, const SparseFeatureVector& weights,
                            const Lexicon& lexicon, const ChainFeatureConfig& cfg) {
  return std::exp(log_semimarkov_partition(u, weights, lexicon, cfg));
}

SparseFeatureVector chain_expected_features(std::string_view u,
                                            const SparseFeatureVector& weights,
                                            const Lexicon& lexicon,
                                            const ChainFeatureConfig& cfg) {
  return ChainChart(u, weights, lexicon, cfg).expected_features();
}

std::pair<FlatSegmentation, double> semimarkov_viterbi(std::string_view u,
                                                       const SparseFeatureVector& weights,
                                                       const Lexicon& lexicon,
                                                       const ChainFeatureConfig& cfg) {
  return ChainChart(u, weights, lexicon, cfg).viterbi();
}

SegmentationSample sample_segmentation(std::string_view u, const SparseFeatureVector& weights,
                                       const Lexicon& lexicon, const ChainFeatureConfig& cfg,
                                       std::uint64_t seed) {
  ChainChart chart(u, weights, lexicon, cfg);
  Rng rng(seed);
  return chart.sample(rng);
}

// --- joint flat model --------------------------------------------------------

namespace {

void check_flat_guard(std::string_view w, const ModelParameters& model, const char* op) {
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

double flat_log_unnormalized_marginal(std::string_view u, const FlatSegmentation& s,
                                      std::string_view w, const ModelParameters& model) {
  double chain_part =
      log_semimarkov_score(s, u, model.weights, model.lexicon, model.chain_features);
  double pair_part = log_pair_score(u, w, model.weights, model.insertion_budget,
                                    model.transducer_features);
  return chain_part + pair_part;
}

double flat_brute_force_log_partition(std::string_view w, const ModelParameters& model) {
  check_flat_guard(w, model, "flat_brute_force_partition");
  int max_len = static_cast<int>(w.size()) + model.insertion_budget;
  double log_z = kNegInf;
  for (const std::string& u : all_canonical_strings(model.alphabet, max_len)) {
    std::vector<Alignment> alignments =
        enumerate_alignments(u, w, model.transducer_features.allow_insert,
                             model.transducer_features.allow_delete);
    if (alignments.empty()) continue;
    double log_align = kNegInf;
    for (const Alignment& a : alignments)
      log_align = log_add(log_align, log_score_triple(u, a, w, model.weights,
                                                      model.transducer_features));
    double log_chains = kNegInf;
    for (const FlatSegmentation& s : enumerate_segmentations(static_cast<int>(u.size())))
      log_chains = log_add(log_chains, log_semimarkov_score(s, u, model.weights, model.lexicon,
                                                            model.chain_features));
    log_z = log_add(log_z, log_align + log_chains);
  }
  return log_z;
}

double flat_brute_force_partition(std::string_view w, const ModelParameters& model) {
  return std::exp(flat_brute_force_log_partition(w, model));
}

SparseFeatureVector flat_brute_force_logz_gradient(std::string_view w,
                                                   const ModelParameters& model) {
  check_flat_guard(w, model, "flat_brute_force_logz_gradient");
  int max_len = static_cast<int>(w.size()) + model.insertion_budget;

  struct PerU {
    double log_align = kNegInf;
    double log_chains = kNegInf;
    SparseFeatureVector align_post;
    SparseFeatureVector chain_post;
  };
  std::vector<PerU> table;
  double log_z = kNegInf;
  for (const std::string& u : all_canonical_strings(model.alphabet, max_len)) {
    std::vector<Alignment> alignments =
        enumerate_alignments(u, w, model.transducer_features.allow_insert,
                             model.transducer_features.allow_delete);
    if (alignments.empty()) continue;
    PerU row;
    std::vector<double> align_logs;
    for (const Alignment& a : alignments) {
      double l = log_score_triple(u, a, w, model.weights, model.transducer_features);
      align_logs.push_back(l);
      row.log_align = log_add(row.log_align, l);
    }
    for (std::size_t i = 0; i < alignments.size(); ++i)
      row.align_post.add_scaled(
          alignment_features(u, alignments[i], w, model.transducer_features),
          std::exp(align_logs[i] - row.log_align));

    std::vector<FlatSegmentation> segs = enumerate_segmentations(static_cast<int>(u.size()));
    std::vector<double> chain_logs;
    for (const FlatSegmentation& s : segs) {
      double l = log_semimarkov_score(s, u, model.weights, model.lexicon, model.chain_features);
      chain_logs.push_back(l);
      row.log_chains = log_add(row.log_chains, l);
    }
    for (std::size_t i = 0; i < segs.size(); ++i)
      row.chain_post.add_scaled(
          chain_feature_vector(segs[i], u, model.lexicon, model.chain_features),
          std::exp(chain_logs[i] - row.log_chains));

    log_z = log_add(log_z, row.log_align + row.log_chains);
    table.push_back(std::move(row));
  }

  SparseFeatureVector grad;
  for (const PerU& row : table) {
    double mass = std::exp(row.log_align + row.log_chains - log_z);
    grad.add_scaled(row.align_post, mass);
    grad.add_scaled(row.chain_post, mass);
  }
  return grad;
}

namespace {

struct FlatEstimateResult {
  double log_z_hat = kNegInf;
  SparseFeatureVector gradient;
};

FlatEstimateResult flat_estimate_engine(std::string_view w, const ModelParameters& model,
                                        int n_samples, std::uint64_t seed, int workers) {
  if (n_samples < 1)
    throw ValidationError("flat_estimate_logz_gradient: n_samples must be >= 1");
  EditLattice lattice(w, model.weights, model.alphabet, model.insertion_budget,
                      model.transducer_features);
  double log_zt = lattice.log_partition();

  struct Draw {
    std::uint32_t u_index = 0;
    Rng rng{0};
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
  }

  struct PerU {
    std::unique_ptr<ChainChart> chart;
    double log_chain = kNegInf;
    SparseFeatureVector align_post;
  };
  std::vector<PerU> per_u(unique_u.size());
  for_each_index(unique_u.size(), workers, [&](std::size_t k) {
    per_u[k].chart = std::make_unique<ChainChart>(unique_u[k], model.weights, model.lexicon,
                                                  model.chain_features);
    per_u[k].log_chain = per_u[k].chart->log_partition();
    per_u[k].align_post =
        alignment_posterior_features(unique_u[k], w, model.weights, model.insertion_budget,
                                     model.transducer_features);
  });

  std::vector<FlatSegmentation> segs(n);
  for_each_index(n, workers, [&](std::size_t i) {
    Rng rng = draws[i].rng;
    segs[i] = per_u[draws[i].u_index].chart->sample(rng).segmentation;
  });

  std::vector<double> logw(n);
  for (std::size_t i = 0; i < n; ++i) logw[i] = log_zt + per_u[draws[i].u_index].log_chain;
  double lse = log_sum(logw);

  FlatEstimateResult result;
  result.log_z_hat = lse - std::log(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double wbar = std::exp(logw[i] - lse);
    if (wbar <= 0) continue;
    const PerU& row = per_u[draws[i].u_index];
    result.gradient.add_scaled(
        chain_feature_vector(segs[i], unique_u[draws[i].u_index], model.lexicon,
                             model.chain_features),
        wbar);
    result.gradient.add_scaled(row.align_post, wbar);
  }
  return result;
}

}  // namespace

SparseFeatureVector flat_estimate_logz_gradient(std::string_view w,
                                                const ModelParameters& model, int n_samples,
                                                std::uint64_t seed, int workers) {
  return flat_estimate_engine(w, model, n_samples, seed, workers).gradient;
}

LikelihoodEstimate flat_log_likelihood_and_gradient(const TreebankEntry& entry,
                                                    const ModelParameters& model, int n_samples,
                                                    std::uint64_t seed, int workers) {
  if (static_cast<int>(entry.canonical.size()) >
      static_cast<int>(entry.surface.size()) + model.insertion_budget)
    throw DataError("entry '" + entry.surface + "': canonical form '" + entry.canonical +
                    "' exceeds surface length + insertion budget (" +
                    std::to_string(entry.surface.size()) + " + " +
                    std::to_string(model.insertion_budget) + ")");

  FlatSegmentation gold = segmentation_from_tree(entry.tree);
  SparseFeatureVector observed =
      chain_feature_vector(gold, entry.canonical, model.lexicon, model.chain_features);
  observed.add_scaled(
      alignment_posterior_features(entry.canonical, entry.surface, model.weights,
                                   model.insertion_budget, model.transducer_features),
      1.0);

  FlatEstimateResult est = flat_estimate_engine(entry.surface, model, n_samples, seed, workers);

  LikelihoodEstimate out;
  out.log_likelihood =
      flat_log_unnormalized_marginal(entry.canonical, gold, entry.surface, model) -
      est.log_z_hat;
  out.gradient = std::move(observed);
  out.gradient.add_scaled(est.gradient, -1.0);
  return out;
}

FlatAnalysis flat_decode(std::string_view w, const ModelParameters& model, int n_samples,
                         std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("flat_decode: n_samples must be >= 1");
  EditLattice lattice(w, model.weights, model.alphabet, model.insertion_budget,
                      model.transducer_features);
  std::set<std::string> candidates;
  for (int i = 0; i < n_samples; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    candidates.insert(lattice.sample(rng).canonical);
  }

  FlatAnalysis best;
  best.surface.assign(w);
  double best_score = kNegInf;
  for (const std::string& u : candidates) {
    auto [seg, log_chain] =
        semimarkov_viterbi(u, model.weights, model.lexicon, model.chain_features);
    double score = log_chain + log_pair_score(u, w, model.weights, model.insertion_budget,
                                              model.transducer_features);
    if (score > best_score) {
      best_score = score;
      best.canonical = u;
      best.segmentation = std::move(seg);
    }
  }
  return best;
}

}  // namespace morsel
