#include "morsel/parser.hpp"

#include <cmath>

#include "morsel/numeric.hpp"

namespace morsel {

namespace {

template <class Emit>
void emit_production_features(const AnchoredProduction& p, std::string_view u,
                              const Lexicon& lexicon, const ParserFeatureConfig& cfg,
                              std::string& buf, Emit&& emit) {
  std::string_view seg = u.substr(static_cast<std::size_t>(p.i),
                                  static_cast<std::size_t>(p.j - p.i));
  if (cfg.span_segment) {
    buf.assign("p:seg:");
    buf.append(seg);
    emit(std::string_view(buf));
  }
  if (cfg.lexicon_membership && lexicon.contains(seg)) emit(std::string_view("p:lex"));
  if (cfg.segment_label) {
    buf.assign("p:sl:");
    buf.push_back(label_letter(p.parent));
    buf.push_back(':');
    buf.append(seg);
    emit(std::string_view(buf));
  }
  if (p.kind == AnchoredProduction::Kind::Binary) {
    if (cfg.production)
      emit(std::string_view(p.left == Label::Prefix ? "p:r:WPW" : "p:r:WWS"));
    if (cfg.production_backoff) emit(std::string_view("p:par:W"));
  } else if (cfg.production) {
    buf.assign("p:r:");
    buf.push_back(label_letter(p.parent));
    buf.push_back('+');
    emit(std::string_view(buf));
  }
}

double production_logw(const AnchoredProduction& p, std::string_view u, const Lexicon& lexicon,
                       const SparseFeatureVector& weights, const ParserFeatureConfig& cfg,
                       std::string& buf) {
  double s = 0.0;
  emit_production_features(p, u, lexicon, cfg, buf,
                           [&](std::string_view key) { s += weights.get(key); });
  return s;
}

AnchoredProduction make_preterminal(Label label, int i, int j) {
  AnchoredProduction p;
  p.kind = AnchoredProduction::Kind::Preterminal;
  p.parent = label;
  p.i = i;
  p.j = j;
  return p;
}

AnchoredProduction make_binary(bool prefix_rule, int i, int split, int j) {
  AnchoredProduction p;
  p.kind = AnchoredProduction::Kind::Binary;
  p.parent = Label::Word;
  p.left = prefix_rule ? Label::Prefix : Label::Word;
  p.right = prefix_rule ? Label::Word : Label::Suffix;
  p.i = i;
  p.split = split;
  p.j = j;
  return p;
}

void collect_productions(const ParseTree& t, std::vector<AnchoredProduction>& out) {
  if (t.label == Label::Root) {
    for (const ParseTree& c : t.children) collect_productions(c, out);
    return;
  }
  if (t.leaf()) {
    out.push_back(make_preterminal(t.label, t.start, t.end));
    return;
  }
  bool prefix_rule = t.children[0].label == Label::Prefix;
  out.push_back(make_binary(prefix_rule, t.start, t.children[0].end, t.end));
  collect_productions(t.children[0], out);
  collect_productions(t.children[1], out);
}

}  // namespace

std::vector<AnchoredProduction> anchored_productions(const ParseTree& tree) {
  std::vector<AnchoredProduction> out;
  collect_productions(tree, out);
  return out;
}

SparseFeatureVector tree_feature_vector(const ParseTree& tree, std::string_view u,
                                        const Lexicon& lexicon, const ParserFeatureConfig& cfg) {
  if (auto err = validate_tree(tree, u))
    throw ValidationError("tree_feature_vector: " + *err);
  SparseFeatureVector f;
  std::string buf;
  for (const AnchoredProduction& p : anchored_productions(tree))
    emit_production_features(p, u, lexicon, cfg, buf,
                             [&](std::string_view key) { f.add(key, 1.0); });
  return f;
}

double log_tree_score(const ParseTree& tree, std::string_view u,
                      const SparseFeatureVector& weights, const Lexicon& lexicon,
                      const ParserFeatureConfig& cfg) {
  if (auto err = validate_tree(tree, u)) throw ValidationError("log_tree_score: " + *err);
  double s = 0.0;
  std::string buf;
  for (const AnchoredProduction& p : anchored_productions(tree))
    s += production_logw(p, u, lexicon, weights, cfg, buf);
  return s;
}

double tree_score(const ParseTree& tree, std::string_view u, const SparseFeatureVector& weights,
                  const Lexicon& lexicon, const ParserFeatureConfig& cfg) {
  return std::exp(log_tree_score(tree, u, weights, lexicon, cfg));
}

InsideChart::InsideChart(std::string_view u, const SparseFeatureVector& weights,
                         const Lexicon& lexicon, const ParserFeatureConfig& cfg)
    : u_(u), weights_(weights), lexicon_(lexicon), cfg_(cfg), n_(static_cast<int>(u.size())) {
  if (u.empty()) throw ValidationError("inside chart: canonical form is empty");
  std::size_t cells = static_cast<std::size_t>(n_ + 1) * static_cast<std::size_t>(n_ + 1);
  in_word_.assign(cells, kNegInf);
  in_prefix_.assign(cells, kNegInf);
  in_suffix_.assign(cells, kNegInf);
  pre_word_.assign(cells, kNegInf);
  pre_prefix_.assign(cells, kNegInf);
  pre_suffix_.assign(cells, kNegInf);
  std::string buf;
  for (int width = 1; width <= n_; ++width) {
    for (int i = 0; i + width <= n_; ++i) {
      int j = i + width;
      std::size_t c = cell(i, j);
      pre_word_[c] = production_logw(make_preterminal(Label::Word, i, j), u_, lexicon_,
                                     weights_, cfg_, buf);
      pre_prefix_[c] = production_logw(make_preterminal(Label::Prefix, i, j), u_, lexicon_,
                                       weights_, cfg_, buf);
      pre_suffix_[c] = production_logw(make_preterminal(Label::Suffix, i, j), u_, lexicon_,
                                       weights_, cfg_, buf);
      in_prefix_[c] = pre_prefix_[c];
      in_suffix_[c] = pre_suffix_[c];
      double v = pre_word_[c];
      for (int m = i + 1; m < j; ++m) {
        v = log_add(v, binary_logw(true, i, m, j) + in_prefix_[cell(i, m)] +
                           in_word_[cell(m, j)]);
        v = log_add(v, binary_logw(false, i, m, j) + in_word_[cell(i, m)] +
                           in_suffix_[cell(m, j)]);
      }
      in_word_[c] = v;
    }
  }
}

double InsideChart::preterminal_logw(Label label, int i, int j) const {
  std::size_t c = cell(i, j);
  switch (label) {
    case Label::Word: return pre_word_[c];
    case Label::Prefix: return pre_prefix_[c];
    case Label::Suffix: return pre_suffix_[c];
    default: return kNegInf;
  }
}

double InsideChart::binary_logw(bool prefix_rule, int i, int split, int j) const {
  // The anchored binary features do not depend on the split point, but keep
  // the full anchoring in one place so every caller scores identically.
  std::string buf;
  return production_logw(make_binary(prefix_rule, i, split, j), u_, lexicon_, weights_, cfg_,
                         buf);
}

double InsideChart::log_inside() const { return in_word_[cell(0, n_)]; }

TreeSample InsideChart::sample(Rng& rng) const {
  TreeSample out;
  std::vector<double> logw;
  struct Choice {
    int kind;  // 0 preterminal, 1 prefix rule, 2 suffix rule
    int split;
  };
  std::vector<Choice> choices;

  // Recursive top-down draw over Word cells; Prefix/Suffix children are
  // always preterminal and contribute probability one given the choice.
  auto sample_word = [&](auto&& self, int i, int j) -> ParseTree {
    std::size_t c = cell(i, j);
    logw.clear();
    choices.clear();
    logw.push_back(pre_word_[c]);
    choices.push_back({0, -1});
    for (int m = i + 1; m < j; ++m) {
      logw.push_back(binary_logw(true, i, m, j) + in_prefix_[cell(i, m)] +
                     in_word_[cell(m, j)]);
      choices.push_back({1, m});
      logw.push_back(binary_logw(false, i, m, j) + in_word_[cell(i, m)] +
                     in_suffix_[cell(m, j)]);
      choices.push_back({2, m});
    }
    std::size_t pick = sample_log_categorical(logw, rng);
    out.log_probability += logw[pick] - in_word_[c];
    Choice ch = choices[pick];
    if (ch.kind == 0) return ParseTree{Label::Word, i, j, {}};
    if (ch.kind == 1) {
      ParseTree left{Label::Prefix, i, ch.split, {}};
      ParseTree right = self(self, ch.split, j);
      return ParseTree{Label::Word, i, j, {std::move(left), std::move(right)}};
    }
    ParseTree left = self(self, i, ch.split);
    ParseTree right{Label::Suffix, ch.split, j, {}};
    return ParseTree{Label::Word, i, j, {std::move(left), std::move(right)}};
  };

  ParseTree word = sample_word(sample_word, 0, n_);
  out.tree = ParseTree{Label::Root, 0, n_, {std::move(word)}};
  return out;
}

SparseFeatureVector InsideChart::expected_features() const {
  double log_z = log_inside();
  if (log_z == kNegInf) throw Error("expected_features: empty inside chart");
  std::size_t cells = static_cast<std::size_t>(n_ + 1) * static_cast<std::size_t>(n_ + 1);
  std::vector<double> out_word(cells, kNegInf), out_prefix(cells, kNegInf),
      out_suffix(cells, kNegInf);
  out_word[cell(0, n_)] = 0.0;  // Root -> Word carries weight one

  SparseFeatureVector acc;
  std::string buf;
  auto add_production = [&](const AnchoredProduction& p, double post) {
    if (post <= 0) return;
    emit_production_features(p, u_, lexicon_, cfg_, buf,
                             [&](std::string_view key) { acc.add(key, post); });
  };

  for (int width = n_; width >= 1; --width) {
    for (int i = 0; i + width <= n_; ++i) {
      int j = i + width;
      std::size_t c = cell(i, j);
      double ow = out_word[c];
      if (ow == kNegInf) continue;
      for (int m = i + 1; m < j; ++m) {
        double wp = binary_logw(true, i, m, j);
        double ws = binary_logw(false, i, m, j);
        std::size_t cl = cell(i, m), cr = cell(m, j);
        add_production(make_binary(true, i, m, j),
                       std::exp(ow + wp + in_prefix_[cl] + in_word_[cr] - log_z));
        add_production(make_binary(false, i, m, j),
                       std::exp(ow + ws + in_word_[cl] + in_suffix_[cr] - log_z));
        out_prefix[cl] = log_add(out_prefix[cl], ow + wp + in_word_[cr]);
        out_word[cr] = log_add(out_word[cr], ow + wp + in_prefix_[cl]);
        out_word[cl] = log_add(out_word[cl], ow + ws + in_suffix_[cr]);
        out_suffix[cr] = log_add(out_suffix[cr], ow + ws + in_word_[cl]);
      }
    }
  }
  for (int width = n_; width >= 1; --width) {
    for (int i = 0; i + width <= n_; ++i) {
      int j = i + width;
      std::size_t c = cell(i, j);
      add_production(make_preterminal(Label::Word, i, j),
                     std::exp(out_word[c] + pre_word_[c] - log_z));
      add_production(make_preterminal(Label::Prefix, i, j),
                     std::exp(out_prefix[c] + pre_prefix_[c] - log_z));
      add_production(make_preterminal(Label::Suffix, i, j),
                     std::exp(out_suffix[c] + pre_suffix_[c] - log_z));
    }
  }
  return acc;
}

double log_inside(std::string_view u, const SparseFeatureVector& weights, const Lexicon& lexicon,
                  const ParserFeatureConfig& cfg) {
  return InsideChart(u, weights, lexicon, cfg).log_inside();
}

double inside(std::string_view u, const SparseFeatureVector& weights, const Lexicon& lexicon,
              const ParserFeatureConfig& cfg) {
  return std::exp(log_inside(u, weights, lexicon, cfg));
}

std::pair<ParseTree, double> cky_viterbi(std::string_view u, const SparseFeatureVector& weights,
                                         const Lexicon& lexicon,
                                         const ParserFeatureConfig& cfg) {
  if (u.empty()) throw ValidationError("cky_viterbi: canonical form is empty");
  int n = static_cast<int>(u.size());
  std::size_t cells = static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1);
  auto cell = [n](int i, int j) {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n + 1) +
           static_cast<std::size_t>(j);
  };
  std::vector<double> best_word(cells, kNegInf), best_prefix(cells, kNegInf),
      best_suffix(cells, kNegInf);
  struct Back {
    int kind = 0;  // 0 preterminal, 1 prefix rule, 2 suffix rule
    int split = -1;
  };
  std::vector<Back> back(cells);
  std::string buf;
  for (int width = 1; width <= n; ++width) {
    for (int i = 0; i + width <= n; ++i) {
      int j = i + width;
      std::size_t c = cell(i, j);
      best_prefix[c] =
          production_logw(make_preterminal(Label::Prefix, i, j), u, lexicon, weights, cfg, buf);
      best_suffix[c] =
          production_logw(make_preterminal(Label::Suffix, i, j), u, lexicon, weights, cfg, buf);
      // Candidate order implements the tie-break: preterminal first, then
      // split point ascending, Prefix branch before Suffix branch; only a
      // strictly better score replaces the incumbent.
      double best =
          production_logw(make_preterminal(Label::Word, i, j), u, lexicon, weights, cfg, buf);
      Back bk{0, -1};
      for (int m = i + 1; m < j; ++m) {
        double cand = production_logw(make_binary(true, i, m, j), u, lexicon, weights, cfg, buf) +
                      best_prefix[cell(i, m)] + best_word[cell(m, j)];
        if (cand > best) {
          best = cand;
          bk = {1, m};
        }
        cand = production_logw(make_binary(false, i, m, j), u, lexicon, weights, cfg, buf) +
               best_word[cell(i, m)] + best_suffix[cell(m, j)];
        if (cand > best) {
          best = cand;
          bk = {2, m};
        }
      }
      best_word[c] = best;
      back[c] = bk;
    }
  }

  auto rebuild = [&](auto&& self, int i, int j) -> ParseTree {
    const Back& bk = back[cell(i, j)];
    if (bk.kind == 0) return ParseTree{Label::Word, i, j, {}};
    if (bk.kind == 1) {
      ParseTree left{Label::Prefix, i, bk.split, {}};
      ParseTree right = self(self, bk.split, j);
      return ParseTree{Label::Word, i, j, {std::move(left), std::move(right)}};
    }
    ParseTree left = self(self, i, bk.split);
    ParseTree right{Label::Suffix, bk.split, j, {}};
    return ParseTree{Label::Word, i, j, {std::move(left), std::move(right)}};
  };
  ParseTree word = rebuild(rebuild, 0, n);
  return {ParseTree{Label::Root, 0, n, {std::move(word)}}, best_word[cell(0, n)]};
}

TreeSample sample_tree(std::string_view u, const SparseFeatureVector& weights,
                       const Lexicon& lexicon, const ParserFeatureConfig& cfg,
                       std::uint64_t seed) {
  InsideChart chart(u, weights, lexicon, cfg);
  Rng rng(seed);
  return chart.sample(rng);
}

SparseFeatureVector inside_expected_features(std::string_view u,
                                             const SparseFeatureVector& weights,
                                             const Lexicon& lexicon,
                                             const ParserFeatureConfig& cfg) {
  return InsideChart(u, weights, lexicon, cfg).expected_features();
}

}  // namespace morsel
