#include "morsel/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "morsel/errors.hpp"

namespace morsel {

namespace {

void check_same_size(std::size_t pred, std::size_t gold, const char* op) {
  if (pred != gold)
    throw ValidationError(std::string(op) + ": prediction/gold counts differ (" +
                          std::to_string(pred) + " vs " + std::to_string(gold) + ")");
  if (pred == 0) throw ValidationError(std::string(op) + ": empty evaluation set");
}

double harmonic_f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

template <class T>
std::size_t multiset_overlap(std::vector<T> a, std::vector<T> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<T> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return both.size();
}

std::string join_segments(const SegmentList& segments) {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out.push_back('#');
    out += segments[i];
  }
  return out;
}

}  // namespace

double accuracy(const std::vector<SegmentList>& pred, const std::vector<SegmentList>& gold) {
  check_same_size(pred.size(), gold.size(), "accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == gold[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

PRF morpheme_f1(const std::vector<SegmentList>& pred, const std::vector<SegmentList>& gold) {
  check_same_size(pred.size(), gold.size(), "morpheme_f1");
  std::size_t overlap = 0, n_pred = 0, n_gold = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    overlap += multiset_overlap(pred[i], gold[i]);
    n_pred += pred[i].size();
    n_gold += gold[i].size();
  }
  PRF out;
  out.precision = n_pred ? static_cast<double>(overlap) / static_cast<double>(n_pred) : 0.0;
  out.recall = n_gold ? static_cast<double>(overlap) / static_cast<double>(n_gold) : 0.0;
  out.f1 = harmonic_f1(out.precision, out.recall);
  return out;
}

int levenshtein(std::string_view a, std::string_view b) {
  std::vector<int> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      int next = std::min({row[j] + 1, row[j - 1] + 1,
                           diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = row[j];
      row[j] = next;
    }
  }
  return row[b.size()];
}

double boundary_edit_distance(const std::vector<SegmentList>& pred,
                              const std::vector<SegmentList>& gold) {
  check_same_size(pred.size(), gold.size(), "boundary_edit_distance");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (const std::vector<SegmentList>* lists : {&pred, &gold})
      for (const std::string& seg : (*lists)[i])
        if (seg.find('#') != std::string::npos)
          throw ValidationError("boundary_edit_distance: segment contains '#'");
    total += levenshtein(join_segments(pred[i]), join_segments(gold[i]));
  }
  return total / static_cast<double>(pred.size());
}

namespace {

void collect_constituents(const ParseTree& t, std::string_view u,
                          std::vector<LabeledConstituent>& out) {
  if (t.label != Label::Root)
    out.push_back({t.label,
                   std::string(u.substr(static_cast<std::size_t>(t.start),
                                        static_cast<std::size_t>(t.end - t.start))),
                   t.start});
  for (const ParseTree& c : t.children) collect_constituents(c, u, out);
}

}  // namespace

std::vector<LabeledConstituent> labeled_constituents(const ParseTree& tree,
                                                     std::string_view u) {
  if (auto err = validate_tree(tree, u))
    throw ValidationError("labeled_constituents: " + *err);
  std::vector<LabeledConstituent> out;
  collect_constituents(tree, u, out);
  return out;
}

PRF constituent_f1(const std::vector<AnalyzedForm>& pred,
                   const std::vector<AnalyzedForm>& gold) {
  check_same_size(pred.size(), gold.size(), "constituent_f1");
  std::size_t overlap = 0, n_pred = 0, n_gold = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::vector<LabeledConstituent> p = labeled_constituents(pred[i].tree, pred[i].canonical);
    std::vector<LabeledConstituent> g = labeled_constituents(gold[i].tree, gold[i].canonical);
    overlap += multiset_overlap(p, g);
    n_pred += p.size();
    n_gold += g.size();
  }
  PRF out;
  out.precision = n_pred ? static_cast<double>(overlap) / static_cast<double>(n_pred) : 0.0;
  out.recall = n_gold ? static_cast<double>(overlap) / static_cast<double>(n_gold) : 0.0;
  out.f1 = harmonic_f1(out.precision, out.recall);
  return out;
}

SegMetrics seg_metrics(const std::vector<SegmentList>& pred,
                       const std::vector<SegmentList>& gold) {
  SegMetrics m;
  m.accuracy = accuracy(pred, gold);
  PRF prf = morpheme_f1(pred, gold);
  m.morpheme_precision = prf.precision;
  m.morpheme_recall = prf.recall;
  m.morpheme_f1 = prf.f1;
  m.avg_edit_distance = boundary_edit_distance(pred, gold);
  return m;
}

TreeMetrics tree_metrics(const std::vector<AnalyzedForm>& pred,
                         const std::vector<AnalyzedForm>& gold) {
  PRF prf = constituent_f1(pred, gold);
  return {prf.precision, prf.recall, prf.f1};
}

std::string render_report(const SegMetrics& seg, const std::optional<TreeMetrics>& tree) {
  std::string out;
  out +=
      "# conventions: exact-match accuracy; morpheme P/R/F1 with multiset matching,\n"
      "# micro-averaged; mean unit-cost edit distance between '#'-joined segment\n"
      "# strings; constituent P/R/F1 over (label, yield, start offset) with the root\n"
      "# bracket excluded and preterminals included.\n";
  char line[64];
  auto add = [&](const char* name, double v) {
    std::snprintf(line, sizeof(line), "%s\t%.4f\n", name, v);
    out += line;
  };
  add("accuracy", seg.accuracy);
  add("morpheme-precision", seg.morpheme_precision);
  add("morpheme-recall", seg.morpheme_recall);
  add("morpheme-f1", seg.morpheme_f1);
  add("avg-edit-distance", seg.avg_edit_distance);
  if (tree) {
    add("constituent-precision", tree->constituent_precision);
    add("constituent-recall", tree->constituent_recall);
    add("constituent-f1", tree->constituent_f1);
  } else {
    out += "constituent-precision\tn/a\n";
    out += "constituent-recall\tn/a\n";
    out += "constituent-f1\tn/a\n";
  }
  return out;
}

}  // namespace morsel
