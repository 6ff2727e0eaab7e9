#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "morsel/types.hpp"

namespace morsel {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct SegMetrics {
  double accuracy = 0.0;
  double morpheme_precision = 0.0;
  double morpheme_recall = 0.0;
  double morpheme_f1 = 0.0;
  double avg_edit_distance = 0.0;
};

struct TreeMetrics {
  double constituent_precision = 0.0;
  double constituent_recall = 0.0;
  double constituent_f1 = 0.0;
};

using SegmentList = std::vector<std::string>;

// Fraction of items whose predicted segment list equals gold exactly.
double accuracy(const std::vector<SegmentList>& pred, const std::vector<SegmentList>& gold);

// Micro-averaged multiset precision/recall/F1 over segments.
PRF morpheme_f1(const std::vector<SegmentList>& pred, const std::vector<SegmentList>& gold);

// Unit-cost Levenshtein distance.
int levenshtein(std::string_view a, std::string_view b);

// Mean Levenshtein distance between '#'-joined segment strings.
double boundary_edit_distance(const std::vector<SegmentList>& pred,
                              const std::vector<SegmentList>& gold);

// A constituent keyed for cross-form comparison: label, yield string, and
// start offset.  Root is excluded; preterminals are included.
struct LabeledConstituent {
  Label label = Label::Word;
  std::string yield;
  int start = 0;

  bool operator==(const LabeledConstituent&) const = default;
  auto operator<=>(const LabeledConstituent&) const = default;
};

std::vector<LabeledConstituent> labeled_constituents(const ParseTree& tree, std::string_view u);

struct AnalyzedForm {
  std::string canonical;
  ParseTree tree;
};

// Micro-averaged multiset P/R/F1 over labeled constituents.
PRF constituent_f1(const std::vector<AnalyzedForm>& pred,
                   const std::vector<AnalyzedForm>& gold);

SegMetrics seg_metrics(const std::vector<SegmentList>& pred,
                       const std::vector<SegmentList>& gold);
TreeMetrics tree_metrics(const std::vector<AnalyzedForm>& pred,
                         const std::vector<AnalyzedForm>& gold);

// Flat `metric<TAB>value` report, 4-decimal fixed point, with a comment
// header documenting the matching conventions.  Constituent lines read
// "n/a" when tree metrics are absent (flat models).
std::string render_report(const SegMetrics& seg, const std::optional<TreeMetrics>& tree);

}  // namespace morsel
