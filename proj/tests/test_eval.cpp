#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "morsel/errors.hpp"
#include "morsel/eval.hpp"
#include "morsel/rng.hpp"
#include "oracles.hpp"

using namespace morsel;

namespace {

ParseTree right_branching_unlockable() {  // un + (lock + able)
  ParseTree lock{Label::Word, 2, 6, {}};
  ParseTree able{Label::Suffix, 6, 10, {}};
  ParseTree un{Label::Prefix, 0, 2, {}};
  ParseTree inner{Label::Word, 2, 10, {lock, able}};
  return ParseTree{Label::Root, 0, 10, {ParseTree{Label::Word, 0, 10, {un, inner}}}};
}

ParseTree left_branching_unlockable() {  // (un + lock) + able
  ParseTree lock{Label::Word, 2, 6, {}};
  ParseTree able{Label::Suffix, 6, 10, {}};
  ParseTree un{Label::Prefix, 0, 2, {}};
  ParseTree inner{Label::Word, 0, 6, {un, lock}};
  return ParseTree{Label::Root, 0, 10, {ParseTree{Label::Word, 0, 10, {inner, able}}}};
}

std::string random_word(Rng& rng, int max_len) {
  int len = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(max_len)));
  std::string s;
  for (int i = 0; i < len; ++i)
    s.push_back(static_cast<char>('a' + rng.uniform_index(3)));
  return s;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("accuracy counts exact segment-list matches") {
  std::vector<SegmentList> gold{{"un", "do"}, {"walk"}, {"re", "do"}, {"cat"}};
  CHECK(accuracy(gold, gold) == 1.0);
  std::vector<SegmentList> wrong{{"und", "o"}, {"wal", "k"}, {"red", "o"}, {"ca", "t"}};
  CHECK(accuracy(wrong, gold) == 0.0);
  std::vector<SegmentList> one{{"un", "do"}, {"wa"}, {"redo"}, {"c", "at"}};
  CHECK(accuracy(one, gold) == 0.25);
  CHECK_THROWS_AS(accuracy({}, {}), ValidationError);
  CHECK_THROWS_AS(accuracy({{"a"}}, gold), ValidationError);
}

TEST_CASE("morpheme f1 uses multiset intersection, micro-averaged") {
  SUBCASE("three of four morphemes survive") {
    std::vector<SegmentList> gold{{"un", "test", "able", "ly"}};
    std::vector<SegmentList> pred{{"un", "test", "abl", "ly"}};
    PRF m = morpheme_f1(pred, gold);
    CHECK(m.precision == 0.75);
    CHECK(m.recall == 0.75);
    CHECK(m.f1 == 0.75);
  }
  SUBCASE("perfect predictions") {
    std::vector<SegmentList> gold{{"un", "do"}, {"walk", "er"}};
    PRF m = morpheme_f1(gold, gold);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }
  SUBCASE("duplicates match with multiplicity") {
    std::vector<SegmentList> gold{{"a", "a", "b"}};
    std::vector<SegmentList> pred{{"a", "b", "b"}};
    PRF m = morpheme_f1(pred, gold);
    CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("micro averaging pools counts across words") {
    // word 1: 1/2 correct of pred 2, gold 1; word 2: 1 of 1
    std::vector<SegmentList> gold{{"ab"}, {"c"}};
    std::vector<SegmentList> pred{{"a", "ab"}, {"c"}};
    PRF m = morpheme_f1(pred, gold);
    CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall == doctest::Approx(1.0));
  }
  SUBCASE("zero precision and recall give zero f1") {
    std::vector<SegmentList> gold{{"a"}};
    std::vector<SegmentList> pred{{"b"}};
    PRF m = morpheme_f1(pred, gold);
    CHECK(m.f1 == 0.0);
  }
}

TEST_CASE("levenshtein agrees with the full-matrix oracle") {
  CHECK(levenshtein("", "") == 0);
  CHECK(levenshtein("abc", "") == 3);
  CHECK(levenshtein("kitten", "sitting") == 3);
  Rng rng(173);
  for (int i = 0; i < 200; ++i) {
    std::string a = random_word(rng, 8), b = random_word(rng, 8);
    CHECK(levenshtein(a, b) == oracles::levenshtein(a, b));
  }
}

TEST_CASE("boundary edit distance joins with '#' and averages") {
  std::vector<SegmentList> gold{{"un", "test", "able", "ly"}};
  CHECK(boundary_edit_distance(gold, gold) == 0.0);
  std::vector<SegmentList> merged{{"un", "testable", "ly"}};
  CHECK(boundary_edit_distance(merged, gold) == 1.0);  // one '#' deleted
  std::vector<SegmentList> typo{{"un", "test", "abl", "ly"}};
  CHECK(boundary_edit_distance(typo, gold) == 1.0);  // one 'e' deleted
  std::vector<SegmentList> both{{"un", "testabl", "ly"}};
  CHECK(boundary_edit_distance(both, gold) == 2.0);

  // mean across items
  std::vector<SegmentList> pred2{{"un", "testable", "ly"}, {"walk"}};
  std::vector<SegmentList> gold2{{"un", "test", "able", "ly"}, {"walk"}};
  CHECK(boundary_edit_distance(pred2, gold2) == 0.5);

  std::vector<SegmentList> bad{{"a#b"}};
  CHECK_THROWS_AS(boundary_edit_distance(bad, std::vector<SegmentList>{{"ab"}}),
                  ValidationError);
}

TEST_CASE("per-item boundary distance is a metric") {
  Rng rng(179);
  auto dist = [](const SegmentList& a, const SegmentList& b) {
    return boundary_edit_distance({a}, {b});
  };
  for (int i = 0; i < 50; ++i) {
    SegmentList a{random_word(rng, 4), random_word(rng, 4)};
    SegmentList b{random_word(rng, 4)};
    SegmentList c{random_word(rng, 4), random_word(rng, 4), random_word(rng, 4)};
    CHECK(dist(a, a) == 0.0);
    CHECK(dist(a, b) == dist(b, a));
    CHECK(dist(a, c) <= dist(a, b) + dist(b, c));
  }
}

TEST_CASE("labeled constituents exclude root and include preterminals") {
  std::vector<LabeledConstituent> cs =
      labeled_constituents(right_branching_unlockable(), "unlockable");
  REQUIRE(cs.size() == 5);
  std::sort(cs.begin(), cs.end());
  auto has = [&](Label l, const std::string& y, int start) {
    return std::find(cs.begin(), cs.end(), LabeledConstituent{l, y, start}) != cs.end();
  };
  CHECK(has(Label::Word, "unlockable", 0));
  CHECK(has(Label::Prefix, "un", 0));
  CHECK(has(Label::Word, "lockable", 2));
  CHECK(has(Label::Word, "lock", 2));
  CHECK(has(Label::Suffix, "able", 6));
}

TEST_CASE("competing bracketings of unlockable share four of five constituents") {
  std::vector<AnalyzedForm> pred{{"unlockable", left_branching_unlockable()}};
  std::vector<AnalyzedForm> gold{{"unlockable", right_branching_unlockable()}};
  PRF m = constituent_f1(pred, gold);
  // shared: the three preterminals and the full-span Word; each tree adds one
  // private intermediate Word ("unlock" vs "lockable")
  CHECK(m.precision == doctest::Approx(0.8));
  CHECK(m.recall == doctest::Approx(0.8));
  CHECK(m.f1 == doctest::Approx(0.8));
}

TEST_CASE("constituents of a wrong canonical form mismatch by yield") {
  // same shape, one segment's characters differ
  ParseTree gold_tree{Label::Root, 0, 6,
                      {ParseTree{Label::Word, 0, 6,
                                 {ParseTree{Label::Word, 0, 4, {}},
                                  ParseTree{Label::Suffix, 4, 6, {}}}}}};
  std::vector<AnalyzedForm> gold{{"walker", gold_tree}};
  std::vector<AnalyzedForm> pred{{"wolker", gold_tree}};
  PRF m = constituent_f1(pred, gold);
  // "er" preterminal survives; "wolk" leaf and the full span do not
  CHECK(m.precision == doctest::Approx(1.0 / 3.0));
  CHECK(m.recall == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("metrics are permutation invariant") {
  std::vector<SegmentList> gold{{"un", "do"}, {"walk"}, {"re", "call"}};
  std::vector<SegmentList> pred{{"und", "o"}, {"walk"}, {"re", "call"}};
  SegMetrics a = seg_metrics(pred, gold);
  std::vector<SegmentList> gold_p{gold[2], gold[0], gold[1]};
  std::vector<SegmentList> pred_p{pred[2], pred[0], pred[1]};
  SegMetrics b = seg_metrics(pred_p, gold_p);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.morpheme_f1 == b.morpheme_f1);
  CHECK(a.avg_edit_distance == b.avg_edit_distance);
}

TEST_CASE("perfect predictions saturate every metric") {
  std::vector<SegmentList> gold{{"un", "lock", "able"}, {"walk", "er"}, {"hand"}};
  SegMetrics seg = seg_metrics(gold, gold);
  CHECK(seg.accuracy == 1.0);
  CHECK(seg.morpheme_f1 == 1.0);
  CHECK(seg.avg_edit_distance == 0.0);

  std::vector<AnalyzedForm> trees{{"unlockable", right_branching_unlockable()}};
  TreeMetrics tm = tree_metrics(trees, trees);
  CHECK(tm.constituent_f1 == 1.0);
}

TEST_CASE("report renders tab-separated four-decimal lines") {
  SegMetrics seg;
  seg.accuracy = 0.731944;
  seg.morpheme_precision = 0.9;
  seg.morpheme_recall = 0.8;
  seg.morpheme_f1 = 0.847058;
  seg.avg_edit_distance = 0.55;
  TreeMetrics tm{0.5, 0.25, 1.0 / 3.0};

  std::string with_trees = render_report(seg, tm);
  CHECK(with_trees.find("accuracy\t0.7319\n") != std::string::npos);
  CHECK(with_trees.find("morpheme-f1\t0.8471\n") != std::string::npos);
  CHECK(with_trees.find("avg-edit-distance\t0.5500\n") != std::string::npos);
  CHECK(with_trees.find("constituent-f1\t0.3333\n") != std::string::npos);
  CHECK(with_trees.rfind("#", 0) == 0);  // convention header comes first

  std::string flat = render_report(seg, std::nullopt);
  CHECK(flat.find("constituent-f1\tn/a\n") != std::string::npos);
  CHECK(flat.find("constituent-precision\tn/a\n") != std::string::npos);
}

}  // TEST_SUITE
