#include <doctest.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "morsel/data.hpp"
#include "morsel/errors.hpp"
#include "morsel/model_io.hpp"

using namespace morsel;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("morsel_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& contents) const {
    std::string p = (path / name).string();
    std::ofstream out(p, std::ios::binary);
    out << contents;
    return p;
  }
};

}  // namespace

TEST_SUITE("data") {

TEST_CASE("entries parse and serialize losslessly") {
  std::string line = "unlockable\t(Word (Prefix un) (Word (Word lock) (Suffix able)))";
  TreebankEntry e = parse_entry(line);
  CHECK(e.surface == "unlockable");
  CHECK(e.canonical == "unlockable");
  CHECK(e.tree.label == Label::Root);
  CHECK(e.tree.children[0].children[0].label == Label::Prefix);
  CHECK(serialize_entry(e) == line);
  CHECK(parse_entry(serialize_entry(e)) == e);

  // canonical differs from surface when orthography changed
  TreebankEntry usable = parse_entry("usable\t(Word (Word use) (Suffix able))");
  CHECK(usable.surface == "usable");
  CHECK(usable.canonical == "useable");

  // tolerant of extra whitespace inside the s-expression
  TreebankEntry spaced = parse_entry("redo\t(Word  (Prefix re)   (Word do))");
  CHECK(serialize_entry(spaced) == "redo\t(Word (Prefix re) (Word do))");
}

TEST_CASE("bare stems parse as single preterminals") {
  TreebankEntry e = parse_entry("walk\t(Word walk)");
  CHECK(e.canonical == "walk");
  CHECK(e.tree.children[0].leaf());
  CHECK(tree_to_sexpr(e.tree, e.canonical) == "(Word walk)");
}

TEST_CASE("malformed lines cite their line numbers") {
  auto message_of = [](const std::string& line, int number) {
    try {
      parse_entry(line, number);
      return std::string("no error");
    } catch (const DataError& e) {
      return std::string(e.what());
    }
  };
  CHECK(message_of("nosep", 3).find("line 3") != std::string::npos);
  CHECK(message_of("\t(Word x)", 7).find("line 7") != std::string::npos);
  CHECK(message_of("w\t(Word", 12).find("line 12") != std::string::npos);
  CHECK(message_of("w\t(Verb x)", 9).find("line 9") != std::string::npos);
  CHECK(message_of("w\tWord x)", 2).find("line 2") != std::string::npos);
}

TEST_CASE("illegal productions are rejected") {
  // explicit Root label
  CHECK_THROWS_AS(parse_entry("w\t(Root (Word w))"), DataError);
  // Prefix with a child node
  CHECK_THROWS_AS(parse_entry("w\t(Word (Prefix (Word a)) (Word b))"), DataError);
  // Word with two Word children
  CHECK_THROWS_AS(parse_entry("ab\t(Word (Word a) (Word b))"), DataError);
  // Suffix first in a binary expansion
  CHECK_THROWS_AS(parse_entry("ab\t(Word (Suffix a) (Word b))"), DataError);
  // three children
  CHECK_THROWS_AS(parse_entry("abc\t(Word (Prefix a) (Word b) (Suffix c))"), DataError);
  // empty yield
  CHECK_THROWS_AS(parse_entry("ab\t(Word ())"), DataError);
  // trailing garbage
  CHECK_THROWS_AS(parse_entry("ab\t(Word ab) extra"), DataError);
  // empty surface
  CHECK_THROWS_AS(parse_entry("\t(Word a)"), DataError);
}

TEST_CASE("treebank files skip comments and blank lines") {
  TempDir dir;
  std::string path = dir.file("tb.tsv",
                              "# header comment\n"
                              "\n"
                              "walk\t(Word walk)\n"
                              "usable\t(Word (Word use) (Suffix able))\r\n"
                              "\n");
  std::vector<TreebankEntry> entries = load_treebank(path);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].surface == "walk");
  CHECK(entries[1].canonical == "useable");

  // errors cite the physical line number in the file
  std::string bad = dir.file("bad.tsv", "# c\nwalk\t(Word walk)\nbroken\n");
  try {
    load_treebank(bad);
    CHECK(false);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(load_treebank((dir.path / "missing.tsv").string()), DataError);
}

TEST_CASE("save_treebank then load_treebank is the identity") {
  TempDir dir;
  std::vector<TreebankEntry> entries{
      parse_entry("walk\t(Word walk)"),
      parse_entry("unlockable\t(Word (Prefix un) (Word (Word lock) (Suffix able)))"),
      parse_entry("usable\t(Word (Word use) (Suffix able))")};
  std::string path = (dir.path / "out.tsv").string();
  save_treebank(path, entries);
  CHECK(load_treebank(path) == entries);
}

TEST_CASE("lexicon files load into membership sets") {
  TempDir dir;
  std::string path = dir.file("lex.txt", "# words\nwalk\nable\n\nlock\n");
  Lexicon lex = load_lexicon(path);
  CHECK(lex.size() == 3);
  CHECK(lex.contains("walk"));
  CHECK(lex.contains("able"));
  CHECK(lex.contains("lock"));
  CHECK(!lex.contains("# words"));
}

TEST_CASE("word spans missing from the lexicon are advisory only") {
  TreebankEntry e = parse_entry("walker\t(Word (Word walk) (Suffix er))");
  Lexicon lex;
  lex.insert("walk");
  lex.insert("walker");  // every Word span, including the whole word, is checked
  CHECK(validate_principles(e, lex).empty());
  Lexicon empty;
  std::vector<std::string> warnings = validate_principles(e, empty);
  CHECK(!warnings.empty());
}

TEST_CASE("splits are deterministic, disjoint, and exhaustive") {
  std::vector<TreebankEntry> entries;
  for (int i = 0; i < 30; ++i) {
    std::string w = "w" + std::to_string(i);
    // single-letter canonical keeps the sexpr trivial
    entries.push_back(
        parse_entry(w + "\t(Word " + std::string(1, static_cast<char>('a' + i % 26)) + ")"));
  }
  SplitSpec spec;
  spec.seed = 9;
  spec.train_size = 20;
  spec.dev_size = 5;
  spec.test_size = 5;

  Splits s1 = make_splits(entries, spec);
  Splits s2 = make_splits(entries, spec);
  CHECK(s1.train_indices == s2.train_indices);
  CHECK(s1.dev_indices == s2.dev_indices);
  CHECK(s1.test_indices == s2.test_indices);
  CHECK(s1.train.size() == 20);
  CHECK(s1.dev.size() == 5);
  CHECK(s1.test.size() == 5);

  std::set<std::size_t> seen;
  for (std::size_t i : s1.train_indices) seen.insert(i);
  for (std::size_t i : s1.dev_indices) seen.insert(i);
  for (std::size_t i : s1.test_indices) seen.insert(i);
  CHECK(seen.size() == 30);

  // different split indices shuffle differently
  SplitSpec other = spec;
  other.split_index = 1;
  Splits s3 = make_splits(entries, other);
  CHECK(s3.train_indices != s1.train_indices);

  // entries follow their indices
  for (std::size_t k = 0; k < s1.train.size(); ++k)
    CHECK(s1.train[k] == entries[s1.train_indices[k]]);
}

TEST_CASE("oversized requests fall back to proportional sizes") {
  std::vector<TreebankEntry> entries;
  for (int i = 0; i < 10; ++i)
    entries.push_back(parse_entry("w" + std::to_string(i) + "\t(Word a)"));
  SplitSpec spec;  // default 5454/1000/1000 cannot fit 10 entries
  Splits s = make_splits(entries, spec);
  CHECK(s.train.size() == 8);
  CHECK(s.dev.size() == 1);
  CHECK(s.test.size() == 1);
}

TEST_CASE("split parameters are validated") {
  std::vector<TreebankEntry> entries{parse_entry("w\t(Word a)")};
  SplitSpec spec;
  spec.split_index = 10;
  CHECK_THROWS_AS(make_splits(entries, spec), ConfigError);
  spec.split_index = -1;
  CHECK_THROWS_AS(make_splits(entries, spec), ConfigError);
  std::vector<TreebankEntry> none;
  CHECK_THROWS_AS(make_splits(none, SplitSpec{}), DataError);
}

TEST_CASE("models serialize and deserialize bit-exactly") {
  SavedModel m;
  m.kind = ModelKind::Hierarchical;
  m.params.alphabet = Alphabet{"abcdef"};
  m.params.insertion_budget = 2;
  m.params.lexicon.insert("walk");
  m.params.lexicon.insert("able");
  m.params.weights.set("p:seg:walk", 0.1234567890123456789);
  m.params.weights.set("t:a:saa", -3.5e-17);
  m.params.weights.set("s:seg:er", 2.0);
  m.lambda = 0.3;
  m.dev_score = 0.87654321;
  m.seed = 42;

  std::string text = serialize_model(m);
  SavedModel back = deserialize_model(text);
  CHECK(back.kind == ModelKind::Hierarchical);
  CHECK(back.params.alphabet == m.params.alphabet);
  CHECK(back.params.insertion_budget == 2);
  CHECK(back.params.lexicon.contains("walk"));
  CHECK(back.params.lexicon.contains("able"));
  CHECK(back.params.weights == m.params.weights);  // exact doubles via %.17g
  CHECK(back.lambda == m.lambda);
  CHECK(back.dev_score == m.dev_score);
  CHECK(back.seed == 42);
  CHECK(serialize_model(back) == text);

  TempDir dir;
  std::string path = (dir.path / "m.model").string();
  save_model(path, m);
  SavedModel loaded = load_model(path);
  CHECK(loaded.params.weights == m.params.weights);
  CHECK(loaded.kind == m.kind);
}

TEST_CASE("flat models round-trip their kind and feature flags") {
  SavedModel m;
  m.kind = ModelKind::Flat;
  m.params.alphabet = Alphabet{"ab"};
  m.params.chain_features.boundary_bigram = false;
  m.params.transducer_features.context_radius = 1;
  m.params.parser_features.production_backoff = false;
  std::string text = serialize_model(m);
  SavedModel back = deserialize_model(text);
  CHECK(back.kind == ModelKind::Flat);
  CHECK(back.params.chain_features.boundary_bigram == false);
  CHECK(back.params.transducer_features.context_radius == 1);
  CHECK(back.params.parser_features.production_backoff == false);
}

TEST_CASE("model deserialization rejects malformed input") {
  CHECK_THROWS_AS(deserialize_model("not a model\n"), DataError);
  SavedModel m;
  m.params.alphabet = Alphabet{"ab"};
  std::string text = serialize_model(m);
  CHECK_THROWS_AS(deserialize_model(text + "# unknown-key: 1\n"), DataError);
  CHECK_THROWS_AS(deserialize_model(text + "dangling-weight-line\n"), DataError);
}

}  // TEST_SUITE
