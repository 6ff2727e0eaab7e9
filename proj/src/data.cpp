#include "morsel/data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "morsel/rng.hpp"

namespace morsel {

namespace {

std::string at_line(int line_number) {
  return line_number > 0 ? "line " + std::to_string(line_number) + ": " : std::string();
}

struct SexprParser {
  std::string_view text;
  std::size_t pos = 0;
  int line_number = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(at_line(line_number) + what);
  }
  void skip_space() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  bool at_end() {
    skip_space();
    return pos >= text.size();
  }
  char peek() {
    skip_space();
    if (pos >= text.size()) fail("unexpected end of s-expression");
    return text[pos];
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "', found '" + text[pos] + "'");
    ++pos;
  }
  std::string_view atom() {
    skip_space();
    std::size_t start = pos;
    while (pos < text.size() && text[pos] != ' ' && text[pos] != '\t' && text[pos] != '(' &&
           text[pos] != ')')
      ++pos;
    if (pos == start) fail("expected a token");
    return text.substr(start, pos - start);
  }

  // Builds the node and appends its yield to `canonical`; spans come from the
  // running leaf position.
  ParseTree node(std::string& canonical) {
    expect('(');
    std::string_view name = atom();
    auto label = label_from_name(name);
    if (!label || *label == Label::Root)
      fail("unknown label '" + std::string(name) + "' (expected Word, Prefix or Suffix)");
    ParseTree t;
    t.label = *label;
    t.start = static_cast<int>(canonical.size());
    if (peek() == '(') {
      while (peek() == '(') t.children.push_back(node(canonical));
    } else {
      std::string_view leaf = atom();
      canonical += leaf;
    }
    t.end = static_cast<int>(canonical.size());
    if (t.start == t.end) fail("empty yield under label '" + std::string(name) + "'");
    expect(')');
    return t;
  }
};

}  // namespace

ParseTree parse_sexpr(std::string_view text, std::string* canonical_out, int line_number) {
  SexprParser p{text, 0, line_number};
  std::string canonical;
  ParseTree word = p.node(canonical);
  if (!p.at_end()) p.fail("trailing characters after s-expression");
  ParseTree root{Label::Root, 0, static_cast<int>(canonical.size()), {std::move(word)}};
  if (auto err = validate_tree(root, canonical))
    throw DataError(at_line(line_number) + "illegal tree: " + *err);
  if (canonical_out) *canonical_out = std::move(canonical);
  return root;
}

TreebankEntry parse_entry(std::string_view line, int line_number) {
  std::size_t tab = line.find('\t');
  if (tab == std::string_view::npos)
    throw DataError(at_line(line_number) + "expected '<surface>\\t<s-expression>'");
  TreebankEntry entry;
  entry.surface = std::string(line.substr(0, tab));
  if (entry.surface.empty()) throw DataError(at_line(line_number) + "empty surface form");
  entry.tree = parse_sexpr(line.substr(tab + 1), &entry.canonical, line_number);
  return entry;
}

namespace {

void append_sexpr(const ParseTree& t, std::string_view u, std::string& out) {
  out.push_back('(');
  out += label_name(t.label);
  if (t.leaf()) {
    out.push_back(' ');
    out.append(u.substr(static_cast<std::size_t>(t.start),
                        static_cast<std::size_t>(t.end - t.start)));
  } else {
    for (const ParseTree& c : t.children) {
      out.push_back(' ');
      append_sexpr(c, u, out);
    }
  }
  out.push_back(')');
}

}  // namespace

std::string tree_to_sexpr(const ParseTree& tree, std::string_view u) {
  if (auto err = validate_tree(tree, u)) throw ValidationError("tree_to_sexpr: " + *err);
  const ParseTree& body = tree.label == Label::Root ? tree.children.front() : tree;
  std::string out;
  append_sexpr(body, u, out);
  return out;
}

std::string serialize_entry(const TreebankEntry& entry) {
  return entry.surface + "\t" + tree_to_sexpr(entry.tree, entry.canonical);
}

namespace {

void collect_word_span_warnings(const ParseTree& t, std::string_view u, const Lexicon& lexicon,
                                std::vector<std::string>& out) {
  if (t.label == Label::Word) {
    std::string_view yield = u.substr(static_cast<std::size_t>(t.start),
                                      static_cast<std::size_t>(t.end - t.start));
    if (!lexicon.contains(yield))
      out.push_back("Word span '" + std::string(yield) + "' at [" + std::to_string(t.start) +
                    ", " + std::to_string(t.end) + ") is not an attested word");
  }
  for (const ParseTree& c : t.children) collect_word_span_warnings(c, u, lexicon, out);
}

}  // namespace

std::vector<std::string> validate_principles(const TreebankEntry& entry,
                                             const Lexicon& lexicon) {
  if (auto err = validate_tree(entry.tree, entry.canonical))
    throw ValidationError("validate_principles: " + *err);
  std::vector<std::string> warnings;
  collect_word_span_warnings(entry.tree, entry.canonical, lexicon, warnings);
  return warnings;
}

std::vector<TreebankEntry> load_treebank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open treebank file: " + path);
  std::vector<TreebankEntry> entries;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    entries.push_back(parse_entry(line, line_number));
  }
  return entries;
}

void save_treebank(const std::string& path, const std::vector<TreebankEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write treebank file: " + path);
  for (const TreebankEntry& e : entries) out << serialize_entry(e) << '\n';
  if (!out) throw DataError("failed while writing treebank file: " + path);
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon file: " + path);
  Lexicon lexicon;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lexicon.insert(line);
  }
  return lexicon;
}

Splits make_splits(const std::vector<TreebankEntry>& entries, const SplitSpec& spec) {
  if (entries.empty()) throw DataError("make_splits: no entries");
  if (spec.train_size < 0 || spec.dev_size < 0 || spec.test_size < 0)
    throw ConfigError("make_splits: negative split size");
  if (spec.split_index < 0 || spec.split_index >= 10)
    throw ConfigError("make_splits: split index must be in [0, 10)");
  long long want =
      static_cast<long long>(spec.train_size) + spec.dev_size + spec.test_size;
  if (want <= 0) throw ConfigError("make_splits: empty split specification");

  std::size_t n = entries.size();
  std::size_t train = static_cast<std::size_t>(spec.train_size);
  std::size_t dev = static_cast<std::size_t>(spec.dev_size);
  std::size_t test = static_cast<std::size_t>(spec.test_size);
  if (static_cast<long long>(n) < want) {
    // Scale to the available data with the same ratios, rounding dev and
    // test down first and giving the remainder to train.
    dev = static_cast<std::size_t>(static_cast<long long>(n) * spec.dev_size / want);
    test = static_cast<std::size_t>(static_cast<long long>(n) * spec.test_size / want);
    train = n - dev - test;
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(spec.split_index), 0x51));
  fisher_yates_shuffle(order, rng);

  Splits out;
  for (std::size_t i = 0; i < train + dev + test && i < n; ++i) {
    std::size_t idx = order[i];
    if (i < train) {
      out.train.push_back(entries[idx]);
      out.train_indices.push_back(idx);
    } else if (i < train + dev) {
      out.dev.push_back(entries[idx]);
      out.dev_indices.push_back(idx);
    } else {
      out.test.push_back(entries[idx]);
      out.test_indices.push_back(idx);
    }
  }
  return out;
}

}  // namespace morsel
