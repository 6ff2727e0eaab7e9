#include "morsel/types.hpp"

#include <algorithm>
#include <cctype>

namespace morsel {

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Root: return "Root";
    case Label::Word: return "Word";
    case Label::Prefix: return "Prefix";
    case Label::Suffix: return "Suffix";
  }
  return "?";
}

std::optional<Label> label_from_name(std::string_view name) {
  if (name == "Root") return Label::Root;
  if (name == "Word") return Label::Word;
  if (name == "Prefix") return Label::Prefix;
  if (name == "Suffix") return Label::Suffix;
  return std::nullopt;
}

char label_letter(Label label) {
  switch (label) {
    case Label::Root: return 'R';
    case Label::Word: return 'W';
    case Label::Prefix: return 'P';
    case Label::Suffix: return 'S';
  }
  return '?';
}

Alphabet::Alphabet(std::string_view symbols) {
  index_.fill(-1);
  for (char c : symbols) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (index_[uc] >= 0) throw ConfigError("alphabet has a repeated symbol");
    index_[uc] = static_cast<int>(symbols_.size());
    symbols_.push_back(c);
  }
  if (symbols_.empty()) throw ConfigError("alphabet is empty");
}

const Alphabet& Alphabet::lowercase_latin() {
  static const Alphabet a("abcdefghijklmnopqrstuvwxyz");
  return a;
}

bool Alphabet::contains_all(std::string_view s) const {
  return std::all_of(s.begin(), s.end(), [&](char c) { return contains(c); });
}

bool operator==(const ParseTree& a, const ParseTree& b) {
  return a.label == b.label && a.start == b.start && a.end == b.end &&
         a.children == b.children;
}

namespace {

// Grammar check for a subtree whose root label is Word/Prefix/Suffix.
std::optional<std::string> validate_subtree(const ParseTree& t, std::string_view u) {
  if (t.label == Label::Root) return "Root may appear only at the top of the tree";
  if (t.start < 0 || t.end > static_cast<int>(u.size()) || t.start >= t.end)
    return "node span is empty or out of range";
  if (t.leaf()) return std::nullopt;  // any label expands to its terminal yield
  if (t.label != Label::Word) return "only Word has binary productions";
  if (t.children.size() != 2) return "internal node must have exactly two children";
  const ParseTree& l = t.children[0];
  const ParseTree& r = t.children[1];
  if (l.start != t.start || r.end != t.end || l.end != r.start)
    return "child spans do not tile the parent span";
  bool prefix_rule = l.label == Label::Prefix && r.label == Label::Word;
  bool suffix_rule = l.label == Label::Word && r.label == Label::Suffix;
  if (!prefix_rule && !suffix_rule)
    return "binary production must be Word->Prefix Word or Word->Word Suffix";
  if (auto err = validate_subtree(l, u)) return err;
  return validate_subtree(r, u);
}

}  // namespace

std::optional<std::string> validate_tree(const ParseTree& tree, std::string_view u) {
  if (u.empty()) return "canonical form is empty";
  const ParseTree* body = &tree;
  if (tree.label == Label::Root) {
    if (tree.children.size() != 1) return "Root must have exactly one child";
    if (tree.start != 0 || tree.end != static_cast<int>(u.size()))
      return "Root span must cover the whole canonical form";
    body = &tree.children[0];
    if (body->label != Label::Word) return "Root's child must be a Word";
  }
  if (body->start != 0 || body->end != static_cast<int>(u.size()))
    return "top node must span the whole canonical form";
  if (body->label != Label::Word) return "top node must be a Word";
  return validate_subtree(*body, u);
}

namespace {

void collect_segments(const ParseTree& t, std::string_view u, std::vector<std::string>& out) {
  if (t.leaf()) {
    out.emplace_back(u.substr(static_cast<std::size_t>(t.start),
                              static_cast<std::size_t>(t.end - t.start)));
    return;
  }
  for (const ParseTree& c : t.children) collect_segments(c, u, out);
}

}  // namespace

std::vector<std::string> tree_to_segments(const ParseTree& tree, std::string_view u) {
  if (auto err = validate_tree(tree, u))
    throw ValidationError("tree_to_segments: " + *err);
  std::vector<std::string> out;
  collect_segments(tree, u, out);
  return out;
}

namespace {

// All Word-rooted trees over [i, j).  Order: preterminal, then split point
// ascending with the Prefix branch before the Suffix branch -- the same
// candidate order the Viterbi tie-break uses.
std::vector<ParseTree> enumerate_word_trees(int i, int j) {
  std::vector<ParseTree> out;
  out.push_back(ParseTree{Label::Word, i, j, {}});
  for (int m = i + 1; m < j; ++m) {
    ParseTree left{Label::Prefix, i, m, {}};
    for (const ParseTree& rest : enumerate_word_trees(m, j))
      out.push_back(ParseTree{Label::Word, i, j, {left, rest}});
    ParseTree right{Label::Suffix, m, j, {}};
    for (const ParseTree& head : enumerate_word_trees(i, m))
      out.push_back(ParseTree{Label::Word, i, j, {head, right}});
  }
  return out;
}

}  // namespace

std::vector<ParseTree> enumerate_trees(std::string_view u) {
  if (u.empty() || u.size() > 8)
    throw GuardError("enumerate_trees: |u| must be in [1, 8]");
  int n = static_cast<int>(u.size());
  std::vector<ParseTree> out;
  for (ParseTree& w : enumerate_word_trees(0, n))
    out.push_back(ParseTree{Label::Root, 0, n, {std::move(w)}});
  return out;
}

std::string Alignment::emitted() const {
  std::string s;
  for (const EditAction& a : actions)
    if (a.kind != EditKind::Delete) s.push_back(a.emitted);
  return s;
}

std::string Alignment::consumed() const {
  std::string s;
  for (const EditAction& a : actions)
    if (a.kind != EditKind::Insert) s.push_back(a.consumed);
  return s;
}

std::optional<std::string> validate_alignment(const Alignment& a, std::string_view u,
                                              std::string_view w) {
  std::size_t i = 0, j = 0;
  for (const EditAction& act : a.actions) {
    switch (act.kind) {
      case EditKind::Substitute:
        if (j >= w.size() || act.consumed != w[j]) return "substitute consumes the wrong character";
        if (i >= u.size() || act.emitted != u[i]) return "substitute emits the wrong character";
        ++i, ++j;
        break;
      case EditKind::Delete:
        if (j >= w.size() || act.consumed != w[j]) return "delete consumes the wrong character";
        ++j;
        break;
      case EditKind::Insert:
        if (i >= u.size() || act.emitted != u[i]) return "insert emits the wrong character";
        ++i;
        break;
    }
  }
  if (i != u.size()) return "alignment does not emit the whole canonical form";
  if (j != w.size()) return "alignment does not consume the whole surface form";
  if (u.empty()) return "canonical form is empty";
  return std::nullopt;
}

namespace {

void enumerate_alignments_from(std::string_view u, std::string_view w, std::size_t i,
                               std::size_t j, bool allow_insert, bool allow_delete,
                               Alignment& prefix, std::vector<Alignment>& out) {
  if (i == u.size() && j == w.size()) {
    out.push_back(prefix);
    return;
  }
  if (i < u.size() && j < w.size()) {
    prefix.actions.push_back(EditAction::substitute(w[j], u[i]));
    enumerate_alignments_from(u, w, i + 1, j + 1, allow_insert, allow_delete, prefix, out);
    prefix.actions.pop_back();
  }
  if (allow_delete && j < w.size()) {
    prefix.actions.push_back(EditAction::del(w[j]));
    enumerate_alignments_from(u, w, i, j + 1, allow_insert, allow_delete, prefix, out);
    prefix.actions.pop_back();
  }
  if (allow_insert && i < u.size()) {
    prefix.actions.push_back(EditAction::ins(u[i]));
    enumerate_alignments_from(u, w, i + 1, j, allow_insert, allow_delete, prefix, out);
    prefix.actions.pop_back();
  }
}

}  // namespace

std::vector<Alignment> enumerate_alignments(std::string_view u, std::string_view w,
                                            bool allow_insert, bool allow_delete) {
  if (u.size() + w.size() > 12)
    throw GuardError("enumerate_alignments: |u| + |w| must be <= 12");
  if (u.empty()) throw ValidationError("enumerate_alignments: canonical form is empty");
  std::vector<Alignment> out;
  Alignment prefix;
  enumerate_alignments_from(u, w, 0, 0, allow_insert, allow_delete, prefix, out);
  return out;
}

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_ascii_lower(std::string_view s) {
  return std::none_of(s.begin(), s.end(), [](char c) {
    return std::isupper(static_cast<unsigned char>(c));
  });
}

}  // namespace

void Lexicon::insert(std::string_view word) { words_.insert(ascii_lower(word)); }

bool Lexicon::contains(std::string_view word) const {
  if (is_ascii_lower(word)) return words_.find(word) != words_.end();
  return words_.find(ascii_lower(word)) != words_.end();
}

std::vector<std::string> Lexicon::sorted_words() const {
  std::vector<std::string> out(words_.begin(), words_.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace morsel
