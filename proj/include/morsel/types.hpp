#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "morsel/errors.hpp"
#include "morsel/sparse.hpp"

namespace morsel {

// Grammar nonterminals.  Root appears only as the unary top node over a
// full-span Word and carries no features.
enum class Label : std::uint8_t { Root, Word, Prefix, Suffix };

std::string_view label_name(Label label);
std::optional<Label> label_from_name(std::string_view name);
char label_letter(Label label);  // R/W/P/S, used in feature identifiers

// Ordered set of canonical-side characters.
class Alphabet {
 public:
  explicit Alphabet(std::string_view symbols);
  static const Alphabet& lowercase_latin();

  int size() const { return static_cast<int>(symbols_.size()); }
  char at(int i) const { return symbols_[static_cast<std::size_t>(i)]; }
  int index(char c) const { return index_[static_cast<unsigned char>(c)]; }
  bool contains(char c) const { return index(c) >= 0; }
  bool contains_all(std::string_view s) const;
  const std::string& symbols() const { return symbols_; }

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::string symbols_;
  std::array<int, 256> index_;
};

// Constituency tree over a canonical form; spans are half-open character
// intervals.  children.size() is 0 for preterminals, 1 for the Root wrapper,
// 2 for binary Word productions.
struct ParseTree {
  Label label = Label::Word;
  int start = 0;
  int end = 0;
  std::vector<ParseTree> children;

  bool leaf() const { return children.empty(); }
  friend bool operator==(const ParseTree&, const ParseTree&);
};

// Checks the tree against the grammar over u.  Returns the first violated
// invariant as text, or nullopt if the tree is well formed.  Accepted roots
// are a Root wrapper over a full-span Word, or a bare full-span Word subtree.
std::optional<std::string> validate_tree(const ParseTree& tree, std::string_view u);

// Leaf yields left to right; throws ValidationError on an ill-formed tree.
std::vector<std::string> tree_to_segments(const ParseTree& tree, std::string_view u);

// All grammar trees over u (3^(|u|-1)), Root-wrapped, in a deterministic
// order.  GuardError outside 1 <= |u| <= 8.
std::vector<ParseTree> enumerate_trees(std::string_view u);

// One edit operation.  Substitute consumes one surface character and emits
// one canonical character; Delete only consumes; Insert only emits.
enum class EditKind : std::uint8_t { Substitute, Delete, Insert };

struct EditAction {
  EditKind kind = EditKind::Substitute;
  char consumed = 0;  // surface side (Substitute, Delete)
  char emitted = 0;   // canonical side (Substitute, Insert)

  static EditAction substitute(char c, char e) { return {EditKind::Substitute, c, e}; }
  static EditAction del(char c) { return {EditKind::Delete, c, 0}; }
  static EditAction ins(char e) { return {EditKind::Insert, 0, e}; }

  friend bool operator==(const EditAction&, const EditAction&) = default;
};

// Monotone edit sequence; a valid alignment for (u, w) consumes exactly w
// and emits exactly u.
struct Alignment {
  std::vector<EditAction> actions;

  std::string emitted() const;
  std::string consumed() const;

  friend bool operator==(const Alignment&, const Alignment&) = default;
};

std::optional<std::string> validate_alignment(const Alignment& a, std::string_view u,
                                              std::string_view w);

// All monotone alignments between u and w, in a deterministic order
// (Substitute, Delete, Insert branch order).  GuardError when
// |u| + |w| > 12.  Optional gates drop Insert/Delete branches.
std::vector<Alignment> enumerate_alignments(std::string_view u, std::string_view w,
                                            bool allow_insert = true, bool allow_delete = true);

// Word list used by the attested-word indicator features.  Lookup is
// case-insensitive via ASCII lowercasing.
class Lexicon {
 public:
  void insert(std::string_view word);
  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  std::vector<std::string> sorted_words() const;

 private:
  std::unordered_set<std::string, StringHash, StringEq> words_;
};

}  // namespace morsel
