#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "morsel/errors.hpp"
#include "morsel/types.hpp"

namespace morsel {

// One treebank record: surface word, canonical form, and a gold constituency
// tree over the canonical form (stored with its Root wrapper).
struct TreebankEntry {
  std::string surface;
  std::string canonical;
  ParseTree tree;

  bool operator==(const TreebankEntry&) const = default;
};

struct SplitSpec {
  std::uint64_t seed = 0;
  int train_size = 5454;
  int dev_size = 1000;
  int test_size = 1000;
  int split_index = 0;
};

struct Splits {
  std::vector<TreebankEntry> train;
  std::vector<TreebankEntry> dev;
  std::vector<TreebankEntry> test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> dev_indices;
  std::vector<std::size_t> test_indices;
};

// Parses `surface<TAB>s-expression`; leaf tokens are canonical segments and
// spans are derived from leaf lengths. `line_number` (1-based) is used in
// error messages when positive.
TreebankEntry parse_entry(std::string_view line, int line_number = 0);

// Renders the canonical one-line form; round-trips bit-exactly via parse_entry.
std::string serialize_entry(const TreebankEntry& entry);
std::string tree_to_sexpr(const ParseTree& tree, std::string_view u);
ParseTree parse_sexpr(std::string_view text, std::string* canonical_out,
                      int line_number = 0);

// Advisory warnings: Word-labeled spans whose yield is missing from the
// lexicon (absence is tolerated, not fatal).
std::vector<std::string> validate_principles(const TreebankEntry& entry, const Lexicon& lexicon);

std::vector<TreebankEntry> load_treebank(const std::string& path);
void save_treebank(const std::string& path, const std::vector<TreebankEntry>& entries);
Lexicon load_lexicon(const std::string& path);

Splits make_splits(const std::vector<TreebankEntry>& entries, const SplitSpec& spec);

}  // namespace morsel
