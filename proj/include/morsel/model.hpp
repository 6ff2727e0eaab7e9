#pragma once

#include <optional>
#include <string_view>

#include "morsel/configs.hpp"
#include "morsel/sparse.hpp"
#include "morsel/types.hpp"

namespace morsel {

enum class ModelKind { Hierarchical, Flat };

std::string_view model_kind_name(ModelKind kind);
std::optional<ModelKind> model_kind_from_name(std::string_view name);

// Full parameterization of either model.  A single weight vector holds all
// components; identifiers are namespaced by prefix: "p:" parser (omega),
// "t:" transducer (eta), "s:" semi-Markov chain (psi).
struct ModelParameters {
  SparseFeatureVector weights;
  Alphabet alphabet = Alphabet::lowercase_latin();
  int insertion_budget = 5;  // canonical form at most |w| + budget long
  Lexicon lexicon;
  TransducerFeatureConfig transducer_features;
  ParserFeatureConfig parser_features;
  ChainFeatureConfig chain_features;
};

}  // namespace morsel
