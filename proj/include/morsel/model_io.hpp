#pragma once

#include <cstdint>
#include <string>

#include "morsel/model.hpp"

namespace morsel {

// A trained model plus the metadata needed to reproduce and document the
// run.  Serialized as a '#' header block (config echo, component tags, the
// embedded lexicon) followed by `feature<TAB>weight` lines in lexicographic
// order with round-trip-exact weights.
struct SavedModel {
  ModelKind kind = ModelKind::Hierarchical;
  ModelParameters params;
  double lambda = 0.0;
  double dev_score = 0.0;
  std::string dev_metric = "morpheme-f1";
  std::uint64_t seed = 0;
};

std::string serialize_model(const SavedModel& model);
SavedModel deserialize_model(std::string_view text);

void save_model(const std::string& path, const SavedModel& model);
SavedModel load_model(const std::string& path);

}  // namespace morsel
