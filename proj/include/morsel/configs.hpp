#pragma once

namespace morsel {

// Feature templates for the edit-distance transducer factor.  Every edit
// action fires its identity, a conjunction with each surface character in a
// window of context_radius around the current surface position, and a
// conjunction with the previously emitted canonical character.
struct TransducerFeatureConfig {
  int context_radius = 2;
  bool action_identity = true;
  bool action_context = true;
  bool action_previous_output = true;
  // Gates for the degenerate configurations used in tests: when false the
  // corresponding action is unavailable in every DP / sampler.
  bool allow_insert = true;
  bool allow_delete = true;

  friend bool operator==(const TransducerFeatureConfig&,
                         const TransducerFeatureConfig&) = default;
};

// Feature templates for anchored productions of the parser factor.
struct ParserFeatureConfig {
  bool span_segment = true;         // indicator of the span's segment string
  bool lexicon_membership = true;   // segment is an attested word
  bool segment_label = true;        // segment conjoined with the parent label
  bool production = true;           // unanchored rule identity
  bool production_backoff = true;   // parent label alone (binary rules)

  friend bool operator==(const ParserFeatureConfig&, const ParserFeatureConfig&) = default;
};

// Feature templates for segments of the flat semi-Markov baseline.
struct ChainFeatureConfig {
  bool segment = true;            // segment string indicator
  bool lexicon_membership = true; // segment is an attested word
  bool length_bucket = true;      // buckets 1..7 and 8+
  bool boundary_bigram = true;    // characters around the segment's right edge

  friend bool operator==(const ChainFeatureConfig&, const ChainFeatureConfig&) = default;
};

}  // namespace morsel
