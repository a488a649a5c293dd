#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mframe/corpus.hpp"

namespace mframe {

// Generated corpora with controllable evidence strength. Each tweet carries a
// foundation marker word and each entity surface is "<role marker> <name>".
// Markers are correct with the given probability and otherwise drawn from a
// different foundation. Distractors are role marker words of random roles
// placed outside entity spans: a bag of words over the whole tweet cannot tell
// them apart from real role evidence, an entity-level classifier can.
struct SyntheticConfig {
  std::size_t tweets = 200;
  std::size_t min_entities = 1;
  std::size_t max_entities = 3;
  double mf_signal = 1.0;
  double role_signal = 1.0;
  std::size_t filler_words = 3;
  std::size_t distractors = 0;
  std::size_t names = 40;
  std::vector<std::string> topics = {"abortion", "aca", "guns", "immigration", "lgbtq", "terrorism"};
  std::string id_prefix = "s";
  std::uint64_t seed = 1;
};

Corpus synthetic_corpus(const SyntheticConfig& cfg);

// Prior scores over gold labels: the gold label scores `gold_*`, one decoy
// label outside the gold foundation scores `decoy_*`, every other label draws
// uniformly from [0, noise]. Zero scores are left absent.
struct SyntheticPriorConfig {
  double gold_mf = 1.0;
  double decoy_mf = 0.0;
  double gold_role = 1.0;
  double decoy_role = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

PriorScores synthetic_priors(const Corpus& corpus, const SyntheticPriorConfig& cfg);

// Marker words, exposed for tests that build lexicons over synthetic text.
std::string foundation_marker(MoralFoundation f);
std::string role_marker(MoralRole r);

}  // namespace mframe
