#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mframe/corpus.hpp"
#include "mframe/taxonomy.hpp"

namespace mframe {

struct EntityPrediction {
  std::string entity;   // entity id within the tweet
  std::string surface;
  MoralRole role = MoralRole::TargetOfCareHarm;
  std::optional<MoralRole> gold;
};

struct TweetPrediction {
  std::string tweet;
  Ideology ideology = Ideology::Left;
  std::string topic;
  MoralFoundation mf = MoralFoundation::CareHarm;
  std::optional<MoralFoundation> gold;
  std::vector<EntityPrediction> entities;
};

struct PredictionSet {
  std::vector<TweetPrediction> tweets;

  std::size_t entity_rows() const;
};

// Attaches gold labels and metadata from the corpus to bare predictions.
void attach_gold(PredictionSet& set, const Corpus& corpus);

// Gold labels as a prediction set (for fixtures and agreement checks).
PredictionSet gold_predictions(const Corpus& corpus);

// One JSON object per tweet. Readers skip a leading {"provenance": ...} header
// and reject entity rows without a tweet.
void write_predictions(std::ostream& out, const PredictionSet& set);
PredictionSet read_predictions(std::istream& in);
PredictionSet load_predictions(const std::filesystem::path& path);

// Entities whose predicted role belongs to another foundation than the tweet's prediction.
std::size_t count_role_mf_violations(const PredictionSet& set);

// Pairs of tweets with equal ideology and topic that mention the same entity
// with roles of different polarity.
std::size_t count_polarity_violations(const PredictionSet& set);

}  // namespace mframe
