#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mframe/corpus.hpp"
#include "mframe/lexicon.hpp"
#include "mframe/rule_dsl.hpp"

namespace mframe {

// Feature families, combined as a bit mask.
enum Family : unsigned {
  kTextUnigrams = 1U << 0,
  kEntityUnigrams = 1U << 1,
  kLexiconScores = 1U << 2,
  kIdeologyOneHot = 1U << 3,
  kTopicOneHot = 1U << 4,
};

struct FeatureConfig {
  bool text = true;
  bool entity = true;
  bool lexicon = true;  // no-op without a lexicon
  bool ideology = true;
  bool topic = true;
  std::size_t min_count = 1;  // vocabulary threshold

  unsigned mask() const;
};

// Sorted by index; index 0 is the bias and is always present.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

// Families a scored template's classifier sees, from the predicates in its body.
unsigned families_for(const RuleTemplate& rule);

class Featurizer {
 public:
  explicit Featurizer(FeatureConfig cfg = {}, std::optional<Lexicon> lexicon = std::nullopt);

  // Builds and freezes the vocabularies. Throws ConfigError when every family is off.
  void fit(const Corpus& corpus);
  bool fitted() const { return fitted_; }

  std::size_t dimension() const { return dimension_; }
  const FeatureConfig& config() const { return cfg_; }

  // `entity` may be null for tweet-level templates.
  SparseVector extract(const TweetInstance& tweet, const EntityMention* entity, unsigned families) const;

  nlohmann::ordered_json to_json() const;
  static Featurizer from_json(const nlohmann::ordered_json& j);

 private:
  FeatureConfig cfg_;
  std::optional<Lexicon> lexicon_;
  std::map<std::string, std::size_t> text_vocab_;
  std::map<std::string, std::size_t> entity_vocab_;
  std::vector<std::string> topics_;
  std::size_t text_offset_ = 1, entity_offset_ = 1, lexicon_offset_ = 1, ideology_offset_ = 1, topic_offset_ = 1;
  std::size_t dimension_ = 1;
  bool fitted_ = false;

  void layout();
};

}  // namespace mframe
