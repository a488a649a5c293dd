#include "mframe/features.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mframe/error.hpp"
#include "mframe/text.hpp"

namespace mframe {

unsigned FeatureConfig::mask() const {
  return (text ? kTextUnigrams : 0U) | (entity ? kEntityUnigrams : 0U) | (lexicon ? kLexiconScores : 0U) |
         (ideology ? kIdeologyOneHot : 0U) | (topic ? kTopicOneHot : 0U);
}

unsigned families_for(const RuleTemplate& rule) {
  unsigned f = 0;
  for (const auto& lit : rule.body) {
    if (lit.predicate == "Tweet") f |= kTextUnigrams | kLexiconScores;
    if (lit.predicate == "Ent") f |= kEntityUnigrams;
    if (lit.predicate == "Ideo") f |= kIdeologyOneHot;
    if (lit.predicate == "Topic") f |= kTopicOneHot;
  }
  return f;
}

Featurizer::Featurizer(FeatureConfig cfg, std::optional<Lexicon> lexicon)
    : cfg_(cfg), lexicon_(std::move(lexicon)) {}

void Featurizer::fit(const Corpus& corpus) {
  if ((cfg_.mask() & ~(lexicon_ ? 0U : static_cast<unsigned>(kLexiconScores))) == 0)
    throw ConfigError("features: every feature family is disabled");
  std::map<std::string, std::size_t> text_counts;
  std::map<std::string, std::size_t> entity_counts;
  std::set<std::string> topics;
  for (const auto& t : corpus.tweets) {
    for (const auto& tok : t.tokens.empty() ? tokenize(t.text) : t.tokens) ++text_counts[tok];
    for (const auto& e : t.entities)
      for (const auto& tok : tokenize(e.surface)) ++entity_counts[tok];
    topics.insert(t.topic);
  }
  text_vocab_.clear();
  entity_vocab_.clear();
  for (const auto& [tok, n] : text_counts)
    if (n >= cfg_.min_count) text_vocab_.emplace(tok, text_vocab_.size());
  for (const auto& [tok, n] : entity_counts)
    if (n >= cfg_.min_count) entity_vocab_.emplace(tok, entity_vocab_.size());
  topics_.assign(topics.begin(), topics.end());
  layout();
  fitted_ = true;
}

void Featurizer::layout() {
  std::size_t at = 1;
  text_offset_ = at;
  if (cfg_.text) at += text_vocab_.size();
  entity_offset_ = at;
  if (cfg_.entity) at += entity_vocab_.size();
  lexicon_offset_ = at;
  if (cfg_.lexicon && lexicon_) at += kNumFoundations;
  ideology_offset_ = at;
  if (cfg_.ideology) at += 2;
  topic_offset_ = at;
  if (cfg_.topic) at += topics_.size();
  dimension_ = at;
}

SparseVector Featurizer::extract(const TweetInstance& tweet, const EntityMention* entity, unsigned families) const {
  if (!fitted_) throw ConfigError("features: featurizer used before fit");
  families &= cfg_.mask();
  std::map<std::size_t, double> x;
  x[0] = 1.0;
  const auto& tokens = tweet.tokens.empty() ? tokenize(tweet.text) : tweet.tokens;
  if (families & kTextUnigrams)
    for (const auto& tok : tokens)
      if (auto it = text_vocab_.find(tok); it != text_vocab_.end()) x[text_offset_ + it->second] += 1.0;
  if ((families & kEntityUnigrams) && entity)
    for (const auto& tok : tokenize(entity->surface))
      if (auto it = entity_vocab_.find(tok); it != entity_vocab_.end()) x[entity_offset_ + it->second] += 1.0;
  if ((families & kLexiconScores) && lexicon_) {
    const auto scores = lexicon_->score_tokens(tokens);
    for (auto f : kAllFoundations) {
      auto it = scores.find(std::string(name_of(f)));
      if (it != scores.end() && it->second != 0.0) x[lexicon_offset_ + index_of(f)] = it->second;
    }
  }
  if (families & kIdeologyOneHot) x[ideology_offset_ + (tweet.ideology == Ideology::Left ? 0 : 1)] = 1.0;
  if (families & kTopicOneHot) {
    auto it = std::lower_bound(topics_.begin(), topics_.end(), tweet.topic);
    if (it != topics_.end() && *it == tweet.topic)
      x[topic_offset_ + static_cast<std::size_t>(it - topics_.begin())] = 1.0;
  }
  return {x.begin(), x.end()};
}

nlohmann::ordered_json Featurizer::to_json() const {
  nlohmann::ordered_json j;
  j["families"] = {{"text", cfg_.text},         {"entity", cfg_.entity}, {"lexicon", cfg_.lexicon},
                   {"ideology", cfg_.ideology}, {"topic", cfg_.topic}};
  j["min_count"] = cfg_.min_count;
  auto vocab = [](const std::map<std::string, std::size_t>& v) {
    std::vector<std::string> words(v.size());
    for (const auto& [w, i] : v) words[i] = w;
    return words;
  };
  j["text_vocabulary"] = vocab(text_vocab_);
  j["entity_vocabulary"] = vocab(entity_vocab_);
  j["topics"] = topics_;
  if (lexicon_) {
    std::ostringstream tsv;
    lexicon_->write_tsv(tsv);
    j["lexicon"] = tsv.str();
  }
  return j;
}

Featurizer Featurizer::from_json(const nlohmann::ordered_json& j) {
  FeatureConfig cfg;
  const auto& fam = j.at("families");
  cfg.text = fam.at("text").get<bool>();
  cfg.entity = fam.at("entity").get<bool>();
  cfg.lexicon = fam.at("lexicon").get<bool>();
  cfg.ideology = fam.at("ideology").get<bool>();
  cfg.topic = fam.at("topic").get<bool>();
  cfg.min_count = j.at("min_count").get<std::size_t>();
  std::optional<Lexicon> lex;
  if (j.contains("lexicon")) {
    std::istringstream in(j["lexicon"].get<std::string>());
    lex = Lexicon::read_tsv(in);
  }
  Featurizer f(cfg, std::move(lex));
  for (const auto& w : j.at("text_vocabulary")) f.text_vocab_.emplace(w.get<std::string>(), f.text_vocab_.size());
  for (const auto& w : j.at("entity_vocabulary")) f.entity_vocab_.emplace(w.get<std::string>(), f.entity_vocab_.size());
  f.topics_ = j.at("topics").get<std::vector<std::string>>();
  f.layout();
  f.fitted_ = true;
  return f;
}

}  // namespace mframe
