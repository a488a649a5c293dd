#include "mframe/predictions.hpp"

#include <fstream>
#include <map>

#include "json.hpp"
#include "mframe/error.hpp"

namespace mframe {

using json = nlohmann::ordered_json;

std::size_t PredictionSet::entity_rows() const {
  std::size_t n = 0;
  for (const auto& t : tweets) n += t.entities.size();
  return n;
}

void attach_gold(PredictionSet& set, const Corpus& corpus) {
  for (auto& t : set.tweets) {
    const auto* src = corpus.find(t.tweet);
    if (!src) throw DataError("prediction for unknown tweet '" + t.tweet + "'");
    t.ideology = src->ideology;
    t.topic = src->topic;
    t.gold = src->gold_mf;
    for (auto& e : t.entities) {
      auto it = std::find_if(src->entities.begin(), src->entities.end(),
                             [&](const EntityMention& m) { return m.id == e.entity; });
      if (it == src->entities.end()) throw DataError("prediction for unknown entity '" + e.entity + "' in " + t.tweet);
      e.surface = it->surface;
      e.gold = it->gold_role;
    }
  }
}

PredictionSet gold_predictions(const Corpus& corpus) {
  PredictionSet set;
  for (const auto& t : corpus.tweets) {
    if (!t.gold_mf) throw DataError("tweet '" + t.id + "' has no gold foundation");
    TweetPrediction p{t.id, t.ideology, t.topic, *t.gold_mf, t.gold_mf, {}};
    for (const auto& e : t.entities) {
      if (!e.gold_role) throw DataError("entity '" + e.id + "' in '" + t.id + "' has no gold role");
      p.entities.push_back({e.id, e.surface, *e.gold_role, e.gold_role});
    }
    set.tweets.push_back(std::move(p));
  }
  return set;
}

void write_predictions(std::ostream& out, const PredictionSet& set) {
  for (const auto& t : set.tweets) {
    json j;
    j["id"] = t.tweet;
    j["ideology"] = std::string(name_of(t.ideology));
    j["topic"] = t.topic;
    j["mf"] = std::string(name_of(t.mf));
    if (t.gold) j["gold_mf"] = std::string(name_of(*t.gold));
    j["entities"] = json::array();
    for (const auto& e : t.entities) {
      json je;
      je["id"] = e.entity;
      je["surface"] = e.surface;
      je["role"] = std::string(name_of(e.role));
      if (e.gold) je["gold_role"] = std::string(name_of(*e.gold));
      j["entities"].push_back(je);
    }
    out << j.dump() << '\n';
  }
}

PredictionSet read_predictions(std::istream& in) {
  PredictionSet set;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) -> void {
    throw DataError("predictions line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("provenance") && !j.contains("id")) continue;  // artifact header
    try {
      TweetPrediction t;
      t.tweet = j.at("id").get<std::string>();
      if (t.tweet.empty()) fail("entity rows need a tweet id");
      const auto ideo = parse_ideology(j.at("ideology").get<std::string>());
      if (!ideo) fail("unknown ideology");
      t.ideology = *ideo;
      t.topic = j.at("topic").get<std::string>();
      const auto mf = parse_foundation(j.at("mf").get<std::string>());
      if (!mf) fail("unknown foundation");
      t.mf = *mf;
      if (j.contains("gold_mf")) t.gold = parse_foundation(j["gold_mf"].get<std::string>());
      for (const auto& je : j.at("entities")) {
        EntityPrediction e;
        e.entity = je.at("id").get<std::string>();
        e.surface = je.value("surface", e.entity);
        const auto role = parse_role(je.at("role").get<std::string>());
        if (!role) fail("unknown role");
        e.role = *role;
        if (je.contains("gold_role")) e.gold = parse_role(je["gold_role"].get<std::string>());
        t.entities.push_back(std::move(e));
      }
      set.tweets.push_back(std::move(t));
    } catch (const json::exception& e) {
      fail(e.what());
    }
  }
  return set;
}

PredictionSet load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions " + path.string() + " (produce them with `mframe predict`)");
  return read_predictions(in);
}

std::size_t count_role_mf_violations(const PredictionSet& set) {
  std::size_t n = 0;
  for (const auto& t : set.tweets)
    for (const auto& e : t.entities)
      if (role_to_mf(e.role) != t.mf) ++n;
  return n;
}

std::size_t count_polarity_violations(const PredictionSet& set) {
  // Mentions of one entity within a single tweet are not coupled; only
  // cross-tweet pairs count.
  using Key = std::tuple<Ideology, std::string, std::string>;
  std::map<Key, std::array<std::size_t, 2>> totals;
  std::map<Key, std::size_t> same_tweet;  // sum over tweets of pos * neg
  for (const auto& t : set.tweets) {
    std::map<Key, std::array<std::size_t, 2>> local;
    for (const auto& e : t.entities)
      ++local[{t.ideology, t.topic, entity_key(e.entity)}][role_polarity(e.role) == Polarity::Positive ? 0 : 1];
    for (const auto& [k, c] : local) {
      totals[k][0] += c[0];
      totals[k][1] += c[1];
      same_tweet[k] += c[0] * c[1];
    }
  }
  std::size_t n = 0;
  for (const auto& [k, c] : totals) n += c[0] * c[1] - same_tweet[k];
  return n;
}

}  // namespace mframe
