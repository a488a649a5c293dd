#include "mframe/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "mframe/error.hpp"
#include "mframe/text.hpp"

namespace mframe {

using nlohmann::json;

std::string_view name_of(Ideology ideology) { return ideology == Ideology::Left ? "left" : "right"; }

std::optional<Ideology> parse_ideology(std::string_view text) {
  const auto folded = case_fold(text);
  if (folded == "left" || folded == "democrat" || folded == "d") return Ideology::Left;
  if (folded == "right" || folded == "republican" || folded == "r") return Ideology::Right;
  return std::nullopt;
}

bool TweetInstance::fully_labeled() const {
  if (!gold_mf) return false;
  for (const auto& e : entities)
    if (!e.gold_role) return false;
  return true;
}

std::string entity_key(std::string_view entity_id) {
  const auto hash = entity_id.rfind('#');
  if (hash == std::string_view::npos || hash + 1 == entity_id.size()) return std::string(entity_id);
  for (auto i = hash + 1; i < entity_id.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(entity_id[i]))) return std::string(entity_id);
  return std::string(entity_id.substr(0, hash));
}

const TweetInstance* Corpus::find(std::string_view id) const {
  for (const auto& t : tweets)
    if (t.id == id) return &t;
  return nullptr;
}

std::size_t Corpus::entity_count() const {
  std::size_t n = 0;
  for (const auto& t : tweets) n += t.entities.size();
  return n;
}

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw DataError("corpus line " + std::to_string(line) + ": " + msg);
}

TweetInstance parse_record(const json& rec, std::size_t line, const CorpusOptions& options) {
  if (!rec.is_object()) fail(line, "record is not an object");
  auto get_string = [&](const char* key) -> std::string {
    if (!rec.contains(key) || !rec[key].is_string()) fail(line, std::string("missing string field '") + key + "'");
    return rec[key].get<std::string>();
  };

  TweetInstance t;
  t.id = get_string("id");
  if (t.id.empty()) fail(line, "empty id");
  t.text = get_string("text");
  t.tokens = tokenize(t.text);

  const auto ideology = parse_ideology(get_string("ideology"));
  if (!ideology) fail(line, "unknown ideology '" + rec["ideology"].get<std::string>() + "'");
  t.ideology = *ideology;

  t.topic = case_fold(get_string("topic"));
  if (t.topic.empty()) fail(line, "empty topic");
  if (!options.topics.empty() && !options.topics.contains(t.topic)) fail(line, "unknown topic '" + t.topic + "'");

  if (rec.contains("gold_mf") && !rec["gold_mf"].is_null()) {
    if (!rec["gold_mf"].is_string()) fail(line, "gold_mf must be a string");
    const auto mf = parse_foundation(rec["gold_mf"].get<std::string>());
    if (!mf) fail(line, "unknown moral foundation '" + rec["gold_mf"].get<std::string>() + "'");
    t.gold_mf = *mf;
  }

  if (rec.contains("entities")) {
    if (!rec["entities"].is_array()) fail(line, "entities must be an array");
    std::map<std::string, int> seen;
    for (const auto& ent : rec["entities"]) {
      if (!ent.is_object() || !ent.contains("surface") || !ent["surface"].is_string())
        fail(line, "entity without surface");
      EntityMention m;
      m.surface = ent["surface"].get<std::string>();
      const auto folded = case_fold(m.surface);
      if (folded.empty()) fail(line, "empty entity surface");
      const int n = ++seen[folded];
      m.id = n == 1 ? folded : folded + "#" + std::to_string(n);
      if (!ent.contains("start") || !ent.contains("end") || !ent["start"].is_number_integer() ||
          !ent["end"].is_number_integer())
        fail(line, "entity '" + m.surface + "' without integer span");
      m.start = ent["start"].get<int>();
      m.end = ent["end"].get<int>();
      if (m.start < 0 || m.end <= m.start || static_cast<std::size_t>(m.end) > t.text.size())
        fail(line, "entity span [" + std::to_string(m.start) + "," + std::to_string(m.end) +
                       ") outside text bounds");
      if (ent.contains("gold_role") && !ent["gold_role"].is_null()) {
        if (!ent["gold_role"].is_string()) fail(line, "gold_role must be a string");
        const auto role = parse_role(ent["gold_role"].get<std::string>());
        if (!role) fail(line, "unknown moral role '" + ent["gold_role"].get<std::string>() + "'");
        m.gold_role = *role;
        if (t.gold_mf && role_to_mf(*role) != *t.gold_mf)
          fail(line, "gold role '" + std::string(name_of(*role)) + "' does not belong to gold foundation '" +
                         std::string(name_of(*t.gold_mf)) + "'");
      }
      t.entities.push_back(std::move(m));
    }
  }
  return t;
}

}  // namespace

Corpus parse_corpus(std::istream& in, const CorpusOptions& options) {
  Corpus corpus;
  std::unordered_set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(line, std::string("malformed JSON: ") + e.what());
    }
    auto t = parse_record(rec, line, options);
    if (!ids.insert(t.id).second) fail(line, "duplicate tweet id '" + t.id + "'");
    corpus.tweets.push_back(std::move(t));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  return parse_corpus(in, options);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& t : corpus.tweets) {
    json rec;
    rec["id"] = t.id;
    rec["text"] = t.text;
    rec["ideology"] = std::string(name_of(t.ideology));
    rec["topic"] = t.topic;
    json ents = json::array();
    for (const auto& e : t.entities) {
      json je;
      je["surface"] = e.surface;
      je["start"] = e.start;
      je["end"] = e.end;
      if (e.gold_role) je["gold_role"] = std::string(name_of(*e.gold_role));
      ents.push_back(je);
    }
    rec["entities"] = ents;
    if (t.gold_mf) rec["gold_mf"] = std::string(name_of(*t.gold_mf));
    out << rec.dump() << '\n';
  }
}

std::optional<double> PriorScores::mf_score(const std::string& tweet, MoralFoundation f) const {
  auto it = mf.find({tweet, f});
  if (it == mf.end()) return std::nullopt;
  return it->second;
}

std::optional<double> PriorScores::role_score(const std::string& tweet, const std::string& entity,
                                              MoralRole r) const {
  auto it = role.find({tweet, entity, r});
  if (it == role.end()) return std::nullopt;
  return it->second;
}

PriorScores parse_priors(std::istream& in, const Corpus& corpus) {
  PriorScores priors;
  std::string text;
  std::size_t line = 0;
  auto fail_at = [&](const std::string& msg) -> void {
    throw DataError("priors line " + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty() || text[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(text);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 3 && cols.size() != 4) fail_at("expected 3 or 4 tab-separated columns");

    const auto* tweet = corpus.find(cols[0]);
    if (!tweet) fail_at("unknown tweet id '" + cols[0] + "'");

    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(cols.back(), &used);
      if (used != cols.back().size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail_at("bad score '" + cols.back() + "'");
    }
    if (!std::isfinite(score)) fail_at("non-finite score");
    if (score < 0.0 || score > 1.0) {
      const double clamped = std::clamp(score, 0.0, 1.0);
      priors.warnings.push_back("priors line " + std::to_string(line) + ": score " + cols.back() +
                                " clamped to " + (clamped == 0.0 ? "0" : "1"));
      score = clamped;
    }

    if (cols.size() == 4 && cols[1].empty()) cols.erase(cols.begin() + 1);  // blank entity column
    if (cols.size() == 3) {
      const auto mf = parse_foundation(cols[1]);
      if (!mf) fail_at("unknown moral foundation '" + cols[1] + "'");
      priors.mf[{tweet->id, *mf}] = score;
    } else {
      const auto entity = case_fold(cols[1]);
      const bool known = std::any_of(tweet->entities.begin(), tweet->entities.end(),
                                     [&](const EntityMention& m) { return m.id == entity; });
      if (!known) fail_at("unknown entity '" + cols[1] + "' in tweet '" + cols[0] + "'");
      const auto role = parse_role(cols[2]);
      if (!role) fail_at("unknown moral role '" + cols[2] + "'");
      priors.role[{tweet->id, entity, *role}] = score;
    }
  }
  return priors;
}

PriorScores load_priors(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open priors " + path.string());
  return parse_priors(in, corpus);
}

void write_priors(std::ostream& out, const PriorScores& priors) {
  std::ostringstream buf;
  buf.precision(17);
  for (const auto& [key, score] : priors.mf)
    buf << key.first << '\t' << name_of(key.second) << '\t' << score << '\n';
  for (const auto& [key, score] : priors.role)
    buf << std::get<0>(key) << '\t' << std::get<1>(key) << '\t' << name_of(std::get<2>(key)) << '\t' << score
        << '\n';
  out << buf.str();
}

}  // namespace mframe
