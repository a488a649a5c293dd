#include "mframe/knowledge_base.hpp"

#include "mframe/error.hpp"

namespace mframe {

std::string_view name_of(Sort sort) {
  switch (sort) {
    case Sort::TweetId: return "TweetId";
    case Sort::EntityId: return "EntityId";
    case Sort::MFLabel: return "MFLabel";
    case Sort::RoleLabel: return "RoleLabel";
    case Sort::Ideology: return "Ideology";
    case Sort::Topic: return "Topic";
    case Sort::PolarityLabel: return "PolarityLabel";
  }
  return "?";
}

bool is_label_sort(Sort sort) {
  return sort == Sort::MFLabel || sort == Sort::RoleLabel || sort == Sort::PolarityLabel ||
         sort == Sort::Ideology;
}

Schema::Schema(std::vector<PredicateSchema> predicates) : predicates_(std::move(predicates)) {
  for (std::size_t i = 0; i < predicates_.size(); ++i)
    for (std::size_t j = i + 1; j < predicates_.size(); ++j)
      if (predicates_[i].name == predicates_[j].name)
        throw ConfigError("duplicate predicate '" + predicates_[i].name + "' in schema");
}

const Schema& Schema::morality() {
  using S = Sort;
  static const Schema schema({
      {"Tweet", {S::TweetId}, true},
      {"Ent", {S::TweetId, S::EntityId}, true},
      {"Ideo", {S::TweetId, S::Ideology}, true},
      {"Topic", {S::TweetId, S::Topic}, true},
      {"PriorMF", {S::TweetId, S::MFLabel}, true},
      {"PriorRole", {S::TweetId, S::EntityId, S::RoleLabel}, true},
      {"MF_Role", {S::MFLabel, S::RoleLabel}, true},
      {"SamePolarity", {S::RoleLabel, S::RoleLabel}, true},
      {"SameIdeo", {S::TweetId, S::TweetId}, true},
      {"SameTopic", {S::TweetId, S::TweetId}, true},
      {"MF", {S::TweetId, S::MFLabel}, false},
      {"Role", {S::TweetId, S::EntityId, S::RoleLabel}, false},
  });
  return schema;
}

const PredicateSchema* Schema::find(std::string_view name) const {
  for (const auto& p : predicates_)
    if (p.name == name) return &p;
  return nullptr;
}

const std::vector<std::string>& label_domain(Sort sort) {
  static const auto mfs = [] {
    std::vector<std::string> v;
    for (auto f : kAllFoundations) v.emplace_back(name_of(f));
    return v;
  }();
  static const auto roles = [] {
    std::vector<std::string> v;
    for (auto r : kAllRoles) v.emplace_back(name_of(r));
    return v;
  }();
  static const std::vector<std::string> polarities = {"Positive", "Negative"};
  static const std::vector<std::string> ideologies = {"left", "right"};
  static const std::vector<std::string> none;
  switch (sort) {
    case Sort::MFLabel: return mfs;
    case Sort::RoleLabel: return roles;
    case Sort::PolarityLabel: return polarities;
    case Sort::Ideology: return ideologies;
    default: return none;
  }
}

void KnowledgeBase::Relation::add(Tuple t, double v) {
  if (index.contains(t)) return;
  if (by_position.size() < t.size()) by_position.resize(t.size());
  const auto id = tuples.size();
  for (std::size_t i = 0; i < t.size(); ++i) by_position[i][t[i]].push_back(id);
  index.emplace(t, id);
  tuples.push_back(std::move(t));
  values.push_back(v);
}

KnowledgeBase::KnowledgeBase(const Corpus& corpus, const PriorScores* priors) : corpus_(&corpus) {
  for (const auto& p : Schema::morality().predicates()) relations_[p.name];
  auto& tweet_rel = relations_["Tweet"];
  auto& ent_rel = relations_["Ent"];
  auto& ideo_rel = relations_["Ideo"];
  auto& topic_rel = relations_["Topic"];
  for (std::size_t i = 0; i < corpus.tweets.size(); ++i) {
    const auto& t = corpus.tweets[i];
    if (!tweet_index_.emplace(t.id, i).second) throw DataError("duplicate tweet id '" + t.id + "'");
    tweet_rel.add({t.id}, 1.0);
    for (const auto& e : t.entities) ent_rel.add({t.id, e.id}, 1.0);
    ideo_rel.add({t.id, std::string(name_of(t.ideology))}, 1.0);
    topic_rel.add({t.id, t.topic}, 1.0);
  }

  auto& mf_role = relations_["MF_Role"];
  for (auto r : kAllRoles) mf_role.add({std::string(name_of(role_to_mf(r))), std::string(name_of(r))}, 1.0);
  auto& same_pol = relations_["SamePolarity"];
  for (auto a : kAllRoles)
    for (auto b : kAllRoles)
      if (role_polarity(a) == role_polarity(b)) same_pol.add({std::string(name_of(a)), std::string(name_of(b))}, 1.0);

  // SameIdeo/SameTopic are derived joins and never materialized; see match().
  if (priors) {
    auto& pmf = relations_["PriorMF"];
    for (const auto& [key, score] : priors->mf) {
      if (!tweet_index_.contains(key.first)) throw DataError("prior references unknown tweet '" + key.first + "'");
      pmf.add({key.first, std::string(name_of(key.second))}, score);
    }
    auto& prole = relations_["PriorRole"];
    for (const auto& [key, score] : priors->role) {
      const auto& [tw, ent, role] = key;
      if (!tweet_index_.contains(tw)) throw DataError("prior references unknown tweet '" + tw + "'");
      prole.add({tw, ent, std::string(name_of(role))}, score);
    }
  }
}

const TweetInstance& KnowledgeBase::tweet(std::string_view id) const {
  auto it = tweet_index_.find(std::string(id));
  if (it == tweet_index_.end()) throw DataError("unknown tweet '" + std::string(id) + "'");
  return corpus_->tweets[it->second];
}

namespace {

bool is_derived(std::string_view p) { return p == "SameIdeo" || p == "SameTopic"; }

}  // namespace

std::optional<double> KnowledgeBase::value(std::string_view predicate, const Tuple& args) const {
  if (is_derived(predicate)) {
    if (args.size() != 2) return std::nullopt;
    auto a = tweet_index_.find(args[0]);
    auto b = tweet_index_.find(args[1]);
    if (a == tweet_index_.end() || b == tweet_index_.end()) return std::nullopt;
    const auto& ta = corpus_->tweets[a->second];
    const auto& tb = corpus_->tweets[b->second];
    const bool same = predicate == "SameIdeo" ? ta.ideology == tb.ideology : ta.topic == tb.topic;
    return same ? std::optional<double>(1.0) : std::nullopt;
  }
  auto rel = relations_.find(predicate);
  if (rel == relations_.end()) return std::nullopt;
  auto it = rel->second.index.find(args);
  if (it == rel->second.index.end()) return std::nullopt;
  return rel->second.values[it->second];
}

void KnowledgeBase::match(std::string_view predicate, const std::vector<std::optional<std::string>>& pattern,
                          const std::function<void(const Tuple&, double)>& visit) const {
  if (is_derived(predicate)) {
    const bool ideo = predicate == "SameIdeo";
    auto key = [&](const TweetInstance& t) { return ideo ? std::string(name_of(t.ideology)) : t.topic; };
    for (const auto& a : corpus_->tweets) {
      if (pattern.size() > 0 && pattern[0] && *pattern[0] != a.id) continue;
      for (const auto& b : corpus_->tweets) {
        if (pattern.size() > 1 && pattern[1] && *pattern[1] != b.id) continue;
        if (key(a) == key(b)) visit({a.id, b.id}, 1.0);
      }
    }
    return;
  }
  auto rel_it = relations_.find(predicate);
  if (rel_it == relations_.end()) throw DataError("unknown predicate '" + std::string(predicate) + "'");
  const auto& rel = rel_it->second;

  // Most selective bound position drives the scan.
  const std::vector<std::size_t>* candidates = nullptr;
  for (std::size_t i = 0; i < pattern.size() && i < rel.by_position.size(); ++i) {
    if (!pattern[i]) continue;
    auto it = rel.by_position[i].find(*pattern[i]);
    if (it == rel.by_position[i].end()) return;
    if (!candidates || it->second.size() < candidates->size()) candidates = &it->second;
  }
  auto accept = [&](std::size_t id) {
    const auto& t = rel.tuples[id];
    if (t.size() != pattern.size()) return;
    for (std::size_t i = 0; i < pattern.size(); ++i)
      if (pattern[i] && *pattern[i] != t[i]) return;
    visit(t, rel.values[id]);
  };
  if (candidates) {
    for (auto id : *candidates) accept(id);
  } else {
    for (std::size_t id = 0; id < rel.tuples.size(); ++id) accept(id);
  }
}

std::vector<Tuple> KnowledgeBase::open_domain(std::string_view predicate) const {
  std::vector<Tuple> out;
  if (predicate == "MF") {
    for (const auto& t : corpus_->tweets)
      for (const auto& m : label_domain(Sort::MFLabel)) out.push_back({t.id, m});
  } else if (predicate == "Role") {
    for (const auto& t : corpus_->tweets)
      for (const auto& e : t.entities)
        for (const auto& r : label_domain(Sort::RoleLabel)) out.push_back({t.id, e.id, r});
  } else {
    throw DataError("predicate '" + std::string(predicate) + "' is not open");
  }
  return out;
}

std::size_t KnowledgeBase::atom_count(std::string_view predicate) const {
  auto it = relations_.find(predicate);
  return it == relations_.end() ? 0 : it->second.tuples.size();
}

}  // namespace mframe
