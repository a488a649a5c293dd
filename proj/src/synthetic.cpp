#include "mframe/synthetic.hpp"

#include <algorithm>
#include <random>

#include "mframe/error.hpp"
#include "mframe/text.hpp"

namespace mframe {

std::string foundation_marker(MoralFoundation f) { return "mfword" + std::to_string(index_of(f)); }
std::string role_marker(MoralRole r) { return "roleword" + std::to_string(index_of(r)); }

namespace {

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

// A foundation other than `f`, uniformly.
MoralFoundation other_than(std::mt19937_64& rng, MoralFoundation f) {
  auto k = std::uniform_int_distribution<std::size_t>(0, kNumFoundations - 2)(rng);
  if (k >= index_of(f)) ++k;
  return kAllFoundations[k];
}

MoralRole role_in(std::mt19937_64& rng, MoralFoundation f) {
  const auto roles = roles_of(f);
  return roles[std::uniform_int_distribution<std::size_t>(0, roles.size() - 1)(rng)];
}

}  // namespace

Corpus synthetic_corpus(const SyntheticConfig& cfg) {
  if (cfg.min_entities > cfg.max_entities || cfg.topics.empty() || cfg.names == 0)
    throw ConfigError("synthetic: need min_entities <= max_entities, a topic and a name pool");
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution mf_ok(cfg.mf_signal), role_ok(cfg.role_signal), coin(0.5);
  std::uniform_int_distribution<std::size_t> n_entities(cfg.min_entities, cfg.max_entities);
  std::uniform_int_distribution<std::size_t> name(0, cfg.names - 1);
  const std::vector<std::string> filler = {"the", "we", "must", "today", "this", "people", "now", "vote", "all", "our"};

  Corpus corpus;
  for (std::size_t i = 0; i < cfg.tweets; ++i) {
    TweetInstance t;
    t.id = cfg.id_prefix + std::to_string(i);
    t.ideology = coin(rng) ? Ideology::Left : Ideology::Right;
    t.topic = pick(rng, cfg.topics);
    const auto mf = kAllFoundations[std::uniform_int_distribution<std::size_t>(0, kNumFoundations - 1)(rng)];
    t.gold_mf = mf;

    std::string text;
    auto append = [&](const std::string& word) {
      if (!text.empty()) text += ' ';
      text += word;
    };
    for (std::size_t k = 0; k < cfg.filler_words; ++k) append(pick(rng, filler));
    append(foundation_marker(mf_ok(rng) ? mf : other_than(rng, mf)));
    for (std::size_t k = 0; k < cfg.distractors; ++k)
      append(role_marker(kAllRoles[std::uniform_int_distribution<std::size_t>(0, kNumRoles - 1)(rng)]));

    const auto count = n_entities(rng);
    std::vector<std::string> seen;
    for (std::size_t k = 0; k < count; ++k) {
      const auto gold = role_in(rng, mf);
      const auto shown = role_ok(rng) ? gold : role_in(rng, other_than(rng, mf));
      const std::string surface = role_marker(shown) + " name" + std::to_string(name(rng));
      append("and");
      const int start = static_cast<int>(text.size()) + 1;
      append(surface);
      EntityMention e;
      e.surface = surface;
      e.start = start;
      e.end = start + static_cast<int>(surface.size());
      e.gold_role = gold;
      std::string id = case_fold(surface);
      const auto repeats = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), id));
      seen.push_back(id);
      e.id = repeats ? id + "#" + std::to_string(repeats + 1) : id;
      t.entities.push_back(std::move(e));
    }
    t.text = std::move(text);
    t.tokens = tokenize(t.text);
    corpus.tweets.push_back(std::move(t));
  }
  return corpus;
}

PriorScores synthetic_priors(const Corpus& corpus, const SyntheticPriorConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> noise(0.0, cfg.noise);
  PriorScores p;
  for (const auto& t : corpus.tweets) {
    if (!t.gold_mf) throw DataError("synthetic priors need gold labels ('" + t.id + "')");
    const auto decoy = other_than(rng, *t.gold_mf);
    for (auto f : kAllFoundations) {
      const double v = f == *t.gold_mf ? cfg.gold_mf : f == decoy ? cfg.decoy_mf : noise(rng);
      if (v > 0.0) p.mf[{t.id, f}] = v;
    }
    for (const auto& e : t.entities) {
      if (!e.gold_role) throw DataError("synthetic priors need gold roles ('" + t.id + "')");
      const auto decoy_role = role_in(rng, decoy);
      for (auto r : kAllRoles) {
        const double v = r == *e.gold_role ? cfg.gold_role : r == decoy_role ? cfg.decoy_role : noise(rng);
        if (v > 0.0) p.role[{t.id, e.id, r}] = v;
      }
    }
  }
  return p;
}

}  // namespace mframe
