#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mframe/taxonomy.hpp"

namespace mframe {

enum class Ideology : std::uint8_t { Left, Right };

std::string_view name_of(Ideology ideology);
std::optional<Ideology> parse_ideology(std::string_view text);

struct EntityMention {
  std::string surface;
  // Case-folded surface; the n-th repeat of a surface in one tweet gets "#n".
  std::string id;
  int start = 0;
  int end = 0;
  std::optional<MoralRole> gold_role;
};

struct TweetInstance {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  Ideology ideology = Ideology::Left;
  std::string topic;
  std::vector<EntityMention> entities;
  std::optional<MoralFoundation> gold_mf;

  bool fully_labeled() const;
};

// Entity identity used for cross-tweet coupling: the id without its "#n" suffix.
std::string entity_key(std::string_view entity_id);

struct CorpusOptions {
  // Empty set accepts any non-empty topic.
  std::set<std::string> topics = {"abortion", "aca", "guns", "immigration", "lgbtq", "terrorism"};
};

struct Corpus {
  std::vector<TweetInstance> tweets;

  const TweetInstance* find(std::string_view id) const;
  std::size_t entity_count() const;
};

Corpus parse_corpus(std::istream& in, const CorpusOptions& options = {});
Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options = {});
void write_corpus(std::ostream& out, const Corpus& corpus);

// External classifier scores. Absent entries are absent, not zero.
struct PriorScores {
  std::map<std::pair<std::string, MoralFoundation>, double> mf;
  std::map<std::tuple<std::string, std::string, MoralRole>, double> role;
  std::vector<std::string> warnings;

  std::optional<double> mf_score(const std::string& tweet, MoralFoundation f) const;
  std::optional<double> role_score(const std::string& tweet, const std::string& entity,
                                   MoralRole r) const;
  bool empty() const { return mf.empty() && role.empty(); }
};

// TSV rows: tweet_id \t [entity_id] \t label \t score. Entity ids may be given
// as raw surfaces; they are case-folded before lookup.
PriorScores parse_priors(std::istream& in, const Corpus& corpus);
PriorScores load_priors(const std::filesystem::path& path, const Corpus& corpus);
void write_priors(std::ostream& out, const PriorScores& priors);

}  // namespace mframe
