#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mframe/predictions.hpp"

namespace mframe {

// Plain table with TSV, CSV and markdown renderings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_tsv() const;
  std::string to_csv() const;
  std::string to_markdown() const;
};

// Fixed-precision formatting used by every table, so outputs are byte-stable.
std::string format_number(double value, int digits = 4);

// ---- aliases

// canonical -> aliases, all case-folded. A canonical name is its own alias.
class EntityAliasMap {
 public:
  // Throws ConfigError when an alias already belongs to another canonical name.
  void add(const std::string& canonical, const std::vector<std::string>& aliases);
  std::string canonical(std::string_view surface) const;
  bool empty() const { return to_canonical_.empty(); }
  std::map<std::string, std::vector<std::string>> groups() const;

  static EntityAliasMap from_json(const nlohmann::json& j);
  static EntityAliasMap load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string> to_canonical_;
};

// Replaces every entity surface by its case-folded canonical name.
PredictionSet apply_aliases(const PredictionSet& set, const EntityAliasMap& aliases);

// Case-folded surface, the key analytics group entities by.
std::string entity_name(const EntityPrediction& e);

// ---- partisanship

struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;
};

struct ZScore {
  double z = 0.0;
  bool degenerate = false;  // pooled proportion 0 or 1
};

// Pooled two-proportion test; positive when the left proportion is larger.
ZScore partisanship_zscore(Proportion left, Proportion right);

struct PartisanEntry {
  MoralRole role = MoralRole::TargetOfCareHarm;
  std::string entity;
  ZScore z;
  std::size_t count = 0;
};

struct TopicPartisanship {
  std::string topic;
  MoralFoundation mf = MoralFoundation::CareHarm;  // most used foundation in the topic
  ZScore mf_z;
  std::optional<PartisanEntry> right;  // most negative (role, entity) z within mf's roles
  std::optional<PartisanEntry> left;   // most positive
};

// One row per topic. (role, entity) pairs used fewer than `min_count` times are ignored.
std::vector<TopicPartisanship> partisanship_table(const PredictionSet& set, std::size_t min_count = 1);
Table to_table(const std::vector<TopicPartisanship>& rows);

// ---- error taxonomy

struct ErrorCounts {
  std::size_t e1 = 0;  // polarity swap, per entity row
  std::size_t e2 = 0;  // predicted role outside the tweet's gold foundation, per entity row
  std::size_t e3 = 0;  // tweets with >= 2 entities all predicted one role while gold roles differ

  bool operator==(const ErrorCounts&) const = default;
};

ErrorCounts error_taxonomy(const PredictionSet& set);

// ---- frequent entities

struct EntityGroupConfig {
  std::size_t n_max = 5;
  std::size_t top_k = 10;
};

struct EntityGroup {
  std::string ngram;  // stemmed representative
  std::size_t count = 0;
  std::vector<std::string> merged;  // other n-grams folded into the group, sorted
};

using RoleEntityTable = std::map<std::pair<Ideology, MoralRole>, std::vector<EntityGroup>>;

// Per (ideology, predicted role): stemmed n-grams of entity surfaces, counted
// once per entity row, with inclusive n-grams merged into the group of the
// best ranked n-gram they overlap by containment.
RoleEntityTable top_entities_per_role(const PredictionSet& set, const EntityGroupConfig& cfg = {});

// Same grouping over an explicit list of token sequences; exposed for tests.
std::vector<EntityGroup> group_ngrams(const std::vector<std::vector<std::string>>& entities,
                                      const EntityGroupConfig& cfg = {});
Table to_table(const RoleEntityTable& table);

// ---- relation graphs

enum class RoleClass : std::uint8_t { Target, PositiveActor, NegativeActor };
std::string_view name_of(RoleClass c);
RoleClass role_class(MoralRole r);

struct GraphConfig {
  std::size_t min_count = 15;
  std::size_t targets = 2;
  std::size_t positive_actors = 3;
  std::size_t negative_actors = 3;
};

struct GraphNode {
  std::string entity;
  MoralRole role = MoralRole::TargetOfCareHarm;  // modal predicted role
  RoleClass cls = RoleClass::Target;
  std::size_t count = 0;

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::string from;  // actor
  std::string to;    // target
  std::size_t count = 0;

  bool operator==(const GraphEdge&) const = default;
};

struct RelationGraph {
  MoralFoundation mf = MoralFoundation::CareHarm;
  Ideology ideology = Ideology::Left;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  bool underfull = false;

  std::string to_dot() const;
  nlohmann::ordered_json to_json() const;
};

// Over tweets of `ideology` predicted as `mf`: the top targets and the actors
// co-mentioned with them, edges actor -> target weighted by co-mentions.
RelationGraph build_relation_graph(const PredictionSet& set, MoralFoundation mf, Ideology ideology,
                                   const GraphConfig& cfg = {});

// Reads the DOT dialect written by to_dot().
RelationGraph parse_dot(std::string_view dot);

// ---- role usage

struct RankPoint {
  MoralRole role = MoralRole::TargetOfCareHarm;
  std::size_t count = 0;
  double rank = 0.0;  // 1 for the most used role, 0 for the least
};

struct PolarityRankConfig {
  std::size_t min_count = 10;
};

// Per ideology, roles the entity is predicted with, ranked by usage.
std::map<Ideology, std::vector<RankPoint>> polarity_rank(const PredictionSet& set, std::string_view entity,
                                                          const PolarityRankConfig& cfg = {});
Table polarity_rank_table(const std::map<Ideology, std::vector<RankPoint>>& series, std::string_view entity);

// Fractions over roles with nonzero count, most used first.
std::vector<std::pair<MoralRole, double>> role_distribution(const PredictionSet& set, std::string_view entity,
                                                            Ideology ideology);
Table role_distribution_table(const std::vector<std::pair<MoralRole, double>>& dist);

// Entities ranked by row count, ties by name.
std::vector<std::pair<std::string, std::size_t>> entity_frequencies(const PredictionSet& set);

}  // namespace mframe
