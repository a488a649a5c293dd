#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mframe/analysis.hpp"
#include "mframe/features.hpp"
#include "mframe/inference.hpp"
#include "mframe/learning.hpp"
#include "mframe/lexicon.hpp"

namespace mframe {

struct PathConfig {
  std::filesystem::path corpus;
  std::filesystem::path priors;
  std::filesystem::path lexicon;  // lexicon TSV used as a feature family
  std::filesystem::path mfd;
  std::filesystem::path aliases;
  std::filesystem::path program = "data/morality.rules";
  std::filesystem::path params;   // defaults to <output>/params.json
  std::filesystem::path output = "out";
};

struct AblationVariant {
  std::string name;
  std::vector<std::string> disable;  // rule names, or "priors" for every prior-scaled rule
};

struct AnalysisConfig {
  std::size_t partisan_min_count = 1;
  EntityGroupConfig groups;
  GraphConfig graph;
  PolarityRankConfig rank;
  std::vector<std::string> entities;  // polarity and distribution targets; empty: most frequent
  std::size_t top_entities = 5;
};

struct PipelineConfig {
  PathConfig paths;
  std::uint64_t seed = 13;
  int folds = 3;
  std::vector<std::string> topics = {"abortion", "aca", "guns", "immigration", "lgbtq", "terrorism"};
  SolverConfig solver;
  std::optional<double> soft_polarity_weight;
  TrainConfig train;
  FeatureConfig features;
  PmiConfig lexicon;
  LabelField lexicon_field = LabelField::MoralFoundation;
  AnalysisConfig analysis;
  std::vector<AblationVariant> ablation = default_ablation();

  static std::vector<AblationVariant> default_ablation();

  // Unknown keys and wrong types raise ConfigError naming the field path.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});
  nlohmann::ordered_json to_json() const;

  // FNV-1a over the canonical JSON, excluding the output directory and the
  // worker count, neither of which changes results.
  std::string hash() const;
  nlohmann::ordered_json provenance() const;
  std::filesystem::path params_path() const;
};

// "a.b.c=value": value parsed as JSON when possible, otherwise as a string.
void apply_override(nlohmann::json& tree, const std::string& assignment);

// Drops rules by name; "priors" removes every rule reading a prior predicate.
// Throws ConfigError on unknown names or when no scoring rule is left.
Program drop_rules(const Program& program, const std::vector<std::string>& names);

// Deterministic stratified fold index per tweet.
std::vector<int> assign_folds(const Corpus& corpus, int folds, std::uint64_t seed);

// Each command returns 0, or 4 when some component did not converge; the
// artifacts are written either way.
int cmd_train(const PipelineConfig& cfg, std::ostream& log);
int cmd_predict(const PipelineConfig& cfg, std::ostream& log);
int cmd_ablate(const PipelineConfig& cfg, std::ostream& log);
int cmd_analyze(const PipelineConfig& cfg, std::ostream& log);
int cmd_lexicon(const PipelineConfig& cfg, std::ostream& log);
int cmd_ground(const PipelineConfig& cfg, const std::filesystem::path& dump, std::ostream& log);

}  // namespace mframe
