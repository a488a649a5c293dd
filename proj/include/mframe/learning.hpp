#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "mframe/corpus.hpp"
#include "mframe/grounding.hpp"
#include "mframe/inference.hpp"
#include "mframe/knowledge_base.hpp"
#include "mframe/params.hpp"
#include "mframe/predictions.hpp"
#include "mframe/rule_dsl.hpp"

namespace mframe {

enum class Algorithm : std::uint8_t { LocalOnly, PerceptronMLE, GlobalMargin };

std::string_view name_of(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

struct TrainConfig {
  Algorithm algorithm = Algorithm::LocalOnly;
  double rate = 0.1;
  double decay = 0.0;  // rate / (1 + decay * epoch)
  int epochs = 50;
  int patience = 5;
  double l2 = 1e-4;
  std::uint64_t seed = 13;
  double validation_fraction = 0.1;  // stratified by foundation; 0 trains on everything
  double per_foundation_init = 0.1;
  bool warm_start = true;  // global training starts from local classifiers
};

struct EpochLog {
  int epoch = 0;
  double train = 0.0;       // accuracy (local) or structured accuracy (joint)
  double validation = -1;   // macro-F1 (local) or structured accuracy (joint); -1 without a split
  std::size_t updates = 0;
};

struct TrainReport {
  std::map<std::string, std::vector<EpochLog>> local;  // per scorer
  std::vector<EpochLog> joint;
  std::size_t skipped = 0;  // joint examples whose MAP problem was infeasible
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
};

// Stratified by gold foundation; tweets without one always go to training.
std::pair<Corpus, Corpus> split_validation(const Corpus& corpus, double fraction, std::uint64_t seed);

// Fits the featurizer and creates zero scorers, template scalars from the
// program's seeds, and per-foundation scalars at cfg.per_foundation_init.
ParameterStore init_parameters(const Program& program, const Corpus& train, const FeatureConfig& features,
                               std::optional<Lexicon> lexicon, const TrainConfig& cfg);

// Multinomial logistic regression per linear scorer, SGD with L2 and early
// stopping on validation macro-F1.
void train_local(const Program& program, const Corpus& corpus, ParameterStore& params, const TrainConfig& cfg,
                 TrainReport* report = nullptr);

// Rule weights from parameters, with feature vectors cached per
// (families, tweet, entity). Not thread-safe.
class WeightModel {
 public:
  WeightModel(const Program& program, const KnowledgeBase& kb);

  double weight(const GroundRule& rule, const ParameterStore& params) const;
  void apply(GroundProgram& gp, const ParameterStore& params) const;
  void apply(GroundProgram& gp, const ParameterStore& params, const Component& component) const;

  struct Scope {
    bool scorers = true;         // linear scorer matrices
    bool per_foundation = true;
    bool scalars = true;         // scalar templates
    bool priors = true;          // prior-scaled templates
  };
  // params += scale * d w_r / d theta
  void step(const GroundRule& rule, double scale, ParameterStore& params, const Scope& scope) const;

  const SparseVector& features(unsigned families, const std::string& tweet, const std::string& entity,
                               const Featurizer& featurizer) const;

 private:
  const Program& program_;
  const KnowledgeBase& kb_;
  mutable std::map<std::tuple<unsigned, std::string, std::string>, SparseVector> cache_;
};

// The weight w_r a grounding contributes under the given parameters.
double score_template(const Program& program, const GroundRule& rule, const ParameterStore& params,
                      const KnowledgeBase& kb);

// 1 for each atom that matches the gold labels.
std::vector<double> gold_assignment(const GroundProgram& gp, const KnowledgeBase& kb);

struct JointOptions {
  SolverConfig solver;
  GroundingOptions grounding;
};

// Scalar weights by the MAP approximation of the likelihood gradient:
// w_r += rate * (psi_r(MAP) - psi_r(gold)), projected to w_r >= 0.
void train_perceptron_mle(const Program& program, const Corpus& corpus, const PriorScores* priors,
                          ParameterStore& params, const TrainConfig& cfg, const JointOptions& joint = {},
                          TrainReport* report = nullptr);

// Structured hinge loss with Hamming-augmented MAP; subgradient steps through
// every scorer. Prior pass-through scalars stay fixed.
void train_global_margin(const Program& program, const Corpus& corpus, const PriorScores* priors,
                         ParameterStore& params, const TrainConfig& cfg, const JointOptions& joint = {},
                         TrainReport* report = nullptr);

// Runs init_parameters, local training and the configured joint algorithm.
ParameterStore train(const Program& program, const Corpus& corpus, const PriorScores* priors,
                     const FeatureConfig& features, std::optional<Lexicon> lexicon, const TrainConfig& cfg,
                     const JointOptions& joint = {}, TrainReport* report = nullptr);

struct PredictOptions {
  SolverConfig solver;
  GroundingOptions grounding;
  bool observe_gold_mf = false;  // skyline: gold foundations are evidence
};

struct PredictResult {
  PredictionSet predictions;
  SolveStats stats;
};

PredictResult predict(const Program& program, const ParameterStore& params, const Corpus& corpus,
                      const PriorScores* priors, const PredictOptions& options = {});

// Roles an entity can still take once its tweet's gold foundation is observed.
std::vector<MoralRole> skyline_candidates(const Program& program, const Corpus& corpus, const std::string& tweet,
                                          const std::string& entity);

// Fraction of tweets whose foundation and every role match gold.
double structured_accuracy(const PredictionSet& predictions);

}  // namespace mframe
