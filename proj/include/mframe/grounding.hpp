#pragma once

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mframe/knowledge_base.hpp"
#include "mframe/map_problem.hpp"
#include "mframe/rule_dsl.hpp"

namespace mframe {

struct AtomKey {
  std::string predicate;
  Tuple args;

  auto operator<=>(const AtomKey&) const = default;
};

std::string to_string(const AtomKey& atom);

// Where a ground rule's weight comes from.
struct WeightSource {
  enum class Kind : std::uint8_t { Scalar, Scored, Prior } kind = Kind::Scalar;
  int template_index = -1;
  std::string label;      // head label constant (MF or role name)
  std::string tweet;      // feature key for scored rules
  std::string entity;     // empty for tweet-level rules
  double observed = 1.0;  // product of prior values in the body; 1 without priors
};

struct GroundRule {
  int template_index = -1;
  std::vector<int> body_atoms;  // open atoms in the body
  int head_atom = -1;           // -1 when the head is observed false
  bool negated_head = false;
  WeightSource source;
};

struct GroundingOptions {
  std::size_t max_ground_rules = 10'000'000;
  // When set, polarity-coupling templates become pairs of hinge potentials
  // with this weight instead of hard equalities.
  std::optional<double> soft_polarity_weight;
  // Tweets restricted to this batch (empty: every tweet in the KB).
  std::vector<std::string> batch;
};

struct Component {
  std::vector<int> atoms;
  std::vector<int> potentials;
  std::vector<int> constraints;
  std::vector<int> groups;
};

// Immutable once built (apart from weights, which learning rewrites in place).
struct GroundProgram {
  std::vector<AtomKey> atoms;
  std::map<AtomKey, int> atom_index;
  MapProblem problem;
  std::vector<GroundRule> rules;             // parallel to problem.potentials
  std::vector<int> constraint_template;      // parallel to problem.constraints, -1 for exclusivity
  std::vector<Component> components;
  std::vector<std::string> tweets;           // batch, in KB order

  std::optional<int> find(const AtomKey& key) const;
  std::size_t rule_count(int template_index) const;
  std::size_t constraint_count(int template_index) const;

  // Sub-problem over one component with local variable numbering; MF groups
  // come before Role groups. `local_to_global` receives the atom ids.
  MapProblem component_problem(std::size_t k, std::vector<int>* local_to_global = nullptr) const;

  // Recomputes the component partition from the current potentials and constraints.
  void partition();
};

// Instantiates every template against the KB. Scored templates get weight 0
// until a weight function is applied. Exactly-one groups are added for every
// MF(t,·) and Role(t,e,·) block.
GroundProgram ground(const Program& program, const KnowledgeBase& kb, const GroundingOptions& options = {});

// Per tweet: sum_m MF(t,m) = 1; per (tweet, entity): sum_r Role(t,e,r) = 1.
void add_label_exclusivity(GroundProgram& gp);

// For each pair of tweets in the batch (same ideology/topic when required)
// mentioning the same entity, one equality per polarity class.
std::vector<LinearConstraint> ground_c3(const KnowledgeBase& kb, const GroundProgram& gp, bool same_ideology = true,
                                        bool same_topic = true);

using WeightFunction = std::function<double(const GroundRule&)>;
void apply_weights(GroundProgram& gp, const WeightFunction& weight);

// Adds unit equalities y = value for the given atoms (e.g. observed gold MF).
void fix_atoms(GroundProgram& gp, const std::vector<std::pair<int, double>>& values);

// CPLEX-LP text: maximize score with hinge slacks; binaries section lists atoms.
void write_lp(std::ostream& out, const GroundProgram& gp, const Program& program);

}  // namespace mframe
