#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mframe/corpus.hpp"

namespace mframe {

enum class Sort : std::uint8_t { TweetId, EntityId, MFLabel, RoleLabel, Ideology, Topic, PolarityLabel };

std::string_view name_of(Sort sort);
bool is_label_sort(Sort sort);

struct PredicateSchema {
  std::string name;
  std::vector<Sort> sorts;
  bool closed = true;

  std::size_t arity() const { return sorts.size(); }
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<PredicateSchema> predicates);

  // Tweet, Ent, Ideo, Topic, PriorMF, PriorRole (closed, data); MF, Role (open);
  // MF_Role, SamePolarity (taxonomy built-ins); SameIdeo, SameTopic (derived joins).
  static const Schema& morality();

  const PredicateSchema* find(std::string_view name) const;
  const std::vector<PredicateSchema>& predicates() const { return predicates_; }

 private:
  std::vector<PredicateSchema> predicates_;
};

using Tuple = std::vector<std::string>;

// Constants of a label sort, in taxonomy order.
const std::vector<std::string>& label_domain(Sort sort);

// Immutable relational store over the closed predicates of Schema::morality().
// Safe to share between threads once constructed.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(const Corpus& corpus, const PriorScores* priors = nullptr);

  const Schema& schema() const { return Schema::morality(); }
  const Corpus& corpus() const { return *corpus_; }

  // Truth value of a ground closed atom; nullopt when absent.
  std::optional<double> value(std::string_view predicate, const Tuple& args) const;

  // Visits all stored tuples of a closed predicate that agree with the bound
  // positions of `pattern`, in deterministic (insertion) order.
  void match(std::string_view predicate, const std::vector<std::optional<std::string>>& pattern,
             const std::function<void(const Tuple&, double)>& visit) const;

  // Ground arguments of every candidate open atom of `predicate`.
  std::vector<Tuple> open_domain(std::string_view predicate) const;

  std::size_t atom_count(std::string_view predicate) const;

  const TweetInstance& tweet(std::string_view id) const;

 private:
  struct Relation {
    std::vector<Tuple> tuples;
    std::vector<double> values;
    std::map<Tuple, std::size_t> index;
    std::vector<std::unordered_map<std::string, std::vector<std::size_t>>> by_position;

    void add(Tuple t, double v);
  };

  const Corpus* corpus_;
  std::map<std::string, Relation, std::less<>> relations_;
  std::unordered_map<std::string, std::size_t> tweet_index_;
};

}  // namespace mframe
