#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mframe/features.hpp"
#include "mframe/taxonomy.hpp"

namespace mframe {

// Multinomial linear classifier: one weight row per label over the featurizer's space.
struct LinearScorer {
  std::vector<std::string> labels;
  std::size_t dim = 0;
  unsigned families = 0;
  std::vector<double> weights;  // labels x dim, row-major

  LinearScorer() = default;
  LinearScorer(std::vector<std::string> labels, std::size_t dim, unsigned families);

  std::size_t label_index(const std::string& label) const;
  double score(std::size_t label, const SparseVector& x) const;
  std::vector<double> scores(const SparseVector& x) const;
  void add(std::size_t label, const SparseVector& x, double scale);
  double* row(std::size_t label) { return weights.data() + label * dim; }
};

struct ParameterStore {
  Featurizer featurizer;
  std::map<std::string, LinearScorer> linear;                                 // scorer id
  std::map<std::string, std::array<double, kNumFoundations>> per_foundation;  // scorer id
  std::map<std::string, double> scalars;                                      // template name
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
  static ParameterStore from_json(const nlohmann::ordered_json& j);
  void save(const std::filesystem::path& path, const nlohmann::ordered_json& provenance = {}) const;
  static ParameterStore load(const std::filesystem::path& path);
};

}  // namespace mframe
