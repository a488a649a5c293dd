#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace mframe {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
  std::size_t predicted = 0;
};

// Classification report over string labels. Classes with neither gold nor
// predicted occurrences are left out of the averages.
struct ClassificationReport {
  std::map<std::string, ClassScores> classes;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t total = 0;

  nlohmann::ordered_json to_json() const;
};

ClassificationReport classification_report(const std::vector<std::string>& gold,
                                           const std::vector<std::string>& predicted,
                                           const std::vector<std::string>& label_order = {});

}  // namespace mframe
