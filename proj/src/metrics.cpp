#include "mframe/metrics.hpp"

#include <set>
#include <stdexcept>

namespace mframe {

ClassificationReport classification_report(const std::vector<std::string>& gold,
                                           const std::vector<std::string>& predicted,
                                           const std::vector<std::string>& label_order) {
  if (gold.size() != predicted.size()) throw std::invalid_argument("classification_report: size mismatch");
  ClassificationReport r;
  r.total = gold.size();
  std::map<std::string, std::size_t> tp;
  std::set<std::string> seen(label_order.begin(), label_order.end());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++r.classes[gold[i]].support;
    ++r.classes[predicted[i]].predicted;
    if (gold[i] == predicted[i]) {
      ++tp[gold[i]];
      ++correct;
    }
  }
  for (const auto& l : seen) r.classes.try_emplace(l);
  r.accuracy = r.total ? static_cast<double>(correct) / static_cast<double>(r.total) : 0.0;

  std::size_t active = 0;
  for (auto& [label, c] : r.classes) {
    const double t = static_cast<double>(tp[label]);
    c.precision = c.predicted ? t / static_cast<double>(c.predicted) : 0.0;
    c.recall = c.support ? t / static_cast<double>(c.support) : 0.0;
    c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    if (c.support == 0 && c.predicted == 0) continue;
    ++active;
    r.macro_f1 += c.f1;
    if (r.total) r.weighted_f1 += c.f1 * static_cast<double>(c.support) / static_cast<double>(r.total);
  }
  if (active) r.macro_f1 /= static_cast<double>(active);
  return r;
}

nlohmann::ordered_json ClassificationReport::to_json() const {
  nlohmann::ordered_json j;
  j["macro_f1"] = macro_f1;
  j["weighted_f1"] = weighted_f1;
  j["accuracy"] = accuracy;
  j["total"] = total;
  auto& per = j["per_class"];
  per = nlohmann::ordered_json::object();
  for (const auto& [label, c] : classes)
    per[label] = {{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}};
  return j;
}

}  // namespace mframe
