#include "mframe/params.hpp"

#include <cmath>
#include <fstream>

#include "mframe/error.hpp"

namespace mframe {

namespace {
constexpr const char* kFormat = "mframe-params/1";
}

LinearScorer::LinearScorer(std::vector<std::string> l, std::size_t d, unsigned f)
    : labels(std::move(l)), dim(d), families(f), weights(labels.size() * d, 0.0) {}

std::size_t LinearScorer::label_index(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw ConfigError("scorer has no label '" + label + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

double LinearScorer::score(std::size_t label, const SparseVector& x) const {
  const double* w = weights.data() + label * dim;
  double s = 0.0;
  for (const auto& [i, v] : x) s += w[i] * v;
  return s;
}

std::vector<double> LinearScorer::scores(const SparseVector& x) const {
  std::vector<double> out(labels.size());
  for (std::size_t l = 0; l < labels.size(); ++l) out[l] = score(l, x);
  return out;
}

void LinearScorer::add(std::size_t label, const SparseVector& x, double scale) {
  double* w = row(label);
  for (const auto& [i, v] : x) w[i] += scale * v;
}

nlohmann::ordered_json ParameterStore::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["featurizer"] = featurizer.to_json();
  auto& lin = j["linear"];
  lin = nlohmann::ordered_json::object();
  for (const auto& [id, s] : linear) {
    nlohmann::ordered_json js;
    js["labels"] = s.labels;
    js["dim"] = s.dim;
    js["families"] = s.families;
    js["weights"] = s.weights;
    lin[id] = js;
  }
  auto& pf = j["per_foundation"];
  pf = nlohmann::ordered_json::object();
  for (const auto& [id, w] : per_foundation) pf[id] = w;
  j["scalars"] = scalars;
  j["warnings"] = warnings;
  return j;
}

ParameterStore ParameterStore::from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat)
      throw DataError("parameter store format '" + j["format"].get<std::string>() + "' is not supported");
    ParameterStore p;
    p.featurizer = Featurizer::from_json(j.at("featurizer"));
    for (const auto& [id, js] : j.at("linear").items()) {
      LinearScorer s(js.at("labels").get<std::vector<std::string>>(), js.at("dim").get<std::size_t>(),
                     js.at("families").get<unsigned>());
      s.weights = js.at("weights").get<std::vector<double>>();
      if (s.weights.size() != s.labels.size() * s.dim) throw DataError("scorer '" + id + "' has a malformed weight matrix");
      if (s.dim != p.featurizer.dimension()) throw DataError("scorer '" + id + "' does not match the featurizer");
      p.linear.emplace(id, std::move(s));
    }
    for (const auto& [id, w] : j.at("per_foundation").items())
      p.per_foundation[id] = w.get<std::array<double, kNumFoundations>>();
    p.scalars = j.at("scalars").get<std::map<std::string, double>>();
    p.warnings = j.value("warnings", std::vector<std::string>{});
    for (const auto& [id, s] : p.linear)
      for (double w : s.weights)
        if (!std::isfinite(w)) throw DataError("scorer '" + id + "' has non-finite weights");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed parameter store: ") + e.what());
  }
}

void ParameterStore::save(const std::filesystem::path& path, const nlohmann::ordered_json& provenance) const {
  auto j = to_json();
  if (!provenance.is_null()) j["provenance"] = provenance;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

ParameterStore ParameterStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open parameter store " + path.string() + " (produce it with `mframe train`)");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace mframe
