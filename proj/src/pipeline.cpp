#include "mframe/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "mframe/error.hpp"
#include "mframe/metrics.hpp"
#include "mframe/text.hpp"

namespace mframe {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

#ifndef MFRAME_VERSION
#define MFRAME_VERSION "dev"
#endif

// ---- configuration

std::vector<AblationVariant> PipelineConfig::default_ablation() {
  return {{"All rules", {"c1", "c2", "c3"}}, {"+c1", {"c2", "c3"}}, {"+c1+c3", {"c2"}}, {"+All constr", {}}};
}

namespace {

std::string_view field_name(LabelField f) {
  switch (f) {
    case LabelField::MoralFoundation: return "mf";
    case LabelField::Ideology: return "ideology";
    case LabelField::Topic: return "topic";
  }
  return "?";
}

LabelField parse_field(const std::string& s, const std::string& path) {
  if (s == "mf") return LabelField::MoralFoundation;
  if (s == "ideology") return LabelField::Ideology;
  if (s == "topic") return LabelField::Topic;
  throw ConfigError(path + ": expected mf, ideology or topic, got '" + s + "'");
}

// Walks one JSON object, checking keys and types and remembering the path.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError(at(key) + ": expected true or false");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) throw ConfigError(at(key) + ": expected a number");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_float() || it->get<double>() < 0) throw ConfigError(at(key) + ": expected a nonnegative integer");
        } else if constexpr (std::is_integral_v<T>) {
          if (it->is_number_float()) throw ConfigError(at(key) + ": expected an integer");
        }
      } else if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, fs::path>) {
        if (!it->is_string()) throw ConfigError(at(key) + ": expected a string");
      }
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(at(key) + ": " + e.what());
    }
  }

  std::optional<Section> child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return std::nullopt;
    return Section(*it, at(key));
  }

  const nlohmann::json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  void done() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.contains(k)) throw ConfigError(at(k) + ": unknown key");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;

  std::string where() const { return path_.empty() ? "config" : path_; }
};

void positive(double v, const std::string& path) {
  if (!(v > 0.0)) throw ConfigError(path + ": must be positive");
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  Section root(j, "");
  root.get("seed", c.seed);
  root.get("folds", c.folds);
  root.get("topics", c.topics);
  if (auto s = root.child("paths")) {
    s->get("corpus", c.paths.corpus);
    s->get("priors", c.paths.priors);
    s->get("lexicon", c.paths.lexicon);
    s->get("mfd", c.paths.mfd);
    s->get("aliases", c.paths.aliases);
    s->get("program", c.paths.program);
    s->get("params", c.paths.params);
    s->get("output", c.paths.output);
    s->done();
  }
  if (auto s = root.child("solver")) {
    std::string mode(name_of(c.solver.mode));
    s->get("mode", mode);
    try {
      c.solver.mode = parse_solver_mode(mode);
    } catch (const ConfigError& e) {
      throw ConfigError(s->at("mode") + ": " + e.what());
    }
    s->get("enumeration_cap", c.solver.enumeration_cap);
    s->get("feasibility_tolerance", c.solver.feasibility_tolerance);
    s->get("jobs", c.solver.jobs);
    double soft = -1.0;
    s->get("soft_polarity_weight", soft);
    if (soft >= 0.0) c.soft_polarity_weight = soft;
    if (auto a = s->child("admm")) {
      a->get("step", c.solver.admm.step);
      a->get("max_iterations", c.solver.admm.max_iterations);
      a->get("abs_tolerance", c.solver.admm.abs_tolerance);
      a->get("rel_tolerance", c.solver.admm.rel_tolerance);
      a->done();
      positive(c.solver.admm.step, a->at("step"));
    }
    s->done();
  }
  if (auto s = root.child("train")) {
    std::string alg(name_of(c.train.algorithm));
    s->get("algorithm", alg);
    try {
      c.train.algorithm = parse_algorithm(alg);
    } catch (const ConfigError& e) {
      throw ConfigError(s->at("algorithm") + ": " + e.what());
    }
    s->get("rate", c.train.rate);
    s->get("decay", c.train.decay);
    s->get("epochs", c.train.epochs);
    s->get("patience", c.train.patience);
    s->get("l2", c.train.l2);
    s->get("validation_fraction", c.train.validation_fraction);
    s->get("per_foundation_init", c.train.per_foundation_init);
    s->get("warm_start", c.train.warm_start);
    s->done();
    if (c.train.rate < 0.0) throw ConfigError(s->at("rate") + ": must be >= 0");
    if (c.train.epochs < 1) throw ConfigError(s->at("epochs") + ": must be >= 1");
    if (c.train.validation_fraction < 0.0 || c.train.validation_fraction >= 1.0)
      throw ConfigError(s->at("validation_fraction") + ": must be in [0, 1)");
  }
  if (auto s = root.child("features")) {
    s->get("text", c.features.text);
    s->get("entity", c.features.entity);
    s->get("lexicon", c.features.lexicon);
    s->get("ideology", c.features.ideology);
    s->get("topic", c.features.topic);
    s->get("min_count", c.features.min_count);
    s->done();
  }
  if (auto s = root.child("lexicon")) {
    std::string field(field_name(c.lexicon_field));
    s->get("field", field);
    c.lexicon_field = parse_field(field, s->at("field"));
    s->get("n_max", c.lexicon.n_max);
    s->get("min_count", c.lexicon.min_count);
    s->get("top_k", c.lexicon.top_k);
    s->done();
    if (c.lexicon.n_max < 1) throw ConfigError(s->at("n_max") + ": must be >= 1");
  }
  if (auto s = root.child("analysis")) {
    s->get("partisan_min_count", c.analysis.partisan_min_count);
    s->get("ngram_max", c.analysis.groups.n_max);
    s->get("top_k", c.analysis.groups.top_k);
    s->get("graph_min_count", c.analysis.graph.min_count);
    s->get("graph_targets", c.analysis.graph.targets);
    s->get("graph_positive_actors", c.analysis.graph.positive_actors);
    s->get("graph_negative_actors", c.analysis.graph.negative_actors);
    s->get("rank_min_count", c.analysis.rank.min_count);
    s->get("entities", c.analysis.entities);
    s->get("top_entities", c.analysis.top_entities);
    s->done();
  }
  if (const auto* a = root.raw("ablation")) {
    if (!a->is_array()) throw ConfigError("ablation: expected an array of variants");
    c.ablation.clear();
    for (std::size_t i = 0; i < a->size(); ++i) {
      Section v((*a)[i], "ablation[" + std::to_string(i) + "]");
      AblationVariant av;
      v.get("name", av.name);
      v.get("disable", av.disable);
      v.done();
      if (av.name.empty()) throw ConfigError(v.at("name") + ": required");
      c.ablation.push_back(std::move(av));
    }
  }
  root.done();
  if (c.folds < 1) throw ConfigError("folds: must be >= 1");
  c.train.seed = c.seed;
  return c;
}

void apply_override(nlohmann::json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key.path=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  nlohmann::json* node = &tree;
  std::stringstream parts(key);
  std::string part, walked;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i].empty()) throw ConfigError("override '" + assignment + "': empty key segment");
    // A missing section is null and becomes an object on first use.
    if (!node->is_null() && !node->is_object())
      throw ConfigError(walked + ": cannot override inside a non-object");
    walked += (i ? "." : "") + path[i];
    node = &(*node)[path[i]];
  }
  *node = std::move(value);
}

PipelineConfig PipelineConfig::load(const fs::path& path, const std::vector<std::string>& overrides) {
  nlohmann::json tree = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
      tree = nlohmann::json::parse(in, nullptr, true, true);  // comments allowed
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config " + path.string() + ": " + e.what());
    }
  }
  // Paths written in the file are relative to the file; overrides to the working directory.
  if (!path.empty() && tree.is_object() && tree.contains("paths") && tree["paths"].is_object())
    for (auto& [key, value] : tree["paths"].items())
      if (value.is_string() && !value.get<std::string>().empty() && fs::path(value.get<std::string>()).is_relative())
        value = (path.parent_path() / value.get<std::string>()).lexically_normal().string();
  for (const auto& o : overrides) apply_override(tree, o);
  return from_json(tree);
}

ojson PipelineConfig::to_json() const {
  ojson j;
  j["seed"] = seed;
  j["folds"] = folds;
  j["topics"] = topics;
  j["paths"] = {{"corpus", paths.corpus.string()}, {"priors", paths.priors.string()},
                {"lexicon", paths.lexicon.string()}, {"mfd", paths.mfd.string()},
                {"aliases", paths.aliases.string()}, {"program", paths.program.string()},
                {"params", paths.params.string()}, {"output", paths.output.string()}};
  j["solver"] = {{"mode", name_of(solver.mode)},
                 {"enumeration_cap", solver.enumeration_cap},
                 {"feasibility_tolerance", solver.feasibility_tolerance},
                 {"jobs", solver.jobs},
                 {"soft_polarity_weight", soft_polarity_weight ? ojson(*soft_polarity_weight) : ojson(nullptr)},
                 {"admm",
                  {{"step", solver.admm.step},
                   {"max_iterations", solver.admm.max_iterations},
                   {"abs_tolerance", solver.admm.abs_tolerance},
                   {"rel_tolerance", solver.admm.rel_tolerance}}}};
  j["train"] = {{"algorithm", name_of(train.algorithm)}, {"rate", train.rate},
                {"decay", train.decay},                  {"epochs", train.epochs},
                {"patience", train.patience},            {"l2", train.l2},
                {"validation_fraction", train.validation_fraction},
                {"per_foundation_init", train.per_foundation_init},
                {"warm_start", train.warm_start}};
  j["features"] = {{"text", features.text},         {"entity", features.entity}, {"lexicon", features.lexicon},
                   {"ideology", features.ideology}, {"topic", features.topic},   {"min_count", features.min_count}};
  j["lexicon"] = {{"field", field_name(lexicon_field)},
                  {"n_max", lexicon.n_max},
                  {"min_count", lexicon.min_count},
                  {"top_k", lexicon.top_k}};
  j["analysis"] = {{"partisan_min_count", analysis.partisan_min_count},
                   {"ngram_max", analysis.groups.n_max},
                   {"top_k", analysis.groups.top_k},
                   {"graph_min_count", analysis.graph.min_count},
                   {"graph_targets", analysis.graph.targets},
                   {"graph_positive_actors", analysis.graph.positive_actors},
                   {"graph_negative_actors", analysis.graph.negative_actors},
                   {"rank_min_count", analysis.rank.min_count},
                   {"entities", analysis.entities},
                   {"top_entities", analysis.top_entities}};
  j["ablation"] = ojson::array();
  for (const auto& v : ablation) j["ablation"].push_back({{"name", v.name}, {"disable", v.disable}});
  return j;
}

std::string PipelineConfig::hash() const {
  auto j = to_json();
  j["paths"].erase("output");
  j["solver"].erase("jobs");
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ojson PipelineConfig::provenance() const {
  return {{"config_hash", hash()}, {"seed", seed}, {"version", MFRAME_VERSION}};
}

fs::path PipelineConfig::params_path() const {
  return paths.params.empty() ? paths.output / "params.json" : paths.params;
}

// ---- shared plumbing

namespace {

bool reads_prior(const RuleTemplate& r) {
  return std::any_of(r.body.begin(), r.body.end(),
                     [](const Literal& l) { return l.predicate == "PriorMF" || l.predicate == "PriorRole"; });
}

bool is_scoring(const RuleTemplate& r) {
  return r.kind == RuleKind::WeightedScored || (r.kind == RuleKind::WeightedScalar && reads_prior(r));
}

struct Inputs {
  Program program;
  Corpus corpus;
  std::optional<PriorScores> priors;
  std::optional<Lexicon> lexicon;

  const PriorScores* prior_ptr() const { return priors ? &*priors : nullptr; }
};

Corpus read_corpus(const PipelineConfig& cfg) {
  if (cfg.paths.corpus.empty()) throw ConfigError("paths.corpus: required");
  CorpusOptions opts;
  opts.topics = {cfg.topics.begin(), cfg.topics.end()};
  return load_corpus(cfg.paths.corpus, opts);
}

Inputs read_inputs(const PipelineConfig& cfg, bool need_program = true) {
  Inputs in;
  if (need_program) {
    if (!fs::exists(cfg.paths.program)) throw ConfigError("paths.program: no such file " + cfg.paths.program.string());
    in.program = load_program(cfg.paths.program.string());
  }
  in.corpus = read_corpus(cfg);
  if (!cfg.paths.priors.empty()) in.priors = load_priors(cfg.paths.priors, in.corpus);
  if (!cfg.paths.lexicon.empty()) in.lexicon = Lexicon::load_tsv(cfg.paths.lexicon);
  if (!cfg.paths.mfd.empty()) {
    auto mfd = load_mfd(cfg.paths.mfd);
    in.lexicon = in.lexicon ? merge_lexicons(*in.lexicon, mfd) : mfd;
  }
  return in;
}

PredictOptions predict_options(const PipelineConfig& cfg) {
  PredictOptions o;
  o.solver = cfg.solver;
  o.grounding.soft_polarity_weight = cfg.soft_polarity_weight;
  return o;
}

JointOptions joint_options(const PipelineConfig& cfg) {
  JointOptions o;
  o.solver = cfg.solver;
  o.grounding.soft_polarity_weight = cfg.soft_polarity_weight;
  return o;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create directory " + p.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  ensure_dir(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

void write_json(const fs::path& p, const ojson& j) { open_out(p) << j.dump(2) << '\n'; }

// Text tables carry the provenance as a leading comment line.
void write_text(const fs::path& p, const PipelineConfig& cfg, const std::string& body, const char* comment = "# ") {
  open_out(p) << comment << "provenance " << cfg.provenance().dump() << '\n' << body;
}

Corpus subset(const Corpus& c, const std::vector<int>& fold, int k, bool keep) {
  Corpus out;
  for (std::size_t i = 0; i < c.tweets.size(); ++i)
    if ((fold[i] == k) == keep) out.tweets.push_back(c.tweets[i]);
  return out;
}

std::vector<std::string> names_of_foundations() {
  std::vector<std::string> v;
  for (auto f : kAllFoundations) v.emplace_back(name_of(f));
  return v;
}

std::vector<std::string> names_of_roles() {
  std::vector<std::string> v;
  for (auto r : kAllRoles) v.emplace_back(name_of(r));
  return v;
}

struct TaskReports {
  ClassificationReport mf;
  ClassificationReport role;
};

TaskReports evaluate(const PredictionSet& set) {
  std::vector<std::string> gm, pm, gr, pr;
  for (const auto& t : set.tweets) {
    if (t.gold) {
      gm.emplace_back(name_of(*t.gold));
      pm.emplace_back(name_of(t.mf));
    }
    for (const auto& e : t.entities)
      if (e.gold) {
        gr.emplace_back(name_of(*e.gold));
        pr.emplace_back(name_of(e.role));
      }
  }
  return {classification_report(gm, pm, names_of_foundations()), classification_report(gr, pr, names_of_roles())};
}

ojson summary(const ClassificationReport& r) {
  return {{"macro_f1", r.macro_f1}, {"weighted_f1", r.weighted_f1}, {"accuracy", r.accuracy}, {"total", r.total}};
}

ojson errors_json(const ErrorCounts& e) { return {{"E1", e.e1}, {"E2", e.e2}, {"E3", e.e3}}; }

bool has_gold(const PredictionSet& set) {
  return std::any_of(set.tweets.begin(), set.tweets.end(), [](const TweetPrediction& t) { return t.gold.has_value(); });
}

// Cross-validated predictions for one program: every tweet predicted by a
// model that never saw it.
struct CrossValidation {
  PredictionSet pooled;
  std::vector<ojson> folds;
  std::size_t non_converged = 0;
};

CrossValidation cross_validate(const PipelineConfig& cfg, const Program& program, const Inputs& in,
                               std::ostream& log, const std::string& tag) {
  for (const auto& t : in.corpus.tweets)
    if (!t.fully_labeled()) throw DataError("tweet '" + t.id + "' lacks gold labels; training needs a labeled corpus");
  const auto fold = assign_folds(in.corpus, cfg.folds, cfg.seed);
  CrossValidation cv;
  std::map<std::string, TweetPrediction> by_id;
  for (int k = 0; k < cfg.folds; ++k) {
    const Corpus train_set = subset(in.corpus, fold, k, false);
    const Corpus test_set = subset(in.corpus, fold, k, true);
    if (train_set.tweets.empty() || test_set.tweets.empty())
      throw DataError("fold " + std::to_string(k + 1) + " is empty; use fewer folds");
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed + static_cast<std::uint64_t>(k);
    const auto params = train(program, train_set, in.prior_ptr(), cfg.features, in.lexicon, tc, joint_options(cfg));
    auto result = predict(program, params, test_set, in.prior_ptr(), predict_options(cfg));
    const auto rep = evaluate(result.predictions);
    cv.non_converged += result.stats.non_converged;
    cv.folds.push_back({{"fold", k + 1},
                        {"tweets", test_set.tweets.size()},
                        {"mf", summary(rep.mf)},
                        {"role", summary(rep.role)},
                        {"errors", errors_json(error_taxonomy(result.predictions))},
                        {"structured_accuracy", structured_accuracy(result.predictions)},
                        {"non_converged", result.stats.non_converged}});
    log << tag << "fold " << k + 1 << "/" << cfg.folds << ": MF macro-F1 " << format_number(rep.mf.macro_f1)
        << ", Role macro-F1 " << format_number(rep.role.macro_f1) << '\n';
    for (auto& t : result.predictions.tweets) by_id.emplace(t.tweet, std::move(t));
  }
  for (const auto& t : in.corpus.tweets) cv.pooled.tweets.push_back(std::move(by_id.at(t.id)));
  return cv;
}

}  // namespace

Program drop_rules(const Program& program, const std::vector<std::string>& names) {
  Program out = program;
  for (const auto& n : names) {
    if (n == "priors") {
      std::erase_if(out.rules, reads_prior);
    } else {
      if (!program.find_rule(n)) throw ConfigError("unknown rule '" + n + "' in ablation toggle");
      std::erase_if(out.rules, [&](const RuleTemplate& r) { return r.name == n; });
    }
  }
  if (std::none_of(out.rules.begin(), out.rules.end(), is_scoring))
    throw ConfigError("ablation leaves no scored rule enabled");
  return out;
}

std::vector<int> assign_folds(const Corpus& corpus, int folds, std::uint64_t seed) {
  if (folds < 1) throw ConfigError("folds: must be >= 1");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < corpus.tweets.size(); ++i) {
    const auto& g = corpus.tweets[i].gold_mf;
    by_class[g ? static_cast<int>(index_of(*g)) : -1].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<int> fold(corpus.tweets.size(), 0);
  int next = 0;  // continue the round robin across classes so fold sizes stay balanced
  for (auto& [_, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) fold[i] = next++ % folds;
  }
  return fold;
}

// ---- commands

namespace {

void require_folds(const PipelineConfig& cfg) {
  if (cfg.folds < 2) throw ConfigError("folds: cross-validation needs at least 2 folds, got " + std::to_string(cfg.folds));
}

}  // namespace

int cmd_train(const PipelineConfig& cfg, std::ostream& log) {
  require_folds(cfg);
  const auto in = read_inputs(cfg);
  auto cv = cross_validate(cfg, in.program, in, log, "");
  const auto pooled = evaluate(cv.pooled);

  auto mean = [&](const char* task, const char* metric) {
    double s = 0.0;
    for (const auto& f : cv.folds) s += f[task][metric].get<double>();
    return s / static_cast<double>(cv.folds.size());
  };
  ojson metrics;
  metrics["provenance"] = cfg.provenance();
  metrics["algorithm"] = name_of(cfg.train.algorithm);
  metrics["folds"] = cv.folds;
  metrics["aggregate"] = {{"mf", pooled.mf.to_json()},
                          {"role", pooled.role.to_json()},
                          {"errors", errors_json(error_taxonomy(cv.pooled))},
                          {"structured_accuracy", structured_accuracy(cv.pooled)},
                          {"fold_mean",
                           {{"mf_macro_f1", mean("mf", "macro_f1")},
                            {"mf_weighted_f1", mean("mf", "weighted_f1")},
                            {"role_macro_f1", mean("role", "macro_f1")},
                            {"role_weighted_f1", mean("role", "weighted_f1")}}}};
  metrics["non_converged"] = cv.non_converged;

  TrainReport report;
  const auto params = train(in.program, in.corpus, in.prior_ptr(), cfg.features, in.lexicon, cfg.train,
                            joint_options(cfg), &report);
  ensure_dir(cfg.paths.output);
  write_json(cfg.paths.output / "metrics.json", metrics);
  auto rj = report.to_json();
  rj["provenance"] = cfg.provenance();
  write_json(cfg.paths.output / "train_report.json", rj);
  params.save(cfg.params_path(), cfg.provenance());
  {
    std::ostringstream cvp;
    write_predictions(cvp, cv.pooled);
    write_text(cfg.paths.output / "cv_predictions.jsonl", cfg, cvp.str(), "");
  }
  log << "pooled: MF macro/weighted F1 " << format_number(pooled.mf.macro_f1) << "/"
      << format_number(pooled.mf.weighted_f1) << ", Role " << format_number(pooled.role.macro_f1) << "/"
      << format_number(pooled.role.weighted_f1) << '\n';
  return cv.non_converged ? 4 : 0;
}

int cmd_predict(const PipelineConfig& cfg, std::ostream& log) {
  const auto in = read_inputs(cfg);
  const auto pp = cfg.params_path();
  if (!fs::exists(pp)) throw DataError("no parameters at " + pp.string() + "; run `mframe train` first");
  const auto params = ParameterStore::load(pp);
  auto result = predict(in.program, params, in.corpus, in.prior_ptr(), predict_options(cfg));
  ensure_dir(cfg.paths.output);
  std::ostringstream body;
  write_predictions(body, result.predictions);
  open_out(cfg.paths.output / "predictions.jsonl") << ojson{{"provenance", cfg.provenance()}}.dump() << '\n'
                                                   << body.str();
  ojson s;
  s["provenance"] = cfg.provenance();
  s["tweets"] = result.predictions.tweets.size();
  s["entities"] = result.predictions.entity_rows();
  s["components"] = result.stats.components;
  s["nodes"] = result.stats.nodes;
  s["non_converged"] = result.stats.non_converged;
  s["role_mf_violations"] = count_role_mf_violations(result.predictions);
  s["polarity_violations"] = count_polarity_violations(result.predictions);
  if (has_gold(result.predictions)) {
    const auto rep = evaluate(result.predictions);
    s["mf"] = summary(rep.mf);
    s["role"] = summary(rep.role);
    s["errors"] = errors_json(error_taxonomy(result.predictions));
  }
  write_json(cfg.paths.output / "predict_summary.json", s);
  log << "predicted " << result.predictions.tweets.size() << " tweets, " << result.predictions.entity_rows()
      << " entities\n";
  if (result.stats.non_converged) log << "warning: " << result.stats.non_converged << " components did not converge\n";
  return result.stats.non_converged ? 4 : 0;
}

int cmd_ablate(const PipelineConfig& cfg, std::ostream& log) {
  require_folds(cfg);
  const auto in = read_inputs(cfg);
  if (cfg.ablation.empty()) throw ConfigError("ablation: no variants requested");
  std::vector<Program> programs;
  for (std::size_t i = 0; i < cfg.ablation.size(); ++i) {
    try {
      programs.push_back(drop_rules(in.program, cfg.ablation[i].disable));
    } catch (const ConfigError& e) {
      throw ConfigError("ablation[" + std::to_string(i) + "] '" + cfg.ablation[i].name + "': " + e.what());
    }
  }
  Table table{{"variant", "role_weighted_f1", "mf_weighted_f1", "E1", "E2", "E3"}, {}};
  ojson rows = ojson::array();
  std::size_t non_converged = 0;
  for (std::size_t i = 0; i < programs.size(); ++i) {
    const auto& v = cfg.ablation[i];
    auto cv = cross_validate(cfg, programs[i], in, log, v.name + ": ");
    non_converged += cv.non_converged;
    const auto rep = evaluate(cv.pooled);
    const auto err = error_taxonomy(cv.pooled);
    table.rows.push_back({v.name, format_number(rep.role.weighted_f1), format_number(rep.mf.weighted_f1),
                          std::to_string(err.e1), std::to_string(err.e2), std::to_string(err.e3)});
    rows.push_back({{"variant", v.name},
                    {"disabled", v.disable},
                    {"role_weighted_f1", rep.role.weighted_f1},
                    {"mf_weighted_f1", rep.mf.weighted_f1},
                    {"errors", errors_json(err)},
                    {"non_converged", cv.non_converged}});
  }
  ensure_dir(cfg.paths.output);
  write_text(cfg.paths.output / "ablation.tsv", cfg, table.to_tsv());
  write_text(cfg.paths.output / "ablation.md", cfg, table.to_markdown(), "<!-- ");
  write_json(cfg.paths.output / "ablation.json", {{"provenance", cfg.provenance()}, {"variants", rows}});
  log << table.to_markdown();
  return non_converged ? 4 : 0;
}

int cmd_analyze(const PipelineConfig& cfg, std::ostream& log) {
  const auto pred_path = cfg.paths.output / "predictions.jsonl";
  if (!fs::exists(pred_path)) throw DataError("no predictions at " + pred_path.string() + "; run `mframe predict` first");
  auto set = load_predictions(pred_path);
  if (!cfg.paths.aliases.empty()) set = apply_aliases(set, EntityAliasMap::load(cfg.paths.aliases));
  const auto dir = cfg.paths.output / "analysis";
  ensure_dir(dir);

  const auto partisan = partisanship_table(set, cfg.analysis.partisan_min_count);
  write_text(dir / "partisanship.tsv", cfg, to_table(partisan).to_tsv());
  write_text(dir / "partisanship.md", cfg, to_table(partisan).to_markdown(), "<!-- ");
  write_text(dir / "top_entities.tsv", cfg, to_table(top_entities_per_role(set, cfg.analysis.groups)).to_tsv());

  const auto freq = entity_frequencies(set);
  Table ft{{"entity", "count"}, {}};
  for (const auto& [e, n] : freq) ft.rows.push_back({e, std::to_string(n)});
  write_text(dir / "entity_frequencies.tsv", cfg, ft.to_tsv());

  ojson graphs = ojson::array();
  for (auto f : kAllFoundations)
    for (auto ideo : {Ideology::Left, Ideology::Right}) {
      const auto g = build_relation_graph(set, f, ideo, cfg.analysis.graph);
      const std::string stem = "graph_" + std::string(name_of(f)) + "_" + std::string(name_of(ideo));
      write_text(dir / (stem + ".dot"), cfg, g.to_dot(), "// ");
      auto gj = g.to_json();
      gj["provenance"] = cfg.provenance();
      write_json(dir / (stem + ".json"), gj);
      graphs.push_back({{"graph", stem}, {"nodes", g.nodes.size()}, {"edges", g.edges.size()}, {"underfull", g.underfull}});
    }

  std::vector<std::string> targets = cfg.analysis.entities;
  if (targets.empty())
    for (std::size_t i = 0; i < freq.size() && i < cfg.analysis.top_entities; ++i) targets.push_back(freq[i].first);
  Table ranks{{"entity", "ideology", "role", "polarity", "count", "rank"}, {}};
  Table dist{{"entity", "ideology", "role", "fraction"}, {}};
  for (const auto& e : targets) {
    const auto t = polarity_rank_table(polarity_rank(set, e, cfg.analysis.rank), e);
    ranks.rows.insert(ranks.rows.end(), t.rows.begin(), t.rows.end());
    for (auto ideo : {Ideology::Left, Ideology::Right})
      for (const auto& row : role_distribution_table(role_distribution(set, e, ideo)).rows)
        dist.rows.push_back({case_fold(e), std::string(name_of(ideo)), row[0], row[1]});
  }
  write_text(dir / "polarity_rank.csv", cfg, ranks.to_csv());
  write_text(dir / "role_distribution.tsv", cfg, dist.to_tsv());

  ojson s;
  s["provenance"] = cfg.provenance();
  s["tweets"] = set.tweets.size();
  s["entities"] = set.entity_rows();
  s["graphs"] = graphs;
  if (has_gold(set)) s["errors"] = errors_json(error_taxonomy(set));
  write_json(dir / "summary.json", s);
  log << "analysis written to " << dir.string() << '\n';
  return 0;
}

int cmd_lexicon(const PipelineConfig& cfg, std::ostream& log) {
  const auto corpus = read_corpus(cfg);
  Lexicon lex = build_pmi_lexicon(corpus, cfg.lexicon_field, cfg.lexicon);
  if (!cfg.paths.mfd.empty()) lex = merge_lexicons(lex, load_mfd(cfg.paths.mfd));
  ensure_dir(cfg.paths.output);
  std::ostringstream body;
  lex.write_tsv(body);
  write_text(cfg.paths.output / "lexicon.tsv", cfg, body.str());

  ojson s;
  s["provenance"] = cfg.provenance();
  s["entries"] = lex.size();
  s["normalization"] = "pmi / max pmi within label, over entries with pmi > 0 and count >= min_count";
  if (cfg.lexicon_field == LabelField::MoralFoundation) {
    const auto r = lexicon_baseline_predict(lex, corpus.tweets, cfg.seed);
    Table t{{"tweet", "predicted", "gold"}, {}};
    std::vector<std::string> gold, pred;
    for (std::size_t i = 0; i < corpus.tweets.size(); ++i) {
      const auto& tw = corpus.tweets[i];
      t.rows.push_back({tw.id, std::string(name_of(r.labels[i])), tw.gold_mf ? std::string(name_of(*tw.gold_mf)) : ""});
      if (tw.gold_mf) {
        gold.emplace_back(name_of(*tw.gold_mf));
        pred.emplace_back(name_of(r.labels[i]));
      }
    }
    write_text(cfg.paths.output / "baseline.tsv", cfg, t.to_tsv());
    s["baseline"] = {{"tweets", r.labels.size()},
                     {"random_fallbacks", r.random_fallbacks},
                     {"fallback_fraction", r.fallback_fraction()},
                     {"ties", r.ties}};
    if (!gold.empty()) s["baseline"]["mf"] = summary(classification_report(gold, pred, names_of_foundations()));
    log << "baseline fallback fraction " << format_number(r.fallback_fraction()) << '\n';
  }
  write_json(cfg.paths.output / "lexicon_summary.json", s);
  log << "lexicon: " << lex.size() << " entries\n";
  return 0;
}

int cmd_ground(const PipelineConfig& cfg, const fs::path& dump, std::ostream& log) {
  const auto in = read_inputs(cfg);
  const KnowledgeBase kb(in.corpus, in.prior_ptr());
  GroundingOptions go;
  go.soft_polarity_weight = cfg.soft_polarity_weight;
  GroundProgram gp = ground(in.program, kb, go);
  const auto pp = cfg.params_path();
  if (fs::exists(pp)) {
    WeightModel(in.program, kb).apply(gp, ParameterStore::load(pp));
  } else {
    // Seed weights only; scored templates stay at 0 until trained.
    apply_weights(gp, [&](const GroundRule& r) {
      const auto& t = in.program.rules[static_cast<std::size_t>(r.template_index)];
      return t.kind == RuleKind::WeightedScored ? 0.0 : t.weight * r.source.observed;
    });
    log << "note: no parameters at " << pp.string() << ", scored rules have weight 0\n";
  }
  const fs::path target = dump.empty() ? cfg.paths.output / "ground.lp" : dump;
  {
    auto out = open_out(target);
    out << "\\ provenance " << cfg.provenance().dump() << '\n';
    write_lp(out, gp, in.program);
  }
  ojson s;
  s["provenance"] = cfg.provenance();
  s["atoms"] = gp.atoms.size();
  s["potentials"] = gp.problem.potentials.size();
  s["constraints"] = gp.problem.constraints.size();
  s["components"] = gp.components.size();
  s["rules"] = ojson::object();
  for (std::size_t i = 0; i < in.program.rules.size(); ++i)
    s["rules"][in.program.rules[i].name] = {{"potentials", gp.rule_count(static_cast<int>(i))},
                                            {"constraints", gp.constraint_count(static_cast<int>(i))}};
  write_json(target.parent_path().empty() ? fs::path("ground_summary.json") : target.parent_path() / "ground_summary.json", s);
  log << "grounded " << gp.atoms.size() << " atoms, " << gp.problem.potentials.size() << " potentials, "
      << gp.problem.constraints.size() << " constraints into " << target.string() << '\n';
  return 0;
}

}  // namespace mframe
