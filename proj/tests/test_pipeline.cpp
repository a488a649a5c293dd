#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mframe/error.hpp"
#include "mframe/pipeline.hpp"
#include "mframe/rule_dsl.hpp"
#include "mframe/synthetic.hpp"

using namespace mframe;
namespace fs = std::filesystem;

namespace {

std::string config_error(const nlohmann::json& tree) {
  try {
    PipelineConfig::from_json(tree);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mframe_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config: errors name the offending field") {
  CHECK(config_error({{"train", {{"epochs", 0}}}}).starts_with("train.epochs"));
  CHECK(config_error({{"train", {{"rate", "fast"}}}}).starts_with("train.rate"));
  CHECK(config_error({{"solver", {{"mode", "simplex"}}}}).starts_with("solver.mode"));
  CHECK(config_error({{"analysis", {{"graph_mincount", 3}}}}) == "analysis.graph_mincount: unknown key");
  CHECK(config_error({{"folds", 0}}).starts_with("folds"));
  CHECK(config_error(nlohmann::json::object()).empty());
}

TEST_CASE("config: overrides, round trip and hash") {
  nlohmann::json tree = nlohmann::json::object();
  apply_override(tree, "train.rate=0.25");
  apply_override(tree, "paths.output=runs/a");
  apply_override(tree, "solver.jobs=2");
  auto cfg = PipelineConfig::from_json(tree);
  CHECK(cfg.train.rate == 0.25);
  CHECK(cfg.paths.output == "runs/a");
  CHECK(cfg.params_path() == fs::path("runs/a") / "params.json");
  CHECK_THROWS_AS(apply_override(tree, "=1"), ConfigError);
  CHECK_THROWS_WITH_AS(apply_override(tree, "train.rate.x=1"), "train.rate: cannot override inside a non-object",
                       ConfigError);

  const auto again = PipelineConfig::from_json(nlohmann::json::parse(cfg.to_json().dump()));
  CHECK(again.to_json() == cfg.to_json());
  CHECK(again.hash() == cfg.hash());

  // Output location and worker count do not change results, so not the hash.
  auto moved = cfg;
  moved.paths.output = "elsewhere";
  moved.solver.jobs = 7;
  CHECK(moved.hash() == cfg.hash());
  moved.seed += 1;
  CHECK(moved.hash() != cfg.hash());
  CHECK(cfg.provenance()["config_hash"] == cfg.hash());
}

TEST_CASE("config: file paths resolve against the config file") {
  const auto dir = scratch("load");
  {
    std::ofstream out(dir / "c.json");
    out << "{\n  // comments are fine\n  \"paths\": {\"corpus\": \"corpus.jsonl\", \"output\": \"/abs/out\"}\n}\n";
  }
  const auto cfg = PipelineConfig::load(dir / "c.json", {"paths.priors=p.tsv"});
  CHECK(cfg.paths.corpus == (dir / "corpus.jsonl").lexically_normal());
  CHECK(cfg.paths.output == "/abs/out");
  CHECK(cfg.paths.priors == "p.tsv");
  CHECK_THROWS_AS(PipelineConfig::load(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("drop_rules: names, priors and the last scorer") {
  const auto program = load_program(MFRAME_DATA_DIR "/morality.rules");
  const auto no_c1 = drop_rules(program, {"c1"});
  CHECK(no_c1.rules.size() + 1 == program.rules.size());
  CHECK_FALSE(no_c1.find_rule("c1"));
  CHECK_THROWS_AS(drop_rules(program, {"c9"}), ConfigError);

  // Every scored rule of priors.rules reads a prior.
  CHECK_THROWS_AS(drop_rules(load_program(MFRAME_DATA_DIR "/priors.rules"), {"priors"}), ConfigError);
  CHECK(drop_rules(program, {"priors"}).rules.size() == program.rules.size());
  std::vector<std::string> all;
  for (const auto& r : program.rules)
    if (r.kind != RuleKind::Hard) all.push_back(r.name);
  CHECK_THROWS_AS(drop_rules(program, all), ConfigError);
}

TEST_CASE("folds: stratified and deterministic") {
  SyntheticConfig sc;
  sc.tweets = 50;
  const auto corpus = synthetic_corpus(sc);
  const auto a = assign_folds(corpus, 5, 3);
  CHECK(a == assign_folds(corpus, 5, 3));
  std::vector<int> size(5);
  for (int f : a) ++size[f];
  for (int s : size) CHECK(s == 10);
  CHECK_THROWS_AS(assign_folds(corpus, 0, 3), ConfigError);
}

TEST_CASE("commands: fold count, ablation rows and missing inputs") {
  const auto dir = scratch("cmd");
  SyntheticConfig sc;
  sc.tweets = 30;
  {
    std::ofstream out(dir / "corpus.jsonl");
    write_corpus(out, synthetic_corpus(sc));
  }
  PipelineConfig cfg;
  cfg.paths.corpus = dir / "corpus.jsonl";
  cfg.paths.program = MFRAME_DATA_DIR "/morality.rules";
  cfg.paths.output = dir / "out";
  cfg.train.epochs = 2;
  std::ostringstream log;

  cfg.folds = 1;
  CHECK_THROWS_AS(cmd_train(cfg, log), ConfigError);
  CHECK_THROWS_AS(cmd_ablate(cfg, log), ConfigError);
  cfg.folds = 2;
  CHECK_THROWS_AS(cmd_predict(cfg, log), DataError);  // nothing trained yet
  CHECK_THROWS_AS(cmd_analyze(cfg, log), DataError);

  cfg.ablation = {{"all", {}}, {"no c1", {"c1"}}};
  CHECK(cmd_ablate(cfg, log) == 0);
  std::ifstream in(cfg.paths.output / "ablation.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["variants"].size() == 2);
  CHECK(j["provenance"]["seed"] == cfg.seed);
  fs::remove_all(dir);
}
