// mframe: train, predict, ablate, analyze, lexicon and ground from one config.

#include <iostream>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "mframe/error.hpp"
#include "mframe/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kData = 3, kSolver = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint moral foundation and moral role inference"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MFRAME_VERSION);

  std::string config_path, output, corpus;
  std::vector<std::string> overrides;
  long long seed = -1;
  int jobs = 0;
  app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override a config field, e.g. --set train.rate=0.05")->take_all();
  app.add_option("-o,--output", output, "output directory (paths.output)");
  app.add_option("--corpus", corpus, "corpus JSONL (paths.corpus)");
  app.add_option("--seed", seed, "random seed");
  app.add_option("-j,--jobs", jobs, "worker threads for inference (0: all cores)")->check(CLI::NonNegativeNumber);

  auto* train = app.add_subcommand("train", "cross-validate, then fit on the whole corpus");
  auto* predict = app.add_subcommand("predict", "MAP predictions with trained parameters");
  auto* ablate = app.add_subcommand("ablate", "cross-validated metrics per rule/constraint toggle");
  auto* analyze = app.add_subcommand("analyze", "partisanship, entity tables, graphs from predictions");
  auto* lexicon = app.add_subcommand("lexicon", "PMI lexicon and the lexicon-matching baseline");
  auto* ground = app.add_subcommand("ground", "ground the program and report its size");
  std::string dump;
  ground->add_option("--dump", dump, "write the ground program in LP format to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!output.empty()) overrides.push_back("paths.output=\"" + output + "\"");
    if (!corpus.empty()) overrides.push_back("paths.corpus=\"" + corpus + "\"");
    if (seed >= 0) overrides.push_back("seed=" + std::to_string(seed));
    if (jobs > 0) overrides.push_back("solver.jobs=" + std::to_string(jobs));
    const auto cfg = mframe::PipelineConfig::load(config_path, overrides);
    if (cfg.solver.jobs > 0) omp_set_num_threads(cfg.solver.jobs);

    if (*train) return mframe::cmd_train(cfg, std::cerr);
    if (*predict) return mframe::cmd_predict(cfg, std::cerr);
    if (*ablate) return mframe::cmd_ablate(cfg, std::cerr);
    if (*analyze) return mframe::cmd_analyze(cfg, std::cerr);
    if (*lexicon) return mframe::cmd_lexicon(cfg, std::cerr);
    if (*ground) return mframe::cmd_ground(cfg, dump, std::cerr);
  } catch (const mframe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const mframe::ParseError& e) {
    std::cerr << "rule program: " << e.what() << '\n';
    return kConfig;
  } catch (const mframe::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const mframe::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
