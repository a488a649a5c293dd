// Writes a synthetic labeled corpus (JSONL) and optional prior scores (TSV).

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mframe/error.hpp"
#include "mframe/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic moral-frame corpora with controllable evidence"};
  mframe::SyntheticConfig sc;
  mframe::SyntheticPriorConfig pc;
  std::string corpus_path, priors_path;
  app.add_option("corpus", corpus_path, "output corpus JSONL")->required();
  app.add_option("--priors", priors_path, "also write prior scores to this TSV");
  app.add_option("--tweets", sc.tweets)->capture_default_str();
  app.add_option("--min-entities", sc.min_entities)->capture_default_str();
  app.add_option("--max-entities", sc.max_entities)->capture_default_str();
  app.add_option("--mf-signal", sc.mf_signal, "probability the foundation marker is correct")->capture_default_str();
  app.add_option("--role-signal", sc.role_signal, "probability a role marker is correct")->capture_default_str();
  app.add_option("--distractors", sc.distractors, "role markers outside entity spans")->capture_default_str();
  app.add_option("--names", sc.names)->capture_default_str();
  app.add_option("--id-prefix", sc.id_prefix)->capture_default_str();
  app.add_option("--seed", sc.seed)->capture_default_str();
  app.add_option("--prior-gold-mf", pc.gold_mf)->capture_default_str();
  app.add_option("--prior-decoy-mf", pc.decoy_mf)->capture_default_str();
  app.add_option("--prior-gold-role", pc.gold_role)->capture_default_str();
  app.add_option("--prior-decoy-role", pc.decoy_role)->capture_default_str();
  app.add_option("--prior-noise", pc.noise)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto corpus = mframe::synthetic_corpus(sc);
    std::ofstream out(corpus_path);
    if (!out) throw mframe::DataError("cannot write " + corpus_path);
    mframe::write_corpus(out, corpus);
    if (!priors_path.empty()) {
      pc.seed = sc.seed;
      std::ofstream pout(priors_path);
      if (!pout) throw mframe::DataError("cannot write " + priors_path);
      mframe::write_priors(pout, mframe::synthetic_priors(corpus, pc));
    }
  } catch (const mframe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mframe::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
