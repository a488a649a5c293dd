#include "doctest.h"
#include "mframe/error.hpp"
#include "mframe/learning.hpp"
#include "mframe/synthetic.hpp"
#include "support.hpp"

using namespace mframe;

namespace {

Program without(Program p, const std::string& name) {
  std::erase_if(p.rules, [&](const RuleTemplate& r) { return r.name == name; });
  return p;
}

Program morality() { return load_program(MFRAME_DATA_DIR "/morality.rules"); }
Program priors_only() { return load_program(MFRAME_DATA_DIR "/priors.rules"); }

// One tweet, one entity. The prior favours a decoy foundation (0.9) over gold
// (0.3); the gold role carries 0.5. With both scalars at 1 the decoy wins
// (0.9 against 0.3 + 0.5) and one perceptron step moves
//   prior_mf   by rate * (0.3 - 0.9)
//   prior_role by rate * 0.5
Corpus single() {
  Corpus c;
  c.tweets.push_back(testkit::tweet("t", "police protect kids", {{"police", MoralRole::EntityProvidingCare}},
                                    MoralFoundation::CareHarm));
  return c;
}

PriorScores misleading() {
  PriorScores p;
  p.mf[{"t", MoralFoundation::CareHarm}] = 0.3;
  p.mf[{"t", MoralFoundation::LoyaltyBetrayal}] = 0.9;
  p.role[{"t", "police", MoralRole::EntityProvidingCare}] = 0.5;
  return p;
}

TrainConfig joint_config(Algorithm a, double rate) {
  TrainConfig cfg;
  cfg.algorithm = a;
  cfg.rate = rate;
  cfg.validation_fraction = 0.0;
  cfg.warm_start = false;
  cfg.epochs = 10;
  return cfg;
}

}  // namespace

TEST_CASE("local: separable markers are learned exactly") {
  SyntheticConfig sc;
  sc.tweets = 150;
  const auto corpus = synthetic_corpus(sc);
  TrainConfig cfg;
  cfg.validation_fraction = 0.0;
  cfg.epochs = 20;
  TrainReport report;
  const auto program = without(morality(), "c3");
  const auto params = train(program, corpus, nullptr, FeatureConfig{}, std::nullopt, cfg, {}, &report);
  for (const auto& id : {"mf_text", "role_text"}) {
    REQUIRE(report.local.contains(id));
    CHECK(report.local.at(id).back().train == 1.0);
  }
  const auto r = predict(program, params, corpus, nullptr);
  CHECK(structured_accuracy(r.predictions) == 1.0);
  CHECK(count_role_mf_violations(r.predictions) == 0);
}

TEST_CASE("local: one example is predicted back, absent labels warn") {
  Corpus c = single();
  const auto program = without(without(morality(), "c3"), "c2");
  TrainConfig cfg;
  cfg.validation_fraction = 0.0;
  cfg.epochs = 5;
  TrainReport report;
  const auto params = train(program, c, nullptr, FeatureConfig{}, std::nullopt, cfg, {}, &report);
  const auto r = predict(program, params, c, nullptr);
  CHECK(r.predictions.tweets[0].mf == MoralFoundation::CareHarm);
  CHECK(r.predictions.tweets[0].entities[0].role == MoralRole::EntityProvidingCare);
  CHECK_FALSE(report.warnings.empty());
}

TEST_CASE("local: every feature family off is a configuration error") {
  FeatureConfig off;
  off.text = off.entity = off.lexicon = off.ideology = off.topic = false;
  CHECK_THROWS_AS(init_parameters(morality(), single(), off, std::nullopt, TrainConfig{}), ConfigError);
}

TEST_CASE("score_template: bias, prior scaling and identical groundings") {
  Corpus c;
  c.tweets.push_back(testkit::tweet("a", "same words", {}, MoralFoundation::CareHarm));
  c.tweets.push_back(testkit::tweet("b", "same words", {}, MoralFoundation::CareHarm));
  const auto program = without(morality(), "c3");
  auto params = init_parameters(program, c, FeatureConfig{}, std::nullopt, TrainConfig{});
  auto& s = params.linear.at("mf_text");
  s.row(s.label_index("FairnessCheating"))[0] = 0.25;  // bias only

  const KnowledgeBase kb(c);
  const auto gp = ground(program, kb);
  std::map<std::string, double> seen;
  for (const auto& gr : gp.rules) {
    const auto& rule = program.rules[static_cast<std::size_t>(gr.template_index)];
    if (rule.name != "r1") continue;
    const double w = score_template(program, gr, params, kb);
    CHECK(w == (gr.source.label == "FairnessCheating" ? 0.25 : 0.0));
    if (auto it = seen.find(gr.source.label); it != seen.end()) CHECK(it->second == w);
    seen[gr.source.label] = w;
  }
  CHECK(seen.size() == 5);

  // Prior-scaled template: scalar 1 times an observed 0.7.
  const auto pp = priors_only();
  PriorScores priors;
  priors.mf[{"a", MoralFoundation::CareHarm}] = 0.7;
  const KnowledgeBase pkb(c, &priors);
  const auto pgp = ground(pp, pkb);
  auto pparams = init_parameters(pp, c, FeatureConfig{}, std::nullopt, TrainConfig{});
  int found = 0;
  for (const auto& gr : pgp.rules)
    if (gr.source.kind == WeightSource::Kind::Prior) {
      CHECK(score_template(pp, gr, pparams, pkb) == doctest::Approx(0.7));
      ++found;
    }
  CHECK(found == 1);
}

TEST_CASE("perceptron: one hand-traced update, then a fixed point") {
  const auto c = single();
  const auto priors = misleading();
  const auto program = priors_only();
  auto params = init_parameters(program, c, FeatureConfig{}, std::nullopt, TrainConfig{});
  REQUIRE(params.scalars.at("prior_mf") == 1.0);

  // The decoy is the MAP state before training.
  CHECK(predict(program, params, c, &priors).predictions.tweets[0].mf == MoralFoundation::LoyaltyBetrayal);

  TrainReport report;
  train_perceptron_mle(program, c, &priors, params, joint_config(Algorithm::PerceptronMLE, 0.5), {}, &report);
  CHECK(params.scalars.at("prior_mf") == doctest::Approx(1.0 - 0.5 * 0.6));
  CHECK(params.scalars.at("prior_role") == doctest::Approx(1.0 + 0.5 * 0.5));
  // 0.7 * 0.9 = 0.63 now loses to 0.7 * 0.3 + 1.25 * 0.5 = 0.835.
  REQUIRE(report.joint.size() == 2);
  CHECK(report.joint[0].updates == 1);
  CHECK(report.joint[1].updates == 0);
  CHECK(report.joint[1].train == 1.0);
  CHECK(predict(program, params, c, &priors).predictions.tweets[0].mf == MoralFoundation::CareHarm);
}

TEST_CASE("perceptron: projection to nonnegative weights and zero rate") {
  const auto c = single();
  const auto priors = misleading();
  const auto program = priors_only();
  {
    auto params = init_parameters(program, c, FeatureConfig{}, std::nullopt, TrainConfig{});
    auto cfg = joint_config(Algorithm::PerceptronMLE, 2.0);
    cfg.epochs = 1;
    train_perceptron_mle(program, c, &priors, params, cfg);
    CHECK(params.scalars.at("prior_mf") == 0.0);  // 1 - 1.2 projected
    CHECK(params.scalars.at("prior_role") == doctest::Approx(2.0));
  }
  {
    auto params = init_parameters(program, c, FeatureConfig{}, std::nullopt, TrainConfig{});
    const auto before = params.to_json();
    auto cfg = joint_config(Algorithm::PerceptronMLE, 0.0);
    cfg.epochs = 3;
    train_perceptron_mle(program, c, &priors, params, cfg);
    CHECK(params.to_json() == before);
  }
}

TEST_CASE("perceptron: gold-peaked priors need no update") {
  SyntheticConfig sc;
  sc.tweets = 30;
  const auto c = synthetic_corpus(sc);
  const auto priors = synthetic_priors(c, {});
  const auto program = priors_only();
  auto params = init_parameters(program, c, FeatureConfig{}, std::nullopt, TrainConfig{});
  const auto before = params.to_json();
  TrainReport report;
  train_perceptron_mle(program, c, &priors, params, joint_config(Algorithm::PerceptronMLE, 0.5), {}, &report);
  REQUIRE(report.joint.size() == 1);
  CHECK(report.joint[0].updates == 0);
  CHECK(report.joint[0].train == 1.0);
  CHECK(params.to_json() == before);
}

TEST_CASE("global: a zero hinge leaves parameters unchanged") {
  // Prior weight 10 beats the Hamming margin of any alternative.
  const auto program = compile_program(R"(
    pred PriorMF/2 closed
    pred PriorRole/3 closed
    pred Ent/2 closed
    pred MF/2 open
    pred Role/3 open
    prior_mf: weight = 10.0: PriorMF(t, m) => MF(t, m).
    prior_role: weight = 10.0: PriorRole(t, e, r) => Role(t, e, r).
    c1: hard: Ent(t, e) & Role(t, e, r) & MF_Role(m, r) => MF(t, m).
  )");
  SyntheticConfig sc;
  sc.tweets = 20;
  const auto c = synthetic_corpus(sc);
  const auto priors = synthetic_priors(c, {});
  auto params = init_parameters(program, c, FeatureConfig{}, std::nullopt, TrainConfig{});
  const auto before = params.to_json();
  TrainReport report;
  train_global_margin(program, c, &priors, params, joint_config(Algorithm::GlobalMargin, 0.5), {}, &report);
  REQUIRE(report.joint.size() == 1);
  CHECK(report.joint[0].updates == 0);
  CHECK(params.to_json() == before);
}

TEST_CASE("global: separable corpus from scratch") {
  SyntheticConfig sc;
  sc.tweets = 60;
  sc.seed = 3;
  const auto c = synthetic_corpus(sc);
  const auto program = without(morality(), "c3");
  auto cfg = joint_config(Algorithm::GlobalMargin, 0.1);
  cfg.epochs = 10;
  TrainReport report;
  const auto params = train(program, c, nullptr, FeatureConfig{}, std::nullopt, cfg, {}, &report);
  REQUIRE_FALSE(report.joint.empty());
  CHECK(report.joint.back().train == 1.0);
  CHECK(structured_accuracy(predict(program, params, c, nullptr).predictions) == 1.0);
}

TEST_CASE("predict: hard constraints hold and skyline candidates follow the gold foundation") {
  SyntheticConfig sc;
  sc.tweets = 40;
  sc.mf_signal = 0.5;
  sc.role_signal = 0.5;
  const auto c = synthetic_corpus(sc);
  const auto program = morality();
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto params = train(program, c, nullptr, FeatureConfig{}, std::nullopt, cfg);
  const auto r = predict(program, params, c, nullptr);
  CHECK(count_role_mf_violations(r.predictions) == 0);
  CHECK(count_polarity_violations(r.predictions) == 0);

  PredictOptions sky;
  sky.observe_gold_mf = true;
  const auto s = predict(program, params, c, nullptr, sky);
  for (const auto& t : s.predictions.tweets) {
    CHECK(t.mf == *t.gold);
    for (const auto& e : t.entities) CHECK(role_to_mf(e.role) == *t.gold);
  }

  const auto& t = c.tweets[0];
  const auto cand = skyline_candidates(program, c, t.id, t.entities[0].id);
  CHECK(cand.size() == roles_of(*t.gold_mf).size());
  for (auto role : cand) CHECK(role_to_mf(role) == *t.gold_mf);
  CHECK_THROWS_AS(skyline_candidates(program, c, t.id, "nobody"), DataError);
}

TEST_CASE("learning: argument errors") {
  CHECK(parse_algorithm("global") == Algorithm::GlobalMargin);
  CHECK_THROWS_AS(parse_algorithm("adam"), ConfigError);
  CHECK_THROWS_AS(split_validation(single(), 1.0, 1), ConfigError);
  Corpus nogold;
  nogold.tweets.push_back(testkit::tweet("u", "x"));
  const KnowledgeBase kb(nogold);
  const auto gp = ground(priors_only(), kb);
  CHECK_THROWS_AS(gold_assignment(gp, kb), DataError);
}

TEST_CASE("split: stratified and keeps each class in training") {
  SyntheticConfig sc;
  sc.tweets = 100;
  const auto c = synthetic_corpus(sc);
  const auto [train, val] = split_validation(c, 0.2, 5);
  CHECK(train.tweets.size() + val.tweets.size() == 100);
  std::array<int, 5> all{}, held{};
  for (const auto& t : c.tweets) ++all[index_of(*t.gold_mf)];
  for (const auto& t : val.tweets) ++held[index_of(*t.gold_mf)];
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(held[f] == static_cast<int>(0.2 * all[f]));
    CHECK(held[f] < all[f]);
  }
}
