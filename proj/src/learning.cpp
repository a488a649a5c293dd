#include "mframe/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "mframe/error.hpp"
#include "mframe/metrics.hpp"

namespace mframe {

std::string_view name_of(Algorithm a) {
  switch (a) {
    case Algorithm::LocalOnly: return "local";
    case Algorithm::PerceptronMLE: return "perceptron";
    case Algorithm::GlobalMargin: return "global";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  if (text == "local" || text == "LocalOnly") return Algorithm::LocalOnly;
  if (text == "perceptron" || text == "PerceptronMLE") return Algorithm::PerceptronMLE;
  if (text == "global" || text == "GlobalMargin") return Algorithm::GlobalMargin;
  throw ConfigError("unknown training algorithm '" + std::string(text) + "' (expected local, perceptron or global)");
}

nlohmann::ordered_json TrainReport::to_json() const {
  auto epochs = [](const std::vector<EpochLog>& logs) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& e : logs)
      a.push_back({{"epoch", e.epoch}, {"train", e.train}, {"validation", e.validation}, {"updates", e.updates}});
    return a;
  };
  nlohmann::ordered_json j;
  j["local"] = nlohmann::ordered_json::object();
  for (const auto& [id, logs] : local) j["local"][id] = epochs(logs);
  j["joint"] = epochs(joint);
  j["skipped"] = skipped;
  j["warnings"] = warnings;
  return j;
}

std::pair<Corpus, Corpus> split_validation(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) throw ConfigError("train.validation_fraction must be in [0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < corpus.tweets.size(); ++i) {
    const auto& g = corpus.tweets[i].gold_mf;
    by_class[g ? static_cast<int>(index_of(*g)) : -1].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<char> held(corpus.tweets.size(), 0);
  for (auto& [cls, idx] : by_class) {
    if (cls < 0) continue;
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(idx.size())));
    for (std::size_t j = 0; j < k && j + 1 < idx.size(); ++j) held[idx[j]] = 1;
  }
  Corpus train, val;
  for (std::size_t i = 0; i < corpus.tweets.size(); ++i) (held[i] ? val : train).tweets.push_back(corpus.tweets[i]);
  return {std::move(train), std::move(val)};
}

namespace {

std::vector<std::string> head_labels(const RuleTemplate& rule) {
  if (rule.head.predicate == "MF") return label_domain(Sort::MFLabel);
  if (rule.head.predicate == "Role") return label_domain(Sort::RoleLabel);
  throw ConfigError("rule '" + rule.name + "': scored head must be MF or Role");
}

MoralFoundation foundation_of_label(const std::string& label) {
  if (auto f = parse_foundation(label)) return *f;
  if (auto r = parse_role(label)) return role_to_mf(*r);
  throw ConfigError("label '" + label + "' has no foundation");
}

double rate_at(const TrainConfig& cfg, int epoch) { return cfg.rate / (1.0 + cfg.decay * static_cast<double>(epoch)); }

void shrink(std::vector<double>& w, double factor) {
  if (factor == 1.0) return;
  for (auto& v : w) v *= factor;
}

}  // namespace

ParameterStore init_parameters(const Program& program, const Corpus& train, const FeatureConfig& features,
                               std::optional<Lexicon> lexicon, const TrainConfig& cfg) {
  if (train.tweets.empty()) throw DataError("training corpus is empty");
  ParameterStore p;
  p.featurizer = Featurizer(features, std::move(lexicon));
  p.featurizer.fit(train);
  for (const auto& rule : program.rules) {
    switch (rule.kind) {
      case RuleKind::WeightedScored:
        if (rule.scorer_kind == ScorerKind::Linear) {
          auto [it, fresh] = p.linear.try_emplace(rule.scorer, head_labels(rule), p.featurizer.dimension(), 0U);
          it->second.families |= families_for(rule);
        } else {
          std::array<double, kNumFoundations> init;
          init.fill(cfg.per_foundation_init);
          p.per_foundation.try_emplace(rule.scorer, init);
        }
        break;
      case RuleKind::WeightedScalar:
        if (rule.weight < 0.0) throw ConfigError("rule '" + rule.name + "' has a negative weight");
        p.scalars[rule.name] = rule.weight;
        break;
      default: break;
    }
  }
  return p;
}

void train_local(const Program& program, const Corpus& corpus, ParameterStore& params, const TrainConfig& cfg,
                 TrainReport* report) {
  if (corpus.tweets.empty()) throw DataError("training corpus is empty");
  if (cfg.rate < 0.0 || cfg.epochs < 1) throw ConfigError("train: rate must be >= 0 and epochs >= 1");
  auto [train, val] = split_validation(corpus, cfg.validation_fraction, cfg.seed);

  struct Example {
    SparseVector x;
    std::size_t label;
  };
  std::map<std::string, bool> entity_level;
  for (const auto& rule : program.rules)
    if (rule.kind == RuleKind::WeightedScored && rule.scorer_kind == ScorerKind::Linear)
      entity_level[rule.scorer] = rule.head.predicate == "Role";

  for (auto& [id, scorer] : params.linear) {
    if (!entity_level.contains(id)) continue;
    const bool per_entity = entity_level[id];
    auto collect = [&](const Corpus& c) {
      std::vector<Example> out;
      for (const auto& t : c.tweets) {
        if (per_entity) {
          for (const auto& e : t.entities) {
            if (!e.gold_role) continue;
            out.push_back({params.featurizer.extract(t, &e, scorer.families),
                           scorer.label_index(std::string(name_of(*e.gold_role)))});
          }
        } else if (t.gold_mf) {
          out.push_back({params.featurizer.extract(t, nullptr, scorer.families),
                         scorer.label_index(std::string(name_of(*t.gold_mf)))});
        }
      }
      return out;
    };
    const auto examples = collect(train);
    const auto held_out = collect(val);
    if (examples.empty()) throw DataError("scorer '" + id + "': no labeled training examples");

    std::vector<char> present(scorer.labels.size(), 0);
    for (const auto& ex : examples) present[ex.label] = 1;

    auto predict_label = [&](const SparseVector& x) {
      const auto s = scorer.scores(x);
      return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
    };
    auto macro_f1 = [&](const std::vector<Example>& set) {
      std::vector<std::string> gold, pred;
      for (const auto& ex : set) {
        gold.push_back(scorer.labels[ex.label]);
        pred.push_back(scorer.labels[predict_label(ex.x)]);
      }
      return classification_report(gold, pred).macro_f1;
    };

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> best = scorer.weights;
    double best_val = -1.0;
    int since = 0;
    std::vector<EpochLog> logs;
    std::vector<double> prob(scorer.labels.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double eta = rate_at(cfg, epoch);
      std::shuffle(order.begin(), order.end(), rng);
      std::size_t updates = 0;
      for (auto i : order) {
        const auto& ex = examples[i];
        const auto s = scorer.scores(ex.x);
        const double top = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (std::size_t l = 0; l < s.size(); ++l) z += (prob[l] = std::exp(s[l] - top));
        for (std::size_t l = 0; l < s.size(); ++l) {
          const double g = prob[l] / z - (l == ex.label ? 1.0 : 0.0);
          if (g != 0.0) scorer.add(l, ex.x, -eta * g);
        }
        ++updates;
      }
      if (cfg.l2 > 0.0) shrink(scorer.weights, std::pow(1.0 - eta * cfg.l2, static_cast<double>(examples.size())));

      std::size_t correct = 0;
      for (const auto& ex : examples) correct += predict_label(ex.x) == ex.label;
      EpochLog log{epoch + 1, static_cast<double>(correct) / static_cast<double>(examples.size()), -1.0, updates};
      if (!held_out.empty()) {
        log.validation = macro_f1(held_out);
        if (log.validation > best_val) {
          best_val = log.validation;
          best = scorer.weights;
          since = 0;
        } else if (++since >= cfg.patience) {
          logs.push_back(log);
          break;
        }
      }
      logs.push_back(log);
    }
    if (!held_out.empty()) scorer.weights = best;

    for (std::size_t l = 0; l < scorer.labels.size(); ++l) {
      if (present[l]) continue;
      // Mean logit of all labels: softmax updates keep the rows summing to zero.
      std::fill(scorer.row(l), scorer.row(l) + scorer.dim, 0.0);
      const auto msg = "scorer '" + id + "': label " + scorer.labels[l] + " absent from training data, uniform score";
      params.warnings.push_back(msg);
      if (report) report->warnings.push_back(msg);
    }
    if (report) report->local[id] = std::move(logs);
  }
}

WeightModel::WeightModel(const Program& program, const KnowledgeBase& kb) : program_(program), kb_(kb) {}

const SparseVector& WeightModel::features(unsigned families, const std::string& tweet, const std::string& entity,
                                          const Featurizer& featurizer) const {
  const auto key = std::make_tuple(families, tweet, entity);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const auto& t = kb_.tweet(tweet);
  const EntityMention* e = nullptr;
  if (!entity.empty()) {
    auto it = std::find_if(t.entities.begin(), t.entities.end(), [&](const EntityMention& m) { return m.id == entity; });
    if (it == t.entities.end()) throw DataError("unknown entity '" + entity + "' in tweet '" + tweet + "'");
    e = &*it;
  }
  return cache_.emplace(key, featurizer.extract(t, e, families)).first->second;
}

double WeightModel::weight(const GroundRule& gr, const ParameterStore& params) const {
  const auto& rule = program_.rules.at(static_cast<std::size_t>(gr.template_index));
  const auto& src = gr.source;
  switch (src.kind) {
    case WeightSource::Kind::Scored: {
      if (rule.scorer_kind == ScorerKind::PerFoundation) {
        auto it = params.per_foundation.find(rule.scorer);
        if (it == params.per_foundation.end()) throw ConfigError("missing parameters for scorer '" + rule.scorer + "'");
        return it->second[index_of(foundation_of_label(src.label))];
      }
      auto it = params.linear.find(rule.scorer);
      if (it == params.linear.end()) throw ConfigError("missing parameters for scorer '" + rule.scorer + "'");
      const auto& s = it->second;
      return s.score(s.label_index(src.label), features(s.families, src.tweet, src.entity, params.featurizer));
    }
    case WeightSource::Kind::Scalar:
    case WeightSource::Kind::Prior: {
      auto it = params.scalars.find(rule.name);
      if (it == params.scalars.end()) throw ConfigError("missing weight for rule '" + rule.name + "'");
      return it->second * src.observed;
    }
  }
  return 0.0;
}

void WeightModel::apply(GroundProgram& gp, const ParameterStore& params) const {
  for (std::size_t i = 0; i < gp.rules.size(); ++i) {
    const auto& rule = program_.rules.at(static_cast<std::size_t>(gp.rules[i].template_index));
    if (rule.kind == RuleKind::PolarityCoupling) continue;  // softened coupling keeps its grounding weight
    gp.problem.potentials[i].weight = weight(gp.rules[i], params);
  }
}

void WeightModel::apply(GroundProgram& gp, const ParameterStore& params, const Component& component) const {
  for (int p : component.potentials) {
    const auto i = static_cast<std::size_t>(p);
    const auto& rule = program_.rules.at(static_cast<std::size_t>(gp.rules[i].template_index));
    if (rule.kind == RuleKind::PolarityCoupling) continue;
    gp.problem.potentials[i].weight = weight(gp.rules[i], params);
  }
}

void WeightModel::step(const GroundRule& gr, double scale, ParameterStore& params, const Scope& scope) const {
  const auto& rule = program_.rules.at(static_cast<std::size_t>(gr.template_index));
  if (rule.kind == RuleKind::PolarityCoupling) return;
  const auto& src = gr.source;
  switch (src.kind) {
    case WeightSource::Kind::Scored:
      if (rule.scorer_kind == ScorerKind::PerFoundation) {
        if (scope.per_foundation) params.per_foundation.at(rule.scorer)[index_of(foundation_of_label(src.label))] += scale;
      } else if (scope.scorers) {
        auto& s = params.linear.at(rule.scorer);
        s.add(s.label_index(src.label), features(s.families, src.tweet, src.entity, params.featurizer), scale);
      }
      return;
    case WeightSource::Kind::Scalar:
      if (scope.scalars) params.scalars.at(rule.name) += scale;
      return;
    case WeightSource::Kind::Prior:
      if (scope.priors) params.scalars.at(rule.name) += scale * src.observed;
      return;
  }
}

double score_template(const Program& program, const GroundRule& rule, const ParameterStore& params,
                      const KnowledgeBase& kb) {
  return WeightModel(program, kb).weight(rule, params);
}

std::vector<double> gold_assignment(const GroundProgram& gp, const KnowledgeBase& kb) {
  std::vector<double> y(gp.atoms.size(), 0.0);
  for (std::size_t a = 0; a < gp.atoms.size(); ++a) {
    const auto& atom = gp.atoms[a];
    const auto& t = kb.tweet(atom.args[0]);
    if (atom.predicate == "MF") {
      if (!t.gold_mf) throw DataError("tweet '" + t.id + "' has no gold foundation");
      y[a] = name_of(*t.gold_mf) == atom.args[1] ? 1.0 : 0.0;
    } else if (atom.predicate == "Role") {
      auto it = std::find_if(t.entities.begin(), t.entities.end(),
                             [&](const EntityMention& m) { return m.id == atom.args[1]; });
      if (it == t.entities.end() || !it->gold_role)
        throw DataError("entity '" + atom.args[1] + "' in tweet '" + t.id + "' has no gold role");
      y[a] = name_of(*it->gold_role) == atom.args[2] ? 1.0 : 0.0;
    }
  }
  return y;
}

namespace {

Assignment solve_problem(const MapProblem& p, const SolverConfig& cfg) {
  if (cfg.mode == SolverMode::ADMM) {
    SolverConfig serial = cfg;
    serial.execution = Execution::Serial;
    return round_assignment(map_admm(p, serial), p, cfg.feasibility_tolerance);
  }
  return map_exact(p, cfg);
}

PredictionSet decode(const GroundProgram& gp, const KnowledgeBase& kb, const std::vector<double>& y) {
  PredictionSet set;
  std::map<std::string, std::size_t> row;
  for (const auto& id : gp.tweets) {
    const auto& t = kb.tweet(id);
    row[id] = set.tweets.size();
    TweetPrediction p{t.id, t.ideology, t.topic, MoralFoundation::CareHarm, t.gold_mf, {}};
    for (const auto& e : t.entities) p.entities.push_back({e.id, e.surface, MoralRole::TargetOfCareHarm, e.gold_role});
    set.tweets.push_back(std::move(p));
  }
  for (std::size_t a = 0; a < gp.atoms.size(); ++a) {
    if (y[a] < 0.5) continue;
    const auto& atom = gp.atoms[a];
    auto& p = set.tweets[row.at(atom.args[0])];
    if (atom.predicate == "MF") {
      p.mf = *parse_foundation(atom.args[1]);
    } else if (atom.predicate == "Role") {
      for (auto& e : p.entities)
        if (e.entity == atom.args[1]) e.role = *parse_role(atom.args[2]);
    }
  }
  return set;
}

enum class JointMode { Perceptron, Margin };

void joint_train(const Program& program, const Corpus& corpus, const PriorScores* priors, ParameterStore& params,
                 const TrainConfig& cfg, const JointOptions& joint, TrainReport* report, JointMode mode) {
  if (corpus.tweets.empty()) throw DataError("training corpus is empty");
  if (cfg.rate < 0.0 || cfg.epochs < 1) throw ConfigError("train: rate must be >= 0 and epochs >= 1");
  auto [train, val] = split_validation(corpus, cfg.validation_fraction, cfg.seed);
  const KnowledgeBase kb(train, priors);
  GroundProgram gp = ground(program, kb, joint.grounding);
  const auto gold = gold_assignment(gp, kb);
  const WeightModel model(program, kb);

  std::optional<KnowledgeBase> val_kb;
  std::optional<GroundProgram> val_gp;
  std::optional<WeightModel> val_model;
  if (!val.tweets.empty()) {
    val_kb.emplace(val, priors);
    val_gp.emplace(ground(program, *val_kb, joint.grounding));
    val_model.emplace(program, *val_kb);
  }
  auto accuracy = [&](GroundProgram& g, const KnowledgeBase& k, const WeightModel& m) {
    m.apply(g, params);
    return structured_accuracy(decode(g, k, solve(g, joint.solver).values));
  };

  WeightModel::Scope scope;
  if (mode == JointMode::Perceptron) {
    scope.scorers = false;
  } else {
    scope.priors = false;
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(gp.components.size());
  std::iota(order.begin(), order.end(), 0);
  ParameterStore best = params;
  double best_val = -1.0;
  int since = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double eta = rate_at(cfg, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t updates = 0;
    for (auto k : order) {
      const auto& comp = gp.components[k];
      if (comp.potentials.empty()) continue;
      model.apply(gp, params, comp);
      std::vector<int> atoms;
      const MapProblem sub = gp.component_problem(k, &atoms);
      std::vector<double> g(atoms.size());
      for (std::size_t i = 0; i < atoms.size(); ++i) g[i] = gold[static_cast<std::size_t>(atoms[i])];

      Assignment pred;
      try {
        pred = mode == JointMode::Margin ? solve_problem(loss_augment(sub, g), joint.solver)
                                         : solve_problem(sub, joint.solver);
      } catch (const SolverError& e) {
        if (report) {
          ++report->skipped;
          report->warnings.push_back(std::string("skipped example: ") + e.what());
        }
        continue;
      }
      if (mode == JointMode::Margin) {
        const double hinge = sub.score(pred.values) + hamming(pred.values, g) - sub.score(g);
        if (hinge <= 1e-12) continue;
      }
      bool changed = false;
      for (std::size_t i = 0; i < comp.potentials.size(); ++i) {
        const auto& pot = sub.potentials[i];
        const double delta = pot.distance(pred.values) - pot.distance(g);
        if (delta == 0.0) continue;
        model.step(gp.rules[static_cast<std::size_t>(comp.potentials[i])], eta * delta, params, scope);
        changed = true;
      }
      if (changed) {
        ++updates;
        for (auto& [_, w] : params.scalars) w = std::max(w, 0.0);
        for (auto& [_, w] : params.per_foundation)
          for (auto& v : w) v = std::max(v, 0.0);
      }
    }
    if (mode == JointMode::Margin && cfg.l2 > 0.0) {
      const double factor = std::pow(1.0 - eta * cfg.l2, static_cast<double>(gp.components.size()));
      for (auto& [_, s] : params.linear) shrink(s.weights, factor);
    }

    EpochLog log{epoch + 1, accuracy(gp, kb, model), -1.0, updates};
    bool stop = updates == 0;  // fixed point: every example already agrees
    if (val_gp) {
      log.validation = accuracy(*val_gp, *val_kb, *val_model);
      if (log.validation > best_val) {
        best_val = log.validation;
        best = params;
        since = 0;
      } else if (++since >= cfg.patience) {
        stop = true;
      }
    }
    if (report) report->joint.push_back(log);
    if (stop) break;
  }
  if (val_gp) params = std::move(best);
}

}  // namespace

void train_perceptron_mle(const Program& program, const Corpus& corpus, const PriorScores* priors,
                          ParameterStore& params, const TrainConfig& cfg, const JointOptions& joint,
                          TrainReport* report) {
  joint_train(program, corpus, priors, params, cfg, joint, report, JointMode::Perceptron);
}

void train_global_margin(const Program& program, const Corpus& corpus, const PriorScores* priors,
                         ParameterStore& params, const TrainConfig& cfg, const JointOptions& joint,
                         TrainReport* report) {
  joint_train(program, corpus, priors, params, cfg, joint, report, JointMode::Margin);
}

ParameterStore train(const Program& program, const Corpus& corpus, const PriorScores* priors,
                     const FeatureConfig& features, std::optional<Lexicon> lexicon, const TrainConfig& cfg,
                     const JointOptions& joint, TrainReport* report) {
  auto params = init_parameters(program, corpus, features, std::move(lexicon), cfg);
  if (cfg.algorithm == Algorithm::LocalOnly || cfg.warm_start) train_local(program, corpus, params, cfg, report);
  if (cfg.algorithm == Algorithm::PerceptronMLE) train_perceptron_mle(program, corpus, priors, params, cfg, joint, report);
  if (cfg.algorithm == Algorithm::GlobalMargin) train_global_margin(program, corpus, priors, params, cfg, joint, report);
  return params;
}

PredictResult predict(const Program& program, const ParameterStore& params, const Corpus& corpus,
                      const PriorScores* priors, const PredictOptions& options) {
  const KnowledgeBase kb(corpus, priors);
  GroundProgram gp = ground(program, kb, options.grounding);
  WeightModel(program, kb).apply(gp, params);
  if (options.observe_gold_mf) {
    std::vector<std::pair<int, double>> fixed;
    for (std::size_t a = 0; a < gp.atoms.size(); ++a) {
      const auto& atom = gp.atoms[a];
      if (atom.predicate != "MF") continue;
      const auto& t = kb.tweet(atom.args[0]);
      if (!t.gold_mf) throw DataError("skyline prediction needs a gold foundation for '" + t.id + "'");
      fixed.emplace_back(static_cast<int>(a), name_of(*t.gold_mf) == atom.args[1] ? 1.0 : 0.0);
    }
    fix_atoms(gp, fixed);
    gp.partition();
  }
  PredictResult r;
  auto solution = solve(gp, options.solver);
  r.stats = solution.stats;
  r.predictions = decode(gp, kb, solution.values);
  return r;
}

std::vector<MoralRole> skyline_candidates(const Program& program, const Corpus& corpus, const std::string& tweet,
                                          const std::string& entity) {
  const KnowledgeBase kb(corpus);
  GroundingOptions opts;
  opts.batch = {tweet};
  GroundProgram gp = ground(program, kb, opts);
  const auto& t = kb.tweet(tweet);
  if (!t.gold_mf) throw DataError("tweet '" + tweet + "' has no gold foundation");
  std::vector<std::pair<int, double>> fixed;
  for (auto f : kAllFoundations)
    fixed.emplace_back(*gp.find({"MF", {tweet, std::string(name_of(f))}}), f == *t.gold_mf ? 1.0 : 0.0);
  std::vector<MoralRole> out;
  for (auto r : kAllRoles) {
    const auto atom = gp.find({"Role", {tweet, entity, std::string(name_of(r))}});
    if (!atom) throw DataError("unknown entity '" + entity + "' in tweet '" + tweet + "'");
    GroundProgram probe = gp;
    auto with = fixed;
    with.emplace_back(*atom, 1.0);
    fix_atoms(probe, with);
    if (find_feasible(probe.problem)) out.push_back(r);
  }
  return out;
}

double structured_accuracy(const PredictionSet& predictions) {
  std::size_t total = 0, correct = 0;
  for (const auto& t : predictions.tweets) {
    if (!t.gold) continue;
    ++total;
    bool ok = t.mf == *t.gold;
    for (const auto& e : t.entities) ok = ok && e.gold && e.role == *e.gold;
    correct += ok;
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

}  // namespace mframe
