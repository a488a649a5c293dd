#include "mframe/grounding.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "mframe/error.hpp"

namespace mframe {

std::string to_string(const AtomKey& atom) {
  std::string out = atom.predicate + "(";
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    if (i) out += ",";
    out += atom.args[i];
  }
  return out + ")";
}

std::optional<int> GroundProgram::find(const AtomKey& key) const {
  auto it = atom_index.find(key);
  if (it == atom_index.end()) return std::nullopt;
  return it->second;
}

std::size_t GroundProgram::rule_count(int template_index) const {
  return static_cast<std::size_t>(std::count_if(rules.begin(), rules.end(), [&](const GroundRule& r) {
    return r.template_index == template_index;
  }));
}

std::size_t GroundProgram::constraint_count(int template_index) const {
  return static_cast<std::size_t>(std::count(constraint_template.begin(), constraint_template.end(), template_index));
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int root(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = root(a);
    b = root(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

void unite_expr(UnionFind& uf, const LinearExpr& e) {
  for (std::size_t i = 1; i < e.terms.size(); ++i) uf.unite(e.terms[0].var, e.terms[i].var);
}

}  // namespace

void GroundProgram::partition() {
  UnionFind uf(atoms.size());
  for (const auto& p : problem.potentials) unite_expr(uf, p.expr);
  for (const auto& c : problem.constraints) unite_expr(uf, c.expr);
  for (const auto& g : problem.groups)
    for (std::size_t i = 1; i < g.size(); ++i) uf.unite(g[0], g[i]);

  std::map<int, std::size_t> slot;
  components.clear();
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    const int r = uf.root(static_cast<int>(a));
    auto [it, fresh] = slot.emplace(r, components.size());
    if (fresh) components.emplace_back();
    components[it->second].atoms.push_back(static_cast<int>(a));
  }
  auto owner = [&](const LinearExpr& e) { return slot.at(uf.root(e.terms.front().var)); };
  for (std::size_t i = 0; i < problem.potentials.size(); ++i) {
    const auto& e = problem.potentials[i].expr;
    if (e.terms.empty()) continue;
    components[owner(e)].potentials.push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < problem.constraints.size(); ++i)
    components[owner(problem.constraints[i].expr)].constraints.push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < problem.groups.size(); ++i)
    components[slot.at(uf.root(problem.groups[i].front()))].groups.push_back(static_cast<int>(i));
}

MapProblem GroundProgram::component_problem(std::size_t k, std::vector<int>* local_to_global) const {
  const auto& comp = components.at(k);
  std::map<int, int> local;
  for (int a : comp.atoms) local.emplace(a, static_cast<int>(local.size()));
  auto remap = [&](LinearExpr e) {
    for (auto& t : e.terms) t.var = local.at(t.var);
    return e;
  };
  MapProblem sub(comp.atoms.size());
  for (std::size_t i = 0; i < comp.atoms.size(); ++i)
    sub.linear[i] = problem.linear[static_cast<std::size_t>(comp.atoms[i])];
  for (int p : comp.potentials) {
    auto pot = problem.potentials[static_cast<std::size_t>(p)];
    pot.expr = remap(pot.expr);
    sub.potentials.push_back(std::move(pot));
  }
  for (int c : comp.constraints) {
    auto con = problem.constraints[static_cast<std::size_t>(c)];
    con.expr = remap(con.expr);
    sub.constraints.push_back(std::move(con));
  }
  // MF groups branch before Role groups.
  std::vector<int> order = comp.groups;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    auto is_role = [&](int g) {
      return atoms[static_cast<std::size_t>(problem.groups[static_cast<std::size_t>(g)].front())].predicate == "Role";
    };
    return !is_role(a) && is_role(b);
  });
  for (int g : order) {
    std::vector<int> members;
    for (int a : problem.groups[static_cast<std::size_t>(g)]) members.push_back(local.at(a));
    sub.groups.push_back(std::move(members));
  }
  if (local_to_global) *local_to_global = comp.atoms;
  return sub;
}

namespace {

using Binding = std::map<std::string, std::string>;

class TemplateGrounder {
 public:
  TemplateGrounder(GroundProgram& gp, const KnowledgeBase& kb, const RuleTemplate& rule, int template_index,
                   std::set<std::string> batch, std::size_t& budget)
      : gp_(gp), kb_(kb), rule_(rule), index_(template_index), batch_(std::move(batch)), budget_(budget) {
    const auto& schema = kb.schema();
    for (const auto& lit : rule.body) {
      const auto* ps = schema.find(lit.predicate);
      (ps->closed ? closed_ : open_).push_back(&lit);
      note_sorts(lit, *ps);
    }
    note_sorts(rule.head, *schema.find(rule.head.predicate));
  }

  void run() {
    Binding b;
    join(0, b, {});
  }

 private:
  GroundProgram& gp_;
  const KnowledgeBase& kb_;
  const RuleTemplate& rule_;
  int index_;
  std::set<std::string> batch_;
  std::size_t& budget_;
  std::vector<const Literal*> closed_;
  std::vector<const Literal*> open_;
  std::map<std::string, Sort> sorts_;

  static bool is_prior(const Literal& lit) { return lit.predicate == "PriorMF" || lit.predicate == "PriorRole"; }

  void note_sorts(const Literal& lit, const PredicateSchema& ps) {
    for (std::size_t i = 0; i < lit.args.size(); ++i)
      if (lit.args[i].is_variable) sorts_.emplace(lit.args[i].text, ps.sorts[i]);
  }

  void join(std::size_t at, Binding& b, std::vector<double> observed) {
    if (at == closed_.size()) {
      enumerate_labels(b, observed);
      return;
    }
    const Literal& lit = *closed_[at];
    std::vector<std::optional<std::string>> pattern;
    for (const auto& a : lit.args) {
      if (!a.is_variable) {
        pattern.emplace_back(a.text);
      } else if (auto it = b.find(a.text); it != b.end()) {
        pattern.emplace_back(it->second);
      } else {
        pattern.emplace_back(std::nullopt);
      }
    }
    kb_.match(lit.predicate, pattern, [&](const Tuple& tuple, double value) {
      if (value <= 0.0) return;
      Binding next = b;
      for (std::size_t i = 0; i < lit.args.size(); ++i) {
        if (!lit.args[i].is_variable) continue;
        auto [it, fresh] = next.emplace(lit.args[i].text, tuple[i]);
        if (!fresh && it->second != tuple[i]) return;
        if (sorts_.at(lit.args[i].text) == Sort::TweetId && !batch_.empty() && !batch_.contains(tuple[i])) return;
      }
      auto obs = observed;
      obs.push_back(value);
      join(at + 1, next, std::move(obs));
    });
  }

  void enumerate_labels(Binding& b, const std::vector<double>& observed) {
    std::string free;
    for (const auto* lit : open_)
      for (const auto& a : lit->args)
        if (a.is_variable && !b.contains(a.text)) free = a.text;
    if (free.empty())
      for (const auto& a : rule_.head.args)
        if (a.is_variable && !b.contains(a.text)) free = a.text;
    if (free.empty()) {
      emit(b, observed);
      return;
    }
    const auto& dom = label_domain(sorts_.at(free));
    if (dom.empty())
      throw ConfigError("rule '" + rule_.name + "': variable '" + free + "' is not bound by any observed literal");
    for (const auto& c : dom) {
      b[free] = c;
      enumerate_labels(b, observed);
    }
    b.erase(free);
  }

  AtomKey instantiate(const Literal& lit, const Binding& b) const {
    AtomKey key{lit.predicate, {}};
    for (const auto& a : lit.args) key.args.push_back(a.is_variable ? b.at(a.text) : a.text);
    return key;
  }

  void emit(const Binding& b, const std::vector<double>& observed) {
    GroundRule gr;
    gr.template_index = index_;
    gr.negated_head = rule_.head.negated;
    LinearExpr expr;
    // Prior atoms scale the rule weight instead of entering the hinge.
    double body_obs = 0.0;
    double prior = 1.0;
    bool has_prior = false;
    for (std::size_t i = 0; i < observed.size(); ++i) {
      if (is_prior(*closed_[i])) {
        prior *= observed[i];
        has_prior = true;
        body_obs += 1.0;
      } else {
        body_obs += observed[i];
      }
    }
    for (const auto* lit : open_) {
      const auto id = gp_.find(instantiate(*lit, b));
      if (!id) return;  // outside the open domain: observed false, clause satisfied
      gr.body_atoms.push_back(*id);
      expr.terms.push_back({*id, 1.0});
    }
    const double n = static_cast<double>(rule_.body.size());
    const auto head_key = instantiate(rule_.head, b);
    const auto head = gp_.find(head_key);
    if (head && std::find(gr.body_atoms.begin(), gr.body_atoms.end(), *head) != gr.body_atoms.end()) return;
    if (rule_.head.negated) {
      if (!head) return;
      expr.terms.push_back({*head, 1.0});
      expr.constant = body_obs - n;
    } else {
      if (head) expr.terms.push_back({*head, -1.0});
      expr.constant = body_obs - (n - 1.0);
    }
    gr.head_atom = head ? *head : -1;
    expr.normalize();
    if (expr.terms.empty() || expr.box_max() <= 0.0) return;  // satisfied for every assignment

    if (budget_ == 0)
      throw ConfigError("grounding of rule '" + rule_.name + "' exceeds the ground-rule cap");
    --budget_;

    if (rule_.kind == RuleKind::Hard) {
      gp_.problem.constraints.push_back({std::move(expr), Sense::LessEqual, rule_.name});
      gp_.constraint_template.push_back(index_);
      return;
    }
    auto& src = gr.source;
    src.template_index = index_;
    src.observed = has_prior ? prior : 1.0;
    const auto& hs = *kb_.schema().find(rule_.head.predicate);
    src.label = head_key.args.back();
    src.tweet = hs.sorts.front() == Sort::TweetId ? head_key.args.front() : "";
    src.entity = head_key.args.size() == 3 ? head_key.args[1] : "";
    double weight = 0.0;
    if (rule_.kind == RuleKind::WeightedScalar) {
      src.kind = has_prior ? WeightSource::Kind::Prior : WeightSource::Kind::Scalar;
      weight = rule_.weight * src.observed;
    } else {
      src.kind = WeightSource::Kind::Scored;
    }
    gp_.problem.potentials.push_back({std::move(expr), weight, rule_.exponent});
    gp_.rules.push_back(std::move(gr));
  }
};

void register_atom(GroundProgram& gp, AtomKey key) {
  const int id = static_cast<int>(gp.atoms.size());
  if (gp.atom_index.emplace(key, id).second) gp.atoms.push_back(std::move(key));
}

}  // namespace

void add_label_exclusivity(GroundProgram& gp) {
  std::map<Tuple, std::vector<int>> blocks;
  std::vector<Tuple> order;
  for (std::size_t a = 0; a < gp.atoms.size(); ++a) {
    const auto& atom = gp.atoms[a];
    if (atom.predicate != "MF" && atom.predicate != "Role") continue;
    Tuple key(atom.args.begin(), atom.args.end() - 1);
    key.insert(key.begin(), atom.predicate);
    auto [it, fresh] = blocks.emplace(key, std::vector<int>{});
    if (fresh) order.push_back(key);
    it->second.push_back(static_cast<int>(a));
  }
  for (const auto& key : order) {
    const auto& members = blocks.at(key);
    LinearExpr e;
    for (int a : members) e.terms.push_back({a, 1.0});
    e.constant = -1.0;
    std::string label = "one_" + key[0];
    for (std::size_t i = 1; i < key.size(); ++i) label += "_" + key[i];
    gp.problem.constraints.push_back({std::move(e), Sense::Equal, std::move(label)});
    gp.constraint_template.push_back(-1);
    gp.problem.groups.push_back(members);
  }
}

std::vector<LinearConstraint> ground_c3(const KnowledgeBase& kb, const GroundProgram& gp, bool same_ideology,
                                        bool same_topic) {
  std::vector<LinearConstraint> out;
  std::vector<const TweetInstance*> tweets;
  for (const auto& id : gp.tweets) tweets.push_back(&kb.tweet(id));
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    for (std::size_t j = i + 1; j < tweets.size(); ++j) {
      const auto& t1 = *tweets[i];
      const auto& t2 = *tweets[j];
      if (same_ideology && t1.ideology != t2.ideology) continue;
      if (same_topic && t1.topic != t2.topic) continue;
      for (const auto& e1 : t1.entities) {
        for (const auto& e2 : t2.entities) {
          if (entity_key(e1.id) != entity_key(e2.id)) continue;
          for (auto pol : {Polarity::Positive, Polarity::Negative}) {
            LinearExpr expr;
            for (auto r : kAllRoles) {
              if (role_polarity(r) != pol) continue;
              const std::string rn(name_of(r));
              const auto a = gp.find({"Role", {t1.id, e1.id, rn}});
              const auto b = gp.find({"Role", {t2.id, e2.id, rn}});
              if (!a || !b) throw DataError("polarity coupling over unknown Role atom");
              expr.terms.push_back({*a, 1.0});
              expr.terms.push_back({*b, -1.0});
            }
            out.push_back({std::move(expr), Sense::Equal,
                           "c3_" + std::string(name_of(pol)) + "_" + t1.id + "_" + t2.id + "_" + entity_key(e1.id)});
          }
        }
      }
    }
  }
  return out;
}

GroundProgram ground(const Program& program, const KnowledgeBase& kb, const GroundingOptions& options) {
  GroundProgram gp;
  std::set<std::string> batch(options.batch.begin(), options.batch.end());
  for (const auto& t : kb.corpus().tweets) {
    if (!batch.empty() && !batch.contains(t.id)) continue;
    gp.tweets.push_back(t.id);
  }
  for (const auto& id : gp.tweets) {
    const auto& t = kb.tweet(id);
    for (const auto& m : label_domain(Sort::MFLabel)) register_atom(gp, {"MF", {t.id, m}});
    for (const auto& e : t.entities)
      for (const auto& r : label_domain(Sort::RoleLabel)) register_atom(gp, {"Role", {t.id, e.id, r}});
  }
  gp.problem = MapProblem(gp.atoms.size());

  std::size_t budget = options.max_ground_rules;
  for (std::size_t i = 0; i < program.rules.size(); ++i) {
    const auto& rule = program.rules[i];
    const int idx = static_cast<int>(i);
    if (rule.kind == RuleKind::PolarityCoupling) {
      auto cons = ground_c3(kb, gp, rule.require_same_ideology, rule.require_same_topic);
      if (cons.size() > budget) throw ConfigError("grounding of rule '" + rule.name + "' exceeds the ground-rule cap");
      budget -= cons.size();
      for (auto& c : cons) {
        if (options.soft_polarity_weight) {
          // |a - b| as two hinges.
          LinearExpr neg = c.expr;
          for (auto& t : neg.terms) t.value = -t.value;
          for (auto* e : {&c.expr, &neg}) {
            GroundRule gr;
            gr.template_index = idx;
            gr.source.kind = WeightSource::Kind::Scalar;
            gr.source.template_index = idx;
            gp.problem.potentials.push_back({*e, *options.soft_polarity_weight, rule.exponent});
            gp.rules.push_back(gr);
          }
        } else {
          gp.problem.constraints.push_back(std::move(c));
          gp.constraint_template.push_back(idx);
        }
      }
      continue;
    }
    std::set<std::string> rule_batch = batch;
    TemplateGrounder(gp, kb, rule, idx, std::move(rule_batch), budget).run();
  }
  add_label_exclusivity(gp);
  gp.partition();
  return gp;
}

void apply_weights(GroundProgram& gp, const WeightFunction& weight) {
  for (std::size_t i = 0; i < gp.rules.size(); ++i) gp.problem.potentials[i].weight = weight(gp.rules[i]);
}

void fix_atoms(GroundProgram& gp, const std::vector<std::pair<int, double>>& values) {
  for (const auto& [atom, value] : values) {
    LinearExpr e;
    e.terms.push_back({atom, 1.0});
    e.constant = -value;
    gp.problem.constraints.push_back({std::move(e), Sense::Equal, "fix_" + to_string(gp.atoms[static_cast<std::size_t>(atom)])});
    gp.constraint_template.push_back(-1);
  }
}

namespace {

std::string lp_var(int atom) { return "y" + std::to_string(atom); }

void write_terms(std::ostream& out, const LinearExpr& e, double scale) {
  bool first = true;
  for (const auto& t : e.terms) {
    const double v = t.value * scale;
    out << (v < 0 ? (first ? "-" : " - ") : (first ? "" : " + ")) << std::abs(v) << " " << lp_var(t.var);
    first = false;
  }
}

}  // namespace

void write_lp(std::ostream& out, const GroundProgram& gp, const Program& program) {
  const auto& p = gp.problem;
  out.precision(17);
  out << "\\ ground program: " << gp.atoms.size() << " atoms, " << p.potentials.size() << " potentials, "
      << p.constraints.size() << " constraints\n";
  for (std::size_t a = 0; a < gp.atoms.size(); ++a) out << "\\ " << lp_var(static_cast<int>(a)) << " = " << to_string(gp.atoms[a]) << "\n";
  out << "Maximize\n obj: ";
  double constant = p.constant;
  bool any = false;
  auto emit = [&](double v, const std::string& var) {
    if (v == 0.0) return;
    out << (v < 0 ? " - " : (any ? " + " : "")) << std::abs(v) << " " << var;
    any = true;
  };
  for (std::size_t i = 0; i < p.num_vars; ++i) emit(p.linear[i], lp_var(static_cast<int>(i)));
  std::vector<std::size_t> slacks;
  for (std::size_t r = 0; r < p.potentials.size(); ++r) {
    const auto& pot = p.potentials[r];
    constant += pot.weight;
    if (pot.expr.box_min() >= 0.0 && pot.exponent == 1) {
      // Linear on the box: w * (1 - l).
      for (const auto& t : pot.expr.terms) emit(-pot.weight * t.value, lp_var(t.var));
      constant -= pot.weight * pot.expr.constant;
    } else {
      emit(-pot.weight, "s" + std::to_string(r));
      slacks.push_back(r);
    }
  }
  if (!any) out << "0 " << lp_var(0);
  out << "\n\\ objective constant: " << constant << "\nSubject To\n";
  for (std::size_t c = 0; c < p.constraints.size(); ++c) {
    const auto& con = p.constraints[c];
    const int tmpl = gp.constraint_template[c];
    out << " c" << c << ": ";
    write_terms(out, con.expr, 1.0);
    out << (con.sense == Sense::Equal ? " = " : " <= ") << -con.expr.constant;
    out << "  \\ " << (tmpl >= 0 ? program.rules[static_cast<std::size_t>(tmpl)].name : con.label) << "\n";
  }
  for (auto r : slacks) {
    const auto& pot = p.potentials[r];
    out << " h" << r << ": ";
    write_terms(out, pot.expr, 1.0);
    out << " - 1 s" << r << " <= " << -pot.expr.constant;
    if (pot.exponent == 2) out << "  \\ squared hinge; slack enters the objective quadratically";
    out << "\n";
  }
  out << "Bounds\n";
  for (auto r : slacks) out << " s" << r << " >= 0\n";
  out << "Binary\n";
  for (std::size_t a = 0; a < gp.atoms.size(); ++a) out << " " << lp_var(static_cast<int>(a)) << "\n";
  out << "End\n";
}

}  // namespace mframe
