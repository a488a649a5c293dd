#include "mframe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "mframe/error.hpp"
#include "mframe/text.hpp"

namespace mframe {

// ---- tables

std::string format_number(double value, int digits) {
  if (value == 0.0) value = 0.0;  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos) return std::string(buf + (s[0] == '-' ? 1 : 0));
  return s;
}

namespace {

std::string join_row(const std::vector<std::string>& cells, char sep, bool quote) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += sep;
    const auto& c = cells[i];
    if (quote && c.find_first_of(",\"\n") != std::string::npos) {
      out += '"';
      for (char ch : c) {
        if (ch == '"') out += '"';
        out += ch;
      }
      out += '"';
    } else {
      out += c;
    }
  }
  return out + "\n";
}

}  // namespace

std::string Table::to_tsv() const {
  std::string out = join_row(header, '\t', false);
  for (const auto& r : rows) out += join_row(r, '\t', false);
  return out;
}

std::string Table::to_csv() const {
  std::string out = join_row(header, ',', true);
  for (const auto& r : rows) out += join_row(r, ',', true);
  return out;
}

std::string Table::to_markdown() const {
  auto line = [](const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) {
      std::string escaped;
      for (char ch : c) {
        if (ch == '|') escaped += '\\';
        escaped += ch;
      }
      out += " " + escaped + " |";
    }
    return out + "\n";
  };
  std::string out = line(header) + "|";
  for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

// ---- aliases

void EntityAliasMap::add(const std::string& canonical, const std::vector<std::string>& aliases) {
  const auto c = case_fold(canonical);
  if (c.empty()) throw ConfigError("alias map: empty canonical name");
  auto bind = [&](const std::string& alias) {
    const auto a = case_fold(alias);
    auto [it, fresh] = to_canonical_.emplace(a, c);
    if (!fresh && it->second != c)
      throw ConfigError("alias map: '" + a + "' listed under both '" + it->second + "' and '" + c + "'");
  };
  bind(c);
  for (const auto& a : aliases) bind(a);
}

std::string EntityAliasMap::canonical(std::string_view surface) const {
  auto key = case_fold(surface);
  auto it = to_canonical_.find(key);
  return it == to_canonical_.end() ? key : it->second;
}

std::map<std::string, std::vector<std::string>> EntityAliasMap::groups() const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [alias, c] : to_canonical_)
    if (alias != c) out[c].push_back(alias);
  return out;
}

EntityAliasMap EntityAliasMap::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("alias map must be an object of canonical -> [aliases]");
  EntityAliasMap m;
  for (const auto& [canonical, aliases] : j.items()) {
    if (!aliases.is_array()) throw ConfigError("alias map: '" + canonical + "' must list aliases in an array");
    m.add(canonical, aliases.get<std::vector<std::string>>());
  }
  return m;
}

EntityAliasMap EntityAliasMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alias map " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("alias map " + path.string() + ": " + e.what());
  }
}

PredictionSet apply_aliases(const PredictionSet& set, const EntityAliasMap& aliases) {
  PredictionSet out = set;
  for (auto& t : out.tweets)
    for (auto& e : t.entities) e.surface = aliases.canonical(e.surface);
  return out;
}

std::string entity_name(const EntityPrediction& e) { return case_fold(e.surface); }

// ---- partisanship

ZScore partisanship_zscore(Proportion left, Proportion right) {
  if (left.trials == 0 || right.trials == 0) throw ConfigError("z-score needs at least one trial on each side");
  if (left.successes > left.trials || right.successes > right.trials)
    throw ConfigError("z-score: successes exceed trials");
  const double nl = static_cast<double>(left.trials), nr = static_cast<double>(right.trials);
  const double pooled = static_cast<double>(left.successes + right.successes) / (nl + nr);
  if (pooled <= 0.0 || pooled >= 1.0) return {0.0, true};
  const double pl = static_cast<double>(left.successes) / nl, pr = static_cast<double>(right.successes) / nr;
  return {(pl - pr) / std::sqrt(pooled * (1.0 - pooled) * (1.0 / nl + 1.0 / nr)), false};
}

std::vector<TopicPartisanship> partisanship_table(const PredictionSet& set, std::size_t min_count) {
  struct Side {
    std::size_t tweets = 0, rows = 0;
    std::array<std::size_t, kNumFoundations> mf{};
    std::map<std::pair<MoralRole, std::string>, std::size_t> pairs;
  };
  std::map<std::string, std::array<Side, 2>> topics;
  for (const auto& t : set.tweets) {
    auto& side = topics[t.topic][t.ideology == Ideology::Left ? 0 : 1];
    ++side.tweets;
    ++side.mf[index_of(t.mf)];
    for (const auto& e : t.entities) {
      ++side.rows;
      ++side.pairs[{e.role, entity_name(e)}];
    }
  }
  std::vector<TopicPartisanship> out;
  for (const auto& [topic, sides] : topics) {
    const auto& [l, r] = sides;
    TopicPartisanship row;
    row.topic = topic;
    std::size_t best = 0;
    for (auto f : kAllFoundations) {
      const auto n = l.mf[index_of(f)] + r.mf[index_of(f)];
      if (n > best) best = n, row.mf = f;
    }
    if (l.tweets && r.tweets) row.mf_z = partisanship_zscore({l.mf[index_of(row.mf)], l.tweets}, {r.mf[index_of(row.mf)], r.tweets});
    else row.mf_z.degenerate = true;

    if (l.rows && r.rows) {
      std::set<std::pair<MoralRole, std::string>> keys;
      for (const auto& s : sides)
        for (const auto& [k, _] : s.pairs)
          if (role_to_mf(k.first) == row.mf) keys.insert(k);
      for (const auto& k : keys) {
        auto count = [&](const Side& s) {
          auto it = s.pairs.find(k);
          return it == s.pairs.end() ? std::size_t{0} : it->second;
        };
        const auto cl = count(l), cr = count(r);
        if (cl + cr < min_count) continue;
        const auto z = partisanship_zscore({cl, l.rows}, {cr, r.rows});
        if (z.degenerate) continue;
        const PartisanEntry entry{k.first, k.second, z, cl + cr};
        // Keys are visited in (role, entity) order, so strict comparisons keep the first on ties.
        if (!row.left || z.z > row.left->z.z) row.left = entry;
        if (!row.right || z.z < row.right->z.z) row.right = entry;
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

Table to_table(const std::vector<TopicPartisanship>& rows) {
  Table t{{"topic", "common_mf", "mf_z", "right_role", "right_entity", "right_z", "left_role", "left_entity", "left_z"},
          {}};
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.topic, std::string(name_of(r.mf)),
                                      r.mf_z.degenerate ? "NA" : format_number(r.mf_z.z, 2)};
    for (const auto* e : {&r.right, &r.left}) {
      if (*e) {
        cells.push_back(std::string(name_of((*e)->role)));
        cells.push_back((*e)->entity);
        cells.push_back(format_number((*e)->z.z, 2));
      } else {
        cells.insert(cells.end(), {"", "", "NA"});
      }
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// ---- error taxonomy

ErrorCounts error_taxonomy(const PredictionSet& set) {
  ErrorCounts c;
  for (const auto& t : set.tweets) {
    for (const auto& e : t.entities) {
      if (e.gold && role_polarity(e.role) != role_polarity(*e.gold)) ++c.e1;
      if (t.gold && role_to_mf(e.role) != *t.gold) ++c.e2;
    }
    if (t.entities.size() < 2) continue;
    const auto& first = t.entities.front();
    const bool same_pred = std::all_of(t.entities.begin(), t.entities.end(),
                                       [&](const EntityPrediction& e) { return e.role == first.role; });
    const bool all_gold = std::all_of(t.entities.begin(), t.entities.end(),
                                      [](const EntityPrediction& e) { return e.gold.has_value(); });
    if (!same_pred || !all_gold) continue;
    const bool gold_differ = std::any_of(t.entities.begin(), t.entities.end(),
                                         [&](const EntityPrediction& e) { return *e.gold != *first.gold; });
    if (gold_differ) ++c.e3;
  }
  return c;
}

// ---- frequent entities

namespace {

using Ngram = std::vector<std::string>;

bool contains(const Ngram& outer, const Ngram& inner) {
  if (inner.size() > outer.size()) return false;
  return std::search(outer.begin(), outer.end(), inner.begin(), inner.end()) != outer.end();
}

}  // namespace

std::vector<EntityGroup> group_ngrams(const std::vector<std::vector<std::string>>& entities,
                                      const EntityGroupConfig& cfg) {
  std::map<Ngram, std::size_t> counts;
  for (const auto& tokens : entities) {
    std::set<Ngram> seen;
    for (std::size_t n = 1; n <= cfg.n_max; ++n)
      for (std::size_t i = 0; i + n <= tokens.size(); ++i) seen.emplace(tokens.begin() + static_cast<long>(i),
                                                                        tokens.begin() + static_cast<long>(i + n));
    for (const auto& g : seen) ++counts[g];
  }
  // Higher count first; at equal count the longer (more specific) n-gram leads.
  std::vector<std::pair<Ngram, std::size_t>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first.size() > b.first.size();
  });

  struct Group {
    Ngram head;
    std::size_t count;
    std::vector<Ngram> members;
  };
  std::vector<Group> groups;
  for (const auto& [g, n] : order) {
    Group* home = nullptr;
    for (auto& grp : groups) {
      for (const auto& m : grp.members)
        if (contains(m, g) || contains(g, m)) {
          home = &grp;
          break;
        }
      if (home) break;
    }
    if (home) home->members.push_back(g);
    else groups.push_back({g, n, {g}});
  }

  std::vector<EntityGroup> out;
  for (const auto& grp : groups) {
    EntityGroup e{join(grp.head, " "), grp.count, {}};
    for (const auto& m : grp.members)
      if (m != grp.head) e.merged.push_back(join(m, " "));
    std::sort(e.merged.begin(), e.merged.end());
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const EntityGroup& a, const EntityGroup& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.ngram < b.ngram;
  });
  if (cfg.top_k && out.size() > cfg.top_k) out.resize(cfg.top_k);
  return out;
}

RoleEntityTable top_entities_per_role(const PredictionSet& set, const EntityGroupConfig& cfg) {
  std::map<std::pair<Ideology, MoralRole>, std::vector<std::vector<std::string>>> surfaces;
  for (const auto& t : set.tweets)
    for (const auto& e : t.entities) {
      auto tokens = tokenize(e.surface);
      for (auto& tok : tokens) tok = porter_stem(tok);
      if (!tokens.empty()) surfaces[{t.ideology, e.role}].push_back(std::move(tokens));
    }
  RoleEntityTable out;
  for (const auto& [key, list] : surfaces) out[key] = group_ngrams(list, cfg);
  return out;
}

Table to_table(const RoleEntityTable& table) {
  Table t{{"ideology", "role", "rank", "ngram", "count", "merged"}, {}};
  for (const auto& [key, groups] : table)
    for (std::size_t i = 0; i < groups.size(); ++i)
      t.rows.push_back({std::string(name_of(key.first)), std::string(name_of(key.second)), std::to_string(i + 1),
                        groups[i].ngram, std::to_string(groups[i].count), join(groups[i].merged, "; ")});
  return t;
}

// ---- relation graphs

std::string_view name_of(RoleClass c) {
  switch (c) {
    case RoleClass::Target: return "target";
    case RoleClass::PositiveActor: return "positive-actor";
    case RoleClass::NegativeActor: return "negative-actor";
  }
  return "?";
}

RoleClass role_class(MoralRole r) {
  if (is_target_role(r)) return RoleClass::Target;
  return role_polarity(r) == Polarity::Positive ? RoleClass::PositiveActor : RoleClass::NegativeActor;
}

namespace {

std::optional<RoleClass> parse_role_class(std::string_view s) {
  for (auto c : {RoleClass::Target, RoleClass::PositiveActor, RoleClass::NegativeActor})
    if (name_of(c) == s) return c;
  return std::nullopt;
}

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

RelationGraph build_relation_graph(const PredictionSet& set, MoralFoundation mf, Ideology ideology,
                                   const GraphConfig& cfg) {
  RelationGraph g;
  g.mf = mf;
  g.ideology = ideology;

  std::map<std::string, std::array<std::size_t, kNumRoles>> usage;
  std::vector<std::set<std::string>> mentions;  // per tweet in scope
  for (const auto& t : set.tweets) {
    if (t.ideology != ideology || t.mf != mf) continue;
    std::set<std::string> names;
    for (const auto& e : t.entities) {
      if (role_to_mf(e.role) != mf) continue;
      ++usage[entity_name(e)][index_of(e.role)];
      names.insert(entity_name(e));
    }
    mentions.push_back(std::move(names));
  }

  struct Candidate {
    std::string name;
    MoralRole role;
    std::size_t count;
  };
  std::vector<Candidate> candidates;
  for (const auto& [name, roles] : usage) {
    std::size_t total = 0, best = 0;
    for (std::size_t r = 0; r < kNumRoles; ++r) {
      total += roles[r];
      if (roles[r] > roles[best]) best = r;
    }
    if (total >= cfg.min_count) candidates.push_back({name, kAllRoles[best], total});
  }
  auto by_count = [](std::vector<Candidate>& v) {
    std::stable_sort(v.begin(), v.end(), [](const Candidate& a, const Candidate& b) { return a.count > b.count; });
  };

  std::vector<Candidate> targets;
  for (const auto& c : candidates)
    if (role_class(c.role) == RoleClass::Target) targets.push_back(c);
  by_count(targets);
  if (targets.size() > cfg.targets) targets.resize(cfg.targets);

  auto co_mentions = [&](const std::string& a, const std::string& b) {
    std::size_t n = 0;
    for (const auto& m : mentions) n += m.contains(a) && m.contains(b);
    return n;
  };

  std::vector<Candidate> actors;
  for (auto cls : {RoleClass::PositiveActor, RoleClass::NegativeActor}) {
    std::vector<Candidate> pool;
    for (const auto& c : candidates) {
      if (role_class(c.role) != cls) continue;
      std::size_t n = 0;
      for (const auto& t : targets) n += co_mentions(c.name, t.name);
      if (n) pool.push_back({c.name, c.role, n});
    }
    by_count(pool);
    const auto k = cls == RoleClass::PositiveActor ? cfg.positive_actors : cfg.negative_actors;
    if (pool.size() < k) g.underfull = true;
    if (pool.size() > k) pool.resize(k);
    actors.insert(actors.end(), pool.begin(), pool.end());
  }
  if (targets.size() < cfg.targets) g.underfull = true;

  auto total_of = [&](const std::string& name) {
    std::size_t n = 0;
    for (auto v : usage.at(name)) n += v;
    return n;
  };
  for (const auto& c : targets) g.nodes.push_back({c.name, c.role, RoleClass::Target, total_of(c.name)});
  for (const auto& c : actors) g.nodes.push_back({c.name, c.role, role_class(c.role), total_of(c.name)});
  for (const auto& a : actors)
    for (const auto& t : targets)
      if (auto n = co_mentions(a.name, t.name)) g.edges.push_back({a.name, t.name, n});
  return g;
}

std::string RelationGraph::to_dot() const {
  std::ostringstream out;
  out << "digraph " << dot_quote(std::string(name_of(mf)) + "_" + std::string(name_of(ideology))) << " {\n";
  out << "  // underfull=" << (underfull ? "true" : "false") << "\n";
  for (const auto& n : nodes)
    out << "  " << dot_quote(n.entity) << " [role=" << dot_quote(std::string(name_of(n.role)))
        << ", class=" << dot_quote(std::string(name_of(n.cls))) << ", count=" << n.count << "];\n";
  for (const auto& e : edges)
    out << "  " << dot_quote(e.from) << " -> " << dot_quote(e.to) << " [count=" << e.count << "];\n";
  out << "}\n";
  return out.str();
}

nlohmann::ordered_json RelationGraph::to_json() const {
  nlohmann::ordered_json j;
  j["mf"] = name_of(mf);
  j["ideology"] = name_of(ideology);
  j["underfull"] = underfull;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : nodes)
    j["nodes"].push_back({{"entity", n.entity}, {"role", name_of(n.role)}, {"class", name_of(n.cls)}, {"count", n.count}});
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : edges) j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"count", e.count}});
  return j;
}

RelationGraph parse_dot(std::string_view dot) {
  static const std::string q = R"re("((?:[^"\\]|\\.)*)")re";
  static const std::regex header(R"(^\s*digraph\s+)" + q + R"(\s*\{\s*$)");
  static const std::regex flag(R"(^\s*//\s*underfull=(true|false)\s*$)");
  static const std::regex node(R"(^\s*)" + q + R"(\s*\[role=)" + q + R"(,\s*class=)" + q +
                               R"(,\s*count=(\d+)\];\s*$)");
  static const std::regex edge(R"(^\s*)" + q + R"(\s*->\s*)" + q + R"(\s*\[count=(\d+)\];\s*$)");
  auto unquote = [](const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) out += (s[i] == '\\' && i + 1 < s.size()) ? s[++i] : s[i];
    return out;
  };

  RelationGraph g;
  std::istringstream in{std::string(dot)};
  std::string line;
  int n = 0;
  bool opened = false, closed = false;
  std::smatch m;
  while (std::getline(in, line)) {
    ++n;
    auto fail = [&](const std::string& why) { throw ParseError(why, n, 1); };
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!opened) {
      if (!std::regex_match(line, m, header)) fail("expected digraph header");
      const auto name = unquote(m[1]);
      const auto cut = name.rfind('_');
      auto f = cut == std::string::npos ? std::nullopt : parse_foundation(name.substr(0, cut));
      auto i = cut == std::string::npos ? std::nullopt : parse_ideology(name.substr(cut + 1));
      if (!f || !i) fail("graph name must be <foundation>_<ideology>");
      g.mf = *f;
      g.ideology = *i;
      opened = true;
    } else if (closed) {
      fail("content after closing brace");
    } else if (std::regex_match(line, m, flag)) {
      g.underfull = m[1] == "true";
    } else if (line.find_first_not_of(" \t") == line.find("//")) {
      continue;  // other comments
    } else if (std::regex_match(line, m, node)) {
      auto role = parse_role(unquote(m[2]));
      auto cls = parse_role_class(unquote(m[3]));
      if (!role || !cls) fail("unknown role or class");
      g.nodes.push_back({unquote(m[1]), *role, *cls, std::stoul(m[4])});
    } else if (std::regex_match(line, m, edge)) {
      g.edges.push_back({unquote(m[1]), unquote(m[2]), std::stoul(m[3])});
    } else if (line.find_first_not_of(" \t") == line.find('}')) {
      closed = true;
    } else {
      fail("unrecognized line");
    }
  }
  if (!opened || !closed) throw ParseError("incomplete digraph", n, 1);
  for (const auto& e : g.edges) {
    auto known = [&](const std::string& s) {
      return std::any_of(g.nodes.begin(), g.nodes.end(), [&](const GraphNode& v) { return v.entity == s; });
    };
    if (!known(e.from) || !known(e.to)) throw ParseError("edge endpoint is not a node", n, 1);
  }
  return g;
}

// ---- role usage

std::map<Ideology, std::vector<RankPoint>> polarity_rank(const PredictionSet& set, std::string_view entity,
                                                          const PolarityRankConfig& cfg) {
  const auto key = case_fold(entity);
  std::map<Ideology, std::array<std::size_t, kNumRoles>> counts;
  for (const auto& t : set.tweets)
    for (const auto& e : t.entities)
      if (entity_name(e) == key) ++counts[t.ideology][index_of(e.role)];

  std::map<Ideology, std::vector<RankPoint>> out;
  for (const auto& [ideology, c] : counts) {
    std::vector<RankPoint> pts;
    for (auto r : kAllRoles)
      if (c[index_of(r)] >= cfg.min_count && c[index_of(r)] > 0) pts.push_back({r, c[index_of(r)], 0.0});
    std::stable_sort(pts.begin(), pts.end(), [](const RankPoint& a, const RankPoint& b) { return a.count > b.count; });
    const auto k = pts.size();
    for (std::size_t i = 0; i < k; ++i)
      pts[i].rank = k == 1 ? 1.0 : static_cast<double>(k - 1 - i) / static_cast<double>(k - 1);
    if (!pts.empty()) out[ideology] = std::move(pts);
  }
  return out;
}

Table polarity_rank_table(const std::map<Ideology, std::vector<RankPoint>>& series, std::string_view entity) {
  Table t{{"entity", "ideology", "role", "polarity", "count", "rank"}, {}};
  for (const auto& [ideology, pts] : series)
    for (const auto& p : pts)
      t.rows.push_back({case_fold(entity), std::string(name_of(ideology)), std::string(name_of(p.role)),
                        std::string(name_of(role_polarity(p.role))), std::to_string(p.count),
                        format_number(p.rank, 4)});
  return t;
}

std::vector<std::pair<MoralRole, double>> role_distribution(const PredictionSet& set, std::string_view entity,
                                                            Ideology ideology) {
  const auto key = case_fold(entity);
  std::array<std::size_t, kNumRoles> c{};
  std::size_t total = 0;
  for (const auto& t : set.tweets) {
    if (t.ideology != ideology) continue;
    for (const auto& e : t.entities)
      if (entity_name(e) == key) ++c[index_of(e.role)], ++total;
  }
  std::vector<std::pair<MoralRole, double>> out;
  for (auto r : kAllRoles)
    if (c[index_of(r)]) out.emplace_back(r, static_cast<double>(c[index_of(r)]) / static_cast<double>(total));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

Table role_distribution_table(const std::vector<std::pair<MoralRole, double>>& dist) {
  Table t{{"role", "fraction"}, {}};
  for (const auto& [r, f] : dist) t.rows.push_back({std::string(name_of(r)), format_number(f, 4)});
  return t;
}

std::vector<std::pair<std::string, std::size_t>> entity_frequencies(const PredictionSet& set) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : set.tweets)
    for (const auto& e : t.entities) ++counts[entity_name(e)];
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace mframe
