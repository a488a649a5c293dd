#pragma once

// Shared fixtures for the test binaries.

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mframe/corpus.hpp"
#include "mframe/map_problem.hpp"
#include "mframe/taxonomy.hpp"
#include "mframe/text.hpp"

namespace testkit {

struct Mention {
  std::string surface;
  std::optional<mframe::MoralRole> role;
};

inline mframe::TweetInstance tweet(const std::string& id, const std::string& text, std::vector<Mention> mentions = {},
                                   std::optional<mframe::MoralFoundation> mf = std::nullopt,
                                   mframe::Ideology ideo = mframe::Ideology::Left, const std::string& topic = "guns") {
  mframe::TweetInstance t;
  t.id = id;
  t.text = text;
  t.ideology = ideo;
  t.topic = topic;
  t.gold_mf = mf;
  std::map<std::string, int> seen;
  std::size_t from = 0;
  for (auto& m : mentions) {
    mframe::EntityMention e;
    e.surface = m.surface;
    auto pos = text.find(m.surface, from);
    if (pos == std::string::npos) pos = text.find(m.surface);
    if (pos == std::string::npos) pos = 0;
    e.start = static_cast<int>(pos);
    e.end = static_cast<int>(pos + m.surface.size());
    std::string folded = mframe::case_fold(m.surface);
    const int n = ++seen[folded];
    e.id = n == 1 ? folded : folded + "#" + std::to_string(n);
    e.gold_role = m.role;
    t.entities.push_back(e);
  }
  t.tokens = mframe::tokenize(text);
  return t;
}

// Independent reference for an integral MAP problem: all 2^n binary vectors,
// score recomputed from the hinge definitions. Returns the best score and the
// first maximizer in the order of `key` (smaller wins).
struct BruteForce {
  double score = -INFINITY;
  std::vector<double> y;
  bool feasible = false;
};

inline double reference_score(const mframe::MapProblem& p, const std::vector<double>& y) {
  double s = p.constant;
  for (std::size_t i = 0; i < y.size(); ++i) s += p.linear[i] * y[i];
  for (const auto& h : p.potentials) {
    double l = h.expr.constant;
    for (const auto& t : h.expr.terms) l += t.value * y[static_cast<std::size_t>(t.var)];
    l = l > 0 ? l : 0;
    s += h.weight * (1.0 - (h.exponent == 2 ? l * l : l));
  }
  return s;
}

inline bool reference_feasible(const mframe::MapProblem& p, const std::vector<double>& y) {
  for (const auto& c : p.constraints) {
    double v = c.expr.constant;
    for (const auto& t : c.expr.terms) v += t.value * y[static_cast<std::size_t>(t.var)];
    if (c.sense == mframe::Sense::Equal ? std::abs(v) > 1e-6 : v > 1e-6) return false;
  }
  return true;
}

inline BruteForce brute_force(const mframe::MapProblem& p) {
  BruteForce best;
  const std::size_t n = p.num_vars;
  std::vector<double> y(n);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    for (std::size_t i = 0; i < n; ++i) y[i] = (bits >> i) & 1U ? 1.0 : 0.0;
    if (!reference_feasible(p, y)) continue;
    const double s = reference_score(p, y);
    if (!best.feasible || s > best.score + 1e-12) {
      best.score = s;
      best.y = y;
      best.feasible = true;
    }
  }
  return best;
}

// A random problem over at most `max_vars` binary variables: a few exactly-one
// groups, free variables, hinge potentials of both exponents and random
// inequality constraints that keep the all-first-option point feasible half of the time.
inline mframe::MapProblem random_problem(std::mt19937_64& rng, std::size_t max_vars = 12, bool nonnegative = false) {
  std::uniform_int_distribution<int> nvars(3, static_cast<int>(max_vars));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto n = static_cast<std::size_t>(nvars(rng));
  mframe::MapProblem p(n);
  std::size_t v = 0;
  while (v + 2 <= n && rng() % 3 != 0) {
    const std::size_t k = std::min<std::size_t>(n - v, 2 + rng() % 3);
    std::vector<int> g;
    mframe::LinearExpr e;
    for (std::size_t j = 0; j < k; ++j) {
      g.push_back(static_cast<int>(v + j));
      e.terms.push_back({static_cast<int>(v + j), 1.0});
    }
    e.constant = -1.0;
    p.constraints.push_back({e, mframe::Sense::Equal, "group"});
    p.groups.push_back(g);
    v += k;
  }
  for (auto& c : p.linear) c = u(rng);
  const int npot = 2 + static_cast<int>(rng() % 8);
  for (int r = 0; r < npot; ++r) {
    mframe::HingePotential h;
    const int len = 1 + static_cast<int>(rng() % 3);
    for (int j = 0; j < len; ++j) h.expr.terms.push_back({static_cast<int>(rng() % n), rng() % 2 ? 1.0 : -1.0});
    h.expr.constant = std::round(u(rng) * 2.0) / 2.0;
    h.expr.normalize();
    h.weight = nonnegative ? std::abs(u(rng)) * 2.0 : u(rng) * 2.0;
    h.exponent = rng() % 2 ? 1 : 2;
    p.potentials.push_back(h);
  }
  const int ncons = static_cast<int>(rng() % 3);
  for (int c = 0; c < ncons; ++c) {
    mframe::LinearExpr e;
    e.terms.push_back({static_cast<int>(rng() % n), 1.0});
    e.terms.push_back({static_cast<int>(rng() % n), -1.0});
    e.normalize();
    if (e.terms.empty()) continue;
    p.constraints.push_back({e, mframe::Sense::LessEqual, "implication"});
  }
  return p;
}

}  // namespace testkit
