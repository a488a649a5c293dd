#pragma once

// Partial assignments over decision units (exactly-one groups, then free
// variables), with interval bounds on linear expressions. Shared by the exact
// solvers and rounding.

#include <algorithm>
#include <cmath>
#include <vector>

#include "mframe/map_problem.hpp"

namespace mframe::detail {

struct Unit {
  std::vector<int> vars;  // group members; a single var for free units
  bool free = false;

  std::size_t options() const { return free ? 2 : vars.size(); }
};

// Contribution of each unit to one linear expression, per option.
struct UnitExpr {
  double constant = 0.0;
  std::vector<std::pair<int, std::vector<double>>> parts;
};

class UnitModel {
 public:
  explicit UnitModel(const MapProblem& p) : problem_(p) {
    std::vector<int> unit_of(p.num_vars, -1);
    for (const auto& g : p.groups) {
      for (int v : g) unit_of[static_cast<std::size_t>(v)] = static_cast<int>(units_.size());
      units_.push_back({g, false});
    }
    for (std::size_t v = 0; v < p.num_vars; ++v) {
      if (unit_of[v] >= 0) continue;
      unit_of[v] = static_cast<int>(units_.size());
      units_.push_back({{static_cast<int>(v)}, true});
    }
    unit_of_ = unit_of;

    gain_.resize(units_.size());
    for (std::size_t u = 0; u < units_.size(); ++u) {
      const auto& unit = units_[u];
      if (unit.free) {
        gain_[u] = {0.0, p.linear[static_cast<std::size_t>(unit.vars[0])]};
      } else {
        for (int v : unit.vars) gain_[u].push_back(p.linear[static_cast<std::size_t>(v)]);
      }
    }
    // A hinge over at most one unit is an exact per-option score; only hinges
    // spanning several units need interval bounds.
    for (std::size_t r = 0; r < p.potentials.size(); ++r) {
      const auto& pot = p.potentials[r];
      auto e = compile(pot.expr);
      auto value = [&](double l) {
        l = std::max(l, 0.0);
        return pot.weight * (1.0 - (pot.exponent == 2 ? l * l : l));
      };
      if (e.parts.empty()) {
        fixed_ += value(e.constant);
      } else if (e.parts.size() == 1) {
        auto& g = gain_[static_cast<std::size_t>(e.parts[0].first)];
        for (std::size_t o = 0; o < g.size(); ++o) g[o] += value(e.constant + e.parts[0].second[o]);
      } else {
        spanning_.push_back(r);
        potentials_.push_back(std::move(e));
      }
    }
    touching_.resize(units_.size());
    for (std::size_t c = 0; c < p.constraints.size(); ++c) {
      constraints_.push_back(compile(p.constraints[c].expr));
      for (const auto& part : constraints_.back().parts) touching_[static_cast<std::size_t>(part.first)].push_back(c);
    }
  }

  const std::vector<Unit>& units() const { return units_; }
  const MapProblem& problem() const { return problem_; }
  const std::vector<std::size_t>& constraints_touching(std::size_t u) const { return touching_[u]; }

  // choice[u] = option index or -1 when undecided.
  std::pair<double, double> interval(const UnitExpr& e, const std::vector<int>& choice) const {
    double lo = e.constant;
    double hi = e.constant;
    for (const auto& [u, vals] : e.parts) {
      const int c = choice[static_cast<std::size_t>(u)];
      if (c >= 0) {
        lo += vals[static_cast<std::size_t>(c)];
        hi += vals[static_cast<std::size_t>(c)];
      } else {
        lo += *std::min_element(vals.begin(), vals.end());
        hi += *std::max_element(vals.begin(), vals.end());
      }
    }
    return {lo, hi};
  }

  bool constraint_ok(std::size_t c, const std::vector<int>& choice, double tol) const {
    const auto [lo, hi] = interval(constraints_[c], choice);
    if (lo > tol) return false;
    if (problem_.constraints[c].sense == Sense::Equal && hi < -tol) return false;
    return true;
  }

  // Returns the first constraint that cannot be satisfied, or -1.
  long first_conflict(const std::vector<int>& choice, double tol) const {
    for (std::size_t c = 0; c < constraints_.size(); ++c)
      if (!constraint_ok(c, choice, tol)) return static_cast<long>(c);
    return -1;
  }

  long first_conflict_at(std::size_t u, const std::vector<int>& choice, double tol) const {
    for (auto c : touching_[u])
      if (!constraint_ok(c, choice, tol)) return static_cast<long>(c);
    return -1;
  }

  // Upper bound on score over all completions of `choice`: each open unit
  // takes its best option among those its constraints still admit. -inf when
  // some open unit has no admissible option.
  double score_bound(const std::vector<int>& choice, double tol) const {
    double b = problem_.constant + fixed_;
    for (std::size_t u = 0; u < units_.size(); ++u) {
      const auto& g = gain_[u];
      if (choice[u] >= 0) {
        b += g[static_cast<std::size_t>(choice[u])];
        continue;
      }
      double best = -INFINITY;
      for (std::size_t o = 0; o < g.size(); ++o)
        if (g[o] > best && option_ok(u, static_cast<int>(o), choice, tol)) best = g[o];
      if (best == -INFINITY) return -INFINITY;
      b += best;
    }
    for (std::size_t k = 0; k < potentials_.size(); ++k) {
      const auto& pot = problem_.potentials[spanning_[k]];
      const auto [lo, hi] = interval(potentials_[k], choice);
      const double l = pot.weight >= 0.0 ? std::max(lo, 0.0) : std::max(hi, 0.0);
      const double psi = pot.exponent == 2 ? l * l : l;
      b += pot.weight * (1.0 - psi);
    }
    return b;
  }

  // Whether open unit u may take option o without breaking a constraint it touches.
  bool option_ok(std::size_t u, int o, const std::vector<int>& choice, double tol) const {
    for (auto c : touching_[u]) {
      const auto& e = constraints_[c];
      double lo = e.constant, hi = e.constant;
      for (const auto& [v, vals] : e.parts) {
        const int pick = static_cast<std::size_t>(v) == u ? o : choice[static_cast<std::size_t>(v)];
        if (pick >= 0) {
          lo += vals[static_cast<std::size_t>(pick)];
          hi += vals[static_cast<std::size_t>(pick)];
        } else {
          lo += *std::min_element(vals.begin(), vals.end());
          hi += *std::max_element(vals.begin(), vals.end());
        }
      }
      if (lo > tol) return false;
      if (problem_.constraints[c].sense == Sense::Equal && hi < -tol) return false;
    }
    return true;
  }

  void write(const std::vector<int>& choice, std::vector<double>& y) const {
    for (std::size_t u = 0; u < units_.size(); ++u) {
      const auto& unit = units_[u];
      if (unit.free) {
        y[static_cast<std::size_t>(unit.vars[0])] = choice[u] == 1 ? 1.0 : 0.0;
      } else {
        for (std::size_t o = 0; o < unit.vars.size(); ++o)
          y[static_cast<std::size_t>(unit.vars[o])] = static_cast<int>(o) == choice[u] ? 1.0 : 0.0;
      }
    }
  }

 private:
  const MapProblem& problem_;
  std::vector<Unit> units_;
  std::vector<int> unit_of_;
  std::vector<std::vector<double>> gain_;  // per unit, per option: linear terms and single-unit hinges
  double fixed_ = 0.0;
  std::vector<std::size_t> spanning_;  // potentials over several units
  std::vector<UnitExpr> potentials_;   // their compiled forms
  std::vector<UnitExpr> constraints_;
  std::vector<std::vector<std::size_t>> touching_;

  UnitExpr compile(const LinearExpr& e) const {
    UnitExpr out;
    out.constant = e.constant;
    std::vector<int> slot(units_.size(), -1);
    for (const auto& t : e.terms) {
      const int u = unit_of_[static_cast<std::size_t>(t.var)];
      const auto& unit = units_[static_cast<std::size_t>(u)];
      if (slot[static_cast<std::size_t>(u)] < 0) {
        slot[static_cast<std::size_t>(u)] = static_cast<int>(out.parts.size());
        out.parts.push_back({u, std::vector<double>(unit.options(), 0.0)});
      }
      auto& vals = out.parts[static_cast<std::size_t>(slot[static_cast<std::size_t>(u)])].second;
      if (unit.free) {
        vals[1] += t.value;
      } else {
        const auto pos = std::find(unit.vars.begin(), unit.vars.end(), t.var) - unit.vars.begin();
        vals[static_cast<std::size_t>(pos)] += t.value;
      }
    }
    return out;
  }
};

inline bool feasible(const MapProblem& p, const std::vector<double>& y, double tol) {
  for (const auto& c : p.constraints)
    if (c.violation(y) > tol) return false;
  return true;
}

}  // namespace mframe::detail
