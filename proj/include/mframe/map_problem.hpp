#pragma once

#include <span>
#include <string>
#include <vector>

namespace mframe {

struct Coef {
  int var = 0;
  double value = 0.0;
};

// constant + sum(value * y[var])
struct LinearExpr {
  std::vector<Coef> terms;
  double constant = 0.0;

  double eval(std::span<const double> y) const;
  // Range of the expression over the unit box.
  double box_min() const;
  double box_max() const;
  // Merges duplicate variables and drops zero coefficients.
  void normalize();
};

enum class Sense : std::uint8_t { LessEqual, Equal };

// expr <= 0 or expr == 0.
struct LinearConstraint {
  LinearExpr expr;
  Sense sense = Sense::LessEqual;
  std::string label;

  double violation(std::span<const double> y) const;
};

// weight * max(expr, 0)^exponent, the distance to satisfaction of a ground clause.
struct HingePotential {
  LinearExpr expr;
  double weight = 0.0;
  int exponent = 1;

  double distance(std::span<const double> y) const;
};

// A MAP problem over variables in [0,1] (relaxed) or {0,1} (integral).
//
//   score(y)  = constant + sum_i linear[i] * y_i + sum_r w_r * (1 - psi_r(y))
//   energy(y) = sum_r w_r * psi_r(y) - sum_i linear[i] * y_i
//
// so score = constant + sum_r w_r - energy. Integral MAP maximizes score;
// the relaxed solver minimizes energy. Groups are disjoint exactly-one sets,
// listed in branching order; each is also present as an equality constraint.
struct MapProblem {
  std::size_t num_vars = 0;
  std::vector<double> linear;
  double constant = 0.0;
  std::vector<HingePotential> potentials;
  std::vector<LinearConstraint> constraints;
  std::vector<std::vector<int>> groups;

  explicit MapProblem(std::size_t n = 0) : num_vars(n), linear(n, 0.0) {}

  double score(std::span<const double> y) const;
  double energy(std::span<const double> y) const;
  double total_weight() const;
  std::size_t count_violations(std::span<const double> y, double tol = 1e-6) const;
  // Throws std::invalid_argument when indices are out of range or groups overlap.
  void check() const;
};

}  // namespace mframe
