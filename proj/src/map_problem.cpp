#include "mframe/map_problem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace mframe {

double LinearExpr::eval(std::span<const double> y) const {
  double v = constant;
  for (const auto& t : terms) v += t.value * y[static_cast<std::size_t>(t.var)];
  return v;
}

double LinearExpr::box_min() const {
  double v = constant;
  for (const auto& t : terms) v += std::min(t.value, 0.0);
  return v;
}

double LinearExpr::box_max() const {
  double v = constant;
  for (const auto& t : terms) v += std::max(t.value, 0.0);
  return v;
}

void LinearExpr::normalize() {
  std::map<int, double> merged;
  for (const auto& t : terms) merged[t.var] += t.value;
  terms.clear();
  for (const auto& [var, value] : merged)
    if (value != 0.0) terms.push_back({var, value});
}

double LinearConstraint::violation(std::span<const double> y) const {
  const double v = expr.eval(y);
  return sense == Sense::Equal ? std::abs(v) : std::max(v, 0.0);
}

double HingePotential::distance(std::span<const double> y) const {
  const double l = std::max(expr.eval(y), 0.0);
  return exponent == 2 ? l * l : l;
}

double MapProblem::score(std::span<const double> y) const {
  double s = constant;
  for (std::size_t i = 0; i < num_vars; ++i) s += linear[i] * y[i];
  for (const auto& p : potentials) s += p.weight * (1.0 - p.distance(y));
  return s;
}

double MapProblem::energy(std::span<const double> y) const {
  double e = 0.0;
  for (const auto& p : potentials) e += p.weight * p.distance(y);
  for (std::size_t i = 0; i < num_vars; ++i) e -= linear[i] * y[i];
  return e;
}

double MapProblem::total_weight() const {
  double w = 0.0;
  for (const auto& p : potentials) w += p.weight;
  return w;
}

std::size_t MapProblem::count_violations(std::span<const double> y, double tol) const {
  std::size_t n = 0;
  for (const auto& c : constraints)
    if (c.violation(y) > tol) ++n;
  return n;
}

void MapProblem::check() const {
  if (linear.size() != num_vars) throw std::invalid_argument("linear term size mismatch");
  auto check_expr = [&](const LinearExpr& e) {
    for (const auto& t : e.terms)
      if (t.var < 0 || static_cast<std::size_t>(t.var) >= num_vars)
        throw std::invalid_argument("variable index out of range");
  };
  for (const auto& p : potentials) {
    check_expr(p.expr);
    if (p.exponent != 1 && p.exponent != 2) throw std::invalid_argument("hinge exponent must be 1 or 2");
    if (!std::isfinite(p.weight)) throw std::invalid_argument("non-finite potential weight");
  }
  for (const auto& c : constraints) {
    check_expr(c.expr);
    if (c.expr.terms.empty()) throw std::invalid_argument("constraint without variables");
  }
  std::vector<char> seen(num_vars, 0);
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("empty exactly-one group");
    for (int v : g) {
      if (v < 0 || static_cast<std::size_t>(v) >= num_vars) throw std::invalid_argument("group index out of range");
      if (seen[static_cast<std::size_t>(v)]++) throw std::invalid_argument("exactly-one groups overlap");
    }
  }
}

}  // namespace mframe
