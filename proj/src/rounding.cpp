#include <algorithm>
#include <numeric>
#include <sstream>

#include "mframe/error.hpp"
#include "mframe/inference.hpp"
#include "partial.hpp"

namespace mframe {

Assignment round_assignment(const Assignment& relaxed, const MapProblem& p, double tol) {
  if (relaxed.values.size() != p.num_vars) throw std::invalid_argument("relaxed assignment size mismatch");
  detail::UnitModel model(p);
  const auto& units = model.units();

  // Options per unit by decreasing relaxed value, ties to the lower index.
  std::vector<std::vector<int>> ranked(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& unit = units[u];
    std::vector<double> value;
    if (unit.free) {
      const double y = relaxed.values[static_cast<std::size_t>(unit.vars[0])];
      value = {1.0 - y, y};
    } else {
      for (int v : unit.vars) value.push_back(relaxed.values[static_cast<std::size_t>(v)]);
    }
    auto& order = ranked[u];
    order.resize(value.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return value[static_cast<std::size_t>(a)] > value[static_cast<std::size_t>(b)];
    });
  }

  // Greedy in unit order (MF groups before role groups), backtracking only
  // when a later unit has no option left that keeps the constraints satisfiable.
  std::vector<int> choice(units.size(), -1);
  std::vector<std::size_t> next(units.size(), 0);
  constexpr std::uint64_t kMaxSteps = 10'000'000;
  std::uint64_t steps = 0;
  std::size_t u = 0;
  while (u < units.size()) {
    if (++steps > kMaxSteps) throw SolverError("rounding exceeded its search budget");
    bool placed = false;
    while (next[u] < ranked[u].size()) {
      choice[u] = ranked[u][next[u]++];
      if (model.first_conflict_at(u, choice, tol) < 0) {
        placed = true;
        break;
      }
    }
    if (placed) {
      ++u;
      continue;
    }
    choice[u] = -1;
    next[u] = 0;
    if (u == 0) {
      std::ostringstream msg;
      msg << "rounding cannot satisfy the hard constraints (first unit at variable " << units[0].vars[0] << ")";
      throw SolverError(msg.str());
    }
    --u;
  }

  Assignment out;
  out.values.assign(p.num_vars, 0.0);
  model.write(choice, out.values);
  if (!detail::feasible(p, out.values, tol)) throw SolverError("rounded assignment violates a hard constraint");
  out.score = p.score(out.values);
  out.energy = p.energy(out.values);
  out.converged = relaxed.converged;
  out.iterations = relaxed.iterations;
  out.energy_trace = relaxed.energy_trace;
  return out;
}

}  // namespace mframe
