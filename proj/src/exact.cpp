#include <cmath>
#include <sstream>

#include "mframe/error.hpp"
#include "mframe/inference.hpp"
#include "partial.hpp"

namespace mframe {

namespace {

[[noreturn]] void throw_infeasible(const MapProblem& p, const std::vector<long>& conflicts) {
  std::ostringstream msg;
  msg << "infeasible MAP problem: no assignment satisfies the hard constraints";
  std::size_t shown = 0;
  for (long c : conflicts) {
    if (shown++ == 5) {
      msg << ", ...";
      break;
    }
    const auto& label = p.constraints[static_cast<std::size_t>(c)].label;
    msg << (shown == 1 ? " (violated: " : ", ") << (label.empty() ? "#" + std::to_string(c) : label);
  }
  if (shown > 0) msg << ")";
  throw SolverError(msg.str());
}

Assignment finish(const MapProblem& p, std::vector<double> y, std::uint64_t nodes) {
  Assignment a;
  a.score = p.score(y);
  a.energy = p.energy(y);
  a.values = std::move(y);
  a.nodes = nodes;
  return a;
}

// The constraints violated by a lexicographically-first leaf, for diagnostics.
std::vector<long> violated_by_default(const MapProblem& p, const detail::UnitModel& model) {
  std::vector<int> choice(model.units().size(), 0);
  std::vector<double> y(p.num_vars, 0.0);
  model.write(choice, y);
  std::vector<long> out;
  for (std::size_t c = 0; c < p.constraints.size(); ++c)
    if (p.constraints[c].violation(y) > 1e-6) out.push_back(static_cast<long>(c));
  return out;
}

}  // namespace

Assignment map_enumerate(const MapProblem& p, const SolverConfig& cfg) {
  p.check();
  detail::UnitModel model(p);
  const auto& units = model.units();

  double total = 1.0;
  for (const auto& u : units) total *= static_cast<double>(u.options());
  if (total > static_cast<double>(cfg.enumeration_cap)) {
    std::ostringstream msg;
    msg << "enumeration over " << total << " assignments exceeds the cap of " << cfg.enumeration_cap
        << "; use the branch-and-bound solver";
    throw SolverError(msg.str());
  }

  std::vector<int> choice(units.size(), 0);
  std::vector<double> y(p.num_vars, 0.0);
  std::vector<double> best;
  double best_score = -INFINITY;
  std::uint64_t leaves = 0;
  while (true) {
    ++leaves;
    model.write(choice, y);
    if (detail::feasible(p, y, cfg.feasibility_tolerance)) {
      const double s = p.score(y);
      if (s > best_score) {
        best_score = s;
        best = y;
      }
    }
    // Odometer with the last unit varying fastest: lexicographic order.
    bool advanced = false;
    for (std::size_t k = units.size(); k-- > 0;) {
      if (++choice[k] < static_cast<int>(units[k].options())) {
        advanced = true;
        break;
      }
      choice[k] = 0;
    }
    if (!advanced) break;
  }
  if (best.empty()) throw_infeasible(p, violated_by_default(p, model));
  return finish(p, std::move(best), leaves);
}

namespace {

class BranchAndBound {
 public:
  BranchAndBound(const MapProblem& p, const SolverConfig& cfg) : p_(p), cfg_(cfg), model_(p) {}

  Assignment run() {
    const auto& units = model_.units();
    choice_.assign(units.size(), -1);
    y_.assign(p_.num_vars, 0.0);
    const long root_conflict = model_.first_conflict(choice_, cfg_.feasibility_tolerance);
    if (root_conflict >= 0) throw_infeasible(p_, {root_conflict});
    descend(0);
    if (best_.empty()) throw_infeasible(p_, violated_by_default(p_, model_));
    return finish(p_, std::move(best_), nodes_);
  }

 private:
  const MapProblem& p_;
  const SolverConfig& cfg_;
  detail::UnitModel model_;
  std::vector<int> choice_;
  std::vector<double> y_;
  std::vector<double> best_;
  double best_score_ = -INFINITY;
  std::uint64_t nodes_ = 0;

  void descend(std::size_t u) {
    ++nodes_;
    const auto& units = model_.units();
    if (u == units.size()) {
      model_.write(choice_, y_);
      if (!detail::feasible(p_, y_, cfg_.feasibility_tolerance)) return;
      const double s = p_.score(y_);
      if (s > best_score_) {
        best_score_ = s;
        best_ = y_;
      }
      return;
    }
    for (int o = 0; o < static_cast<int>(units[u].options()); ++o) {
      choice_[u] = o;
      if (model_.first_conflict_at(u, choice_, cfg_.feasibility_tolerance) >= 0) continue;
      // Equal-bound subtrees are explored: a later leaf only wins on a
      // strictly greater score, so ties keep the first leaf.
      if (!best_.empty() && model_.score_bound(choice_, cfg_.feasibility_tolerance) + cfg_.bound_slack < best_score_) continue;
      descend(u + 1);
    }
    choice_[u] = -1;
  }
};

}  // namespace

Assignment map_branch_and_bound(const MapProblem& p, const SolverConfig& cfg) {
  p.check();
  return BranchAndBound(p, cfg).run();
}

std::optional<std::vector<double>> find_feasible(const MapProblem& p, double tol) {
  p.check();
  detail::UnitModel model(p);
  const auto& units = model.units();
  std::vector<int> choice(units.size(), -1);
  if (model.first_conflict(choice, tol) >= 0) return std::nullopt;
  std::vector<double> y(p.num_vars, 0.0);
  if (units.empty()) return detail::feasible(p, y, tol) ? std::optional(y) : std::nullopt;
  std::size_t u = 0;
  while (true) {
    if (u == units.size()) {
      model.write(choice, y);
      if (detail::feasible(p, y, tol)) return y;
      --u;  // interval checks passed but the leaf does not: keep searching
    }
    bool placed = false;
    while (++choice[u] < static_cast<int>(units[u].options())) {
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
    if (u == 0) return std::nullopt;
    --u;
  }
}

Assignment map_exact(const MapProblem& p, const SolverConfig& cfg) {
  return cfg.mode == SolverMode::Enumerate ? map_enumerate(p, cfg) : map_branch_and_bound(p, cfg);
}

MapProblem loss_augment(const MapProblem& p, const std::vector<double>& gold) {
  if (gold.size() != p.num_vars) throw std::invalid_argument("gold assignment size mismatch");
  MapProblem out = p;
  for (std::size_t i = 0; i < p.num_vars; ++i) {
    // |y - g| = y for g = 0 and 1 - y for g = 1.
    if (gold[i] > 0.5) {
      out.linear[i] -= 1.0;
      out.constant += 1.0;
    } else {
      out.linear[i] += 1.0;
    }
  }
  return out;
}

double hamming(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

Assignment loss_augmented_map(const MapProblem& p, const std::vector<double>& gold, const SolverConfig& cfg) {
  return map_exact(loss_augment(p, gold), cfg);
}

}  // namespace mframe
