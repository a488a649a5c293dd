#include <stdexcept>

#include "mframe/error.hpp"
#include "mframe/inference.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mframe {

std::string_view name_of(SolverMode mode) {
  switch (mode) {
    case SolverMode::Enumerate: return "enumerate";
    case SolverMode::BranchAndBound: return "bnb";
    case SolverMode::ADMM: return "admm";
  }
  return "?";
}

SolverMode parse_solver_mode(std::string_view text) {
  if (text == "enumerate") return SolverMode::Enumerate;
  if (text == "bnb" || text == "branch-and-bound") return SolverMode::BranchAndBound;
  if (text == "admm") return SolverMode::ADMM;
  throw ConfigError("unknown solver mode '" + std::string(text) + "' (expected enumerate, bnb or admm)");
}

namespace {

struct ComponentResult {
  std::vector<int> atoms;
  Assignment assignment;
};

ComponentResult solve_component(const GroundProgram& gp, std::size_t k, const SolverConfig& cfg) {
  ComponentResult r;
  const MapProblem sub = gp.component_problem(k, &r.atoms);
  if (cfg.mode == SolverMode::ADMM) {
    SolverConfig serial = cfg;
    serial.execution = Execution::Serial;  // components already run concurrently
    r.assignment = map_admm(sub, serial);
    if (cfg.round_relaxed) r.assignment = round_assignment(r.assignment, sub, cfg.feasibility_tolerance);
  } else {
    r.assignment = map_exact(sub, cfg);
  }
  return r;
}

Solution gather(const GroundProgram& gp, std::vector<ComponentResult>& results) {
  Solution s;
  s.values.assign(gp.atoms.size(), 0.0);
  s.stats.components = results.size();
  for (auto& r : results) {
    for (std::size_t i = 0; i < r.atoms.size(); ++i)
      s.values[static_cast<std::size_t>(r.atoms[i])] = r.assignment.values[i];
    s.stats.nodes += r.assignment.nodes;
    s.stats.iterations += r.assignment.iterations;
    if (!r.assignment.converged) ++s.stats.non_converged;
  }
  return s;
}

}  // namespace

Solution solve_serial(const GroundProgram& gp, const SolverConfig& cfg) {
  std::vector<ComponentResult> results(gp.components.size());
  for (std::size_t k = 0; k < gp.components.size(); ++k) results[k] = solve_component(gp, k, cfg);
  return gather(gp, results);
}

Solution solve_parallel(const GroundProgram& gp, const SolverConfig& cfg) {
  const auto n = static_cast<long>(gp.components.size());
  std::vector<ComponentResult> results(gp.components.size());
  std::vector<std::exception_ptr> failures(results.size());
#ifdef _OPENMP
  const int threads = cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads();
#endif
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long k = 0; k < n; ++k) {
    try {
      results[static_cast<std::size_t>(k)] = solve_component(gp, static_cast<std::size_t>(k), cfg);
    } catch (...) {
      failures[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  // Report the first failing component, as the serial path would.
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return gather(gp, results);
}

Solution solve(const GroundProgram& gp, const SolverConfig& cfg) {
  return cfg.execution == Execution::Parallel ? solve_parallel(gp, cfg) : solve_serial(gp, cfg);
}

}  // namespace mframe
