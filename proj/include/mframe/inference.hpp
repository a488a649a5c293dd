#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mframe/grounding.hpp"
#include "mframe/map_problem.hpp"

namespace mframe {

enum class SolverMode : std::uint8_t { Enumerate, BranchAndBound, ADMM };
enum class Execution : std::uint8_t { Serial, Parallel };

std::string_view name_of(SolverMode mode);
SolverMode parse_solver_mode(std::string_view text);

struct AdmmConfig {
  double step = 1.0;  // augmented-Lagrangian penalty
  int max_iterations = 25000;
  double abs_tolerance = 1e-7;
  double rel_tolerance = 1e-6;
  bool record_trace = false;
};

struct SolverConfig {
  SolverMode mode = SolverMode::BranchAndBound;
  std::uint64_t enumeration_cap = std::uint64_t{1} << 20;
  AdmmConfig admm;
  double feasibility_tolerance = 1e-6;
  double bound_slack = 1e-6;
  // ADMM results are rounded to an integral assignment by solve().
  bool round_relaxed = true;
  Execution execution = Execution::Parallel;
  int jobs = 0;  // 0: OpenMP default
};

struct Assignment {
  std::vector<double> values;
  double score = 0.0;   // MapProblem::score
  double energy = 0.0;  // MapProblem::energy
  bool integral = true;
  bool converged = true;
  int iterations = 0;
  std::uint64_t nodes = 0;
  std::vector<double> energy_trace;  // ADMM, when recorded
};

// Globally optimal integral assignment. Among optima the one whose per-group
// option indices (then free-variable values) are lexicographically smallest.
Assignment map_enumerate(const MapProblem& problem, const SolverConfig& cfg = {});
Assignment map_branch_and_bound(const MapProblem& problem, const SolverConfig& cfg = {});
Assignment map_exact(const MapProblem& problem, const SolverConfig& cfg = {});

// First feasible integral assignment in option order, ignoring the objective.
std::optional<std::vector<double>> find_feasible(const MapProblem& problem, double tol = 1e-6);

// Relaxed MAP: minimizes energy over [0,1]^n subject to the linear
// constraints, by consensus ADMM.
Assignment map_admm(const MapProblem& problem, const SolverConfig& cfg = {});

// Per exactly-one group in order, the highest-valued option that keeps every
// constraint satisfiable; then free variables by threshold 0.5.
Assignment round_assignment(const Assignment& relaxed, const MapProblem& problem, double tol = 1e-6);

// Adds the Hamming loss against `gold` to the score.
MapProblem loss_augment(const MapProblem& problem, const std::vector<double>& gold);
double hamming(const std::vector<double>& a, const std::vector<double>& b);
Assignment loss_augmented_map(const MapProblem& problem, const std::vector<double>& gold, const SolverConfig& cfg = {});

struct SolveStats {
  std::size_t components = 0;
  std::uint64_t nodes = 0;
  long iterations = 0;
  std::size_t non_converged = 0;
};

struct Solution {
  std::vector<double> values;  // indexed by atom id
  SolveStats stats;
};

// Solves every component independently and scatters the result into atom
// order. Serial and parallel execution produce identical values.
Solution solve(const GroundProgram& gp, const SolverConfig& cfg = {});
Solution solve_serial(const GroundProgram& gp, const SolverConfig& cfg);
Solution solve_parallel(const GroundProgram& gp, const SolverConfig& cfg);

// ADMM with the per-factor and per-variable loops run serially or under OpenMP.
Assignment map_admm_serial(const MapProblem& problem, const SolverConfig& cfg);
Assignment map_admm_parallel(const MapProblem& problem, const SolverConfig& cfg);

}  // namespace mframe
