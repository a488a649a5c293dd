#include <algorithm>
#include <cmath>
#include <sstream>

#include "mframe/error.hpp"
#include "mframe/inference.hpp"

namespace mframe {

namespace {

enum class FactorKind : std::uint8_t { Hinge1, Hinge2, LessEqual, Equal };

struct Factor {
  FactorKind kind;
  double weight;
  double b;      // expression constant
  double norm2;  // squared norm of the coefficient vector
  std::size_t begin, end;  // slot range
};

// Consensus ADMM over local copies: each hinge or constraint owns copies of
// its variables; the consensus variable z carries the box [0,1] and the
// linear energy terms.
class Admm {
 public:
  Admm(const MapProblem& p, const AdmmConfig& cfg) : p_(p), cfg_(cfg), grad_(p.num_vars, 0.0) {
    for (std::size_t i = 0; i < p.num_vars; ++i) grad_[i] = -p.linear[i];
    for (std::size_t r = 0; r < p.potentials.size(); ++r) {
      const auto& pot = p.potentials[r];
      if (pot.weight == 0.0 || pot.expr.box_max() <= 0.0) continue;
      if (pot.exponent == 1 && pot.expr.box_min() >= 0.0) {
        // Never clipped on the box: the hinge is linear.
        for (const auto& t : pot.expr.terms) grad_[static_cast<std::size_t>(t.var)] += pot.weight * t.value;
        continue;
      }
      if (pot.weight < 0.0) {
        std::ostringstream msg;
        msg << "potential " << r << " has negative weight " << pot.weight
            << " on a non-linear hinge; the relaxed objective is not convex";
        throw SolverError(msg.str());
      }
      add(pot.exponent == 2 ? FactorKind::Hinge2 : FactorKind::Hinge1, pot.weight, pot.expr);
    }
    for (const auto& c : p.constraints)
      add(c.sense == Sense::Equal ? FactorKind::Equal : FactorKind::LessEqual, 0.0, c.expr);

    // Slots grouped by variable for the consensus step.
    std::vector<std::size_t> count(p.num_vars + 1, 0);
    for (int v : var_) ++count[static_cast<std::size_t>(v) + 1];
    for (std::size_t i = 0; i < p.num_vars; ++i) count[i + 1] += count[i];
    by_var_offset_ = count;
    by_var_.assign(var_.size(), 0);
    std::vector<std::size_t> fill(count.begin(), count.end() - 1);
    for (std::size_t s = 0; s < var_.size(); ++s) by_var_[fill[static_cast<std::size_t>(var_[s])]++] = s;
  }

  template <bool Parallel>
  Assignment run() {
    const std::size_t n = p_.num_vars;
    const std::size_t m = var_.size();
    const double rho = cfg_.step;
    std::vector<double> z(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (by_var_offset_[i] == by_var_offset_[i + 1]) z[i] = grad_[i] < 0.0 ? 1.0 : 0.0;
    std::vector<double> x(m, 0.0), u(m, 0.0), z_old(n, 0.0);

    Assignment out;
    out.integral = false;
    out.converged = false;
    std::vector<double> best = z;
    double best_violation = INFINITY;
    double best_energy = INFINITY;

    const auto nf = static_cast<long>(factors_.size());
    const auto nv = static_cast<long>(n);
    int it = 0;
    for (; it < cfg_.max_iterations; ++it) {
#pragma omp parallel for schedule(static) if (Parallel)
      for (long f = 0; f < nf; ++f) local_step(factors_[static_cast<std::size_t>(f)], z, u, x, rho);

      z_old = z;
#pragma omp parallel for schedule(static) if (Parallel)
      for (long iv = 0; iv < nv; ++iv) {
        const auto i = static_cast<std::size_t>(iv);
        const std::size_t lo = by_var_offset_[i], hi = by_var_offset_[i + 1];
        if (lo == hi) continue;
        double sum = 0.0;
        for (std::size_t k = lo; k < hi; ++k) sum += x[by_var_[k]] + u[by_var_[k]];
        z[i] = std::clamp((sum - grad_[i] / rho) / static_cast<double>(hi - lo), 0.0, 1.0);
      }

      double r2 = 0.0, s2 = 0.0, x2 = 0.0, zs2 = 0.0, u2 = 0.0;
      for (std::size_t s = 0; s < m; ++s) {
        const double zj = z[static_cast<std::size_t>(var_[s])];
        u[s] += x[s] - zj;
        const double dz = zj - z_old[static_cast<std::size_t>(var_[s])];
        r2 += (x[s] - zj) * (x[s] - zj);
        s2 += dz * dz;
        x2 += x[s] * x[s];
        zs2 += zj * zj;
        u2 += u[s] * u[s];
      }

      const double energy = p_.energy(z);
      if (cfg_.record_trace) out.energy_trace.push_back(energy);
      double violation = 0.0;
      for (const auto& c : p_.constraints) violation = std::max(violation, c.violation(z));
      const bool better = violation <= 1e-6 ? (best_violation > 1e-6 || energy < best_energy) : violation < best_violation;
      if (better) {
        best = z;
        best_violation = violation;
        best_energy = energy;
      }

      const double sqrt_m = std::sqrt(static_cast<double>(m));
      const double eps_pri = sqrt_m * cfg_.abs_tolerance + cfg_.rel_tolerance * std::max(std::sqrt(x2), std::sqrt(zs2));
      const double eps_dual = sqrt_m * cfg_.abs_tolerance + cfg_.rel_tolerance * rho * std::sqrt(u2);
      if (std::sqrt(r2) <= eps_pri && rho * std::sqrt(s2) <= eps_dual) {
        out.converged = true;
        ++it;
        break;
      }
    }
    out.iterations = it;
    out.values = out.converged ? z : best;
    out.energy = p_.energy(out.values);
    out.score = p_.score(out.values);
    return out;
  }

 private:
  const MapProblem& p_;
  const AdmmConfig& cfg_;
  std::vector<double> grad_;
  std::vector<Factor> factors_;
  std::vector<int> var_;     // per slot
  std::vector<double> coef_; // per slot
  std::vector<std::size_t> by_var_offset_;
  std::vector<std::size_t> by_var_;

  void add(FactorKind kind, double weight, const LinearExpr& expr) {
    Factor f{kind, weight, expr.constant, 0.0, var_.size(), 0};
    for (const auto& t : expr.terms) {
      var_.push_back(t.var);
      coef_.push_back(t.value);
      f.norm2 += t.value * t.value;
    }
    f.end = var_.size();
    if (f.end == f.begin) return;  // constant expression, nothing to optimize
    factors_.push_back(f);
  }

  void local_step(const Factor& f, const std::vector<double>& z, const std::vector<double>& u, std::vector<double>& x,
                  double rho) const {
    // v = z - u; x = argmin  phi(x) + rho/2 |x - v|^2
    double av = f.b;
    for (std::size_t s = f.begin; s < f.end; ++s) {
      x[s] = z[static_cast<std::size_t>(var_[s])] - u[s];
      av += coef_[s] * x[s];
    }
    auto shift = [&](double t) {
      for (std::size_t s = f.begin; s < f.end; ++s) x[s] -= t * coef_[s];
    };
    switch (f.kind) {
      case FactorKind::Equal:
        shift(av / f.norm2);
        return;
      case FactorKind::LessEqual:
        if (av > 0.0) shift(av / f.norm2);
        return;
      case FactorKind::Hinge1: {
        if (av <= 0.0) return;
        const double step = f.weight / rho;
        // Full gradient step if it stays on the linear side, else the kink.
        if (av - step * f.norm2 >= 0.0) {
          shift(step);
        } else {
          shift(av / f.norm2);
        }
        return;
      }
      case FactorKind::Hinge2:
        if (av <= 0.0) return;
        shift(2.0 * f.weight * av / (rho + 2.0 * f.weight * f.norm2));
        return;
    }
  }
};

}  // namespace

Assignment map_admm_serial(const MapProblem& p, const SolverConfig& cfg) {
  p.check();
  return Admm(p, cfg.admm).run<false>();
}

Assignment map_admm_parallel(const MapProblem& p, const SolverConfig& cfg) {
  p.check();
  return Admm(p, cfg.admm).run<true>();
}

Assignment map_admm(const MapProblem& p, const SolverConfig& cfg) {
  return cfg.execution == Execution::Parallel ? map_admm_parallel(p, cfg) : map_admm_serial(p, cfg);
}

}  // namespace mframe
