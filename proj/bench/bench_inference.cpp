// Grounding and MAP inference throughput on synthetic corpora. The serial and
// OpenMP ADMM paths run the same program so their timings compare directly.

#include <random>

#include <benchmark/benchmark.h>

#include "mframe/error.hpp"
#include "mframe/grounding.hpp"
#include "mframe/inference.hpp"
#include "mframe/rule_dsl.hpp"
#include "mframe/synthetic.hpp"
#include "support.hpp"

using namespace mframe;

namespace {

Corpus corpus_of(std::int64_t tweets) {
  SyntheticConfig sc;
  sc.tweets = static_cast<std::size_t>(tweets);
  sc.names = static_cast<std::size_t>(tweets);  // keeps c3 components small as the corpus grows
  sc.seed = 42;
  return synthetic_corpus(sc);
}

GroundProgram weighted(const Program& program, const KnowledgeBase& kb) {
  auto gp = ground(program, kb);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  apply_weights(gp, [&](const GroundRule&) { return u(rng); });
  gp.partition();
  return gp;
}

void BM_Ground(benchmark::State& state) {
  const auto program = load_program(MFRAME_DATA_DIR "/morality.rules");
  const auto corpus = corpus_of(state.range(0));
  const KnowledgeBase kb(corpus);
  for (auto _ : state) benchmark::DoNotOptimize(ground(program, kb));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BranchAndBound(benchmark::State& state) {
  const auto program = load_program(MFRAME_DATA_DIR "/morality.rules");
  const auto corpus = corpus_of(state.range(0));
  const KnowledgeBase kb(corpus);
  const auto gp = weighted(program, kb);
  std::vector<MapProblem> parts;
  for (std::size_t k = 0; k < gp.components.size(); ++k) parts.push_back(gp.component_problem(k));
  for (auto _ : state)
    for (const auto& p : parts) benchmark::DoNotOptimize(map_branch_and_bound(p));
  state.counters["components"] = static_cast<double>(parts.size());
}

void BM_RandomProgram(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<MapProblem> problems;
  for (int i = 0; i < 64; ++i) problems.push_back(testkit::random_problem(rng, static_cast<int>(state.range(0))));
  for (auto _ : state)
    for (const auto& p : problems) {
      try {
        benchmark::DoNotOptimize(map_branch_and_bound(p));
      } catch (const SolverError&) {
      }
    }
}

template <Assignment (*Solve)(const MapProblem&, const SolverConfig&)>
void BM_Admm(benchmark::State& state) {
  const auto program = load_program(MFRAME_DATA_DIR "/morality.rules");
  const auto corpus = corpus_of(state.range(0));
  const KnowledgeBase kb(corpus);
  const auto gp = weighted(program, kb);
  SolverConfig cfg;
  cfg.admm.max_iterations = 500;
  cfg.admm.abs_tolerance = 0.0;  // fixed iteration count
  cfg.admm.rel_tolerance = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(Solve(gp.problem, cfg));
  state.counters["potentials"] = static_cast<double>(gp.problem.potentials.size());
}

}  // namespace

BENCHMARK(BM_Ground)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BranchAndBound)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomProgram)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Admm<map_admm_serial>)->Name("BM_AdmmSerial")->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Admm<map_admm_parallel>)->Name("BM_AdmmParallel")->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
