#include <fstream>
#include <random>

#include "json.hpp"

#include "doctest.h"
#include "mframe/error.hpp"
#include "mframe/inference.hpp"
#include "support.hpp"

using namespace mframe;

namespace {

MapProblem one_group(std::vector<double> scores) {
  MapProblem p(scores.size());
  LinearExpr e;
  std::vector<int> g;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    // r1-style potential: psi = 1 - y, weight = score.
    HingePotential h;
    h.expr.terms.push_back({static_cast<int>(i), -1.0});
    h.expr.constant = 1.0;
    h.weight = scores[i];
    p.potentials.push_back(h);
    e.terms.push_back({static_cast<int>(i), 1.0});
    g.push_back(static_cast<int>(i));
  }
  e.constant = -1.0;
  p.constraints.push_back({e, Sense::Equal, "one"});
  p.groups.push_back(g);
  return p;
}

}  // namespace

TEST_CASE("single score row: argmax with objective equal to its score") {
  const auto p = one_group({0.9, 0.1, 0.0, 0.0, 0.0});
  for (auto mode : {SolverMode::Enumerate, SolverMode::BranchAndBound}) {
    SolverConfig cfg;
    cfg.mode = mode;
    const auto a = map_exact(p, cfg);
    CHECK(a.values == std::vector<double>{1, 0, 0, 0, 0});
    // score counts every potential's w(1 - psi): only the chosen label earns its weight
    CHECK(a.score == doctest::Approx(0.9).epsilon(1e-12));
  }
}

TEST_CASE("exact ties resolve to the lexicographically first option") {
  const auto p = one_group({0.5, 0.5, 0.2});
  CHECK(map_enumerate(p).values == std::vector<double>{1, 0, 0});
  CHECK(map_branch_and_bound(p).values == std::vector<double>{1, 0, 0});
}

TEST_CASE("branch-and-bound equals enumeration and brute force on random programs") {
  std::mt19937_64 rng(20240611);
  int compared = 0;
  for (int seed = 0; seed < 300 && compared < 100; ++seed) {
    const auto p = testkit::random_problem(rng);
    const auto oracle = testkit::brute_force(p);
    if (!oracle.feasible) {
      CHECK_THROWS_AS(map_enumerate(p), SolverError);
      CHECK_THROWS_AS(map_branch_and_bound(p), SolverError);
      continue;
    }
    ++compared;
    const auto e = map_enumerate(p);
    const auto b = map_branch_and_bound(p);
    CHECK(e.score == doctest::Approx(oracle.score).epsilon(1e-12));
    CHECK(b.score == e.score);  // bit-equal
    CHECK(b.values == e.values);
    CHECK(e.values == oracle.y);
    CHECK(p.count_violations(b.values) == 0);
    CHECK(b.nodes <= e.nodes * 2 + 1);
  }
  CHECK(compared == 100);
}

TEST_CASE("enumeration cap") {
  MapProblem p(22);
  SolverConfig cfg;
  cfg.mode = SolverMode::Enumerate;
  try {
    map_enumerate(p, cfg);
    FAIL("expected cap error");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("branch-and-bound") != std::string::npos);
  }
  CHECK_NOTHROW(map_branch_and_bound(p, cfg));
}

TEST_CASE("infeasible programs name a violated constraint") {
  MapProblem p(1);
  LinearExpr a;
  a.terms.push_back({0, 1.0});
  a.constant = -1.0;
  p.constraints.push_back({a, Sense::Equal, "force_one"});
  LinearExpr b;
  b.terms.push_back({0, 1.0});
  p.constraints.push_back({b, Sense::LessEqual, "force_zero"});
  for (auto solver : {map_enumerate, map_branch_and_bound}) {
    try {
      solver(p, {});
      FAIL("expected infeasibility");
    } catch (const SolverError& e) {
      const std::string msg = e.what();
      CHECK((msg.find("force_one") != std::string::npos || msg.find("force_zero") != std::string::npos));
    }
  }
}

TEST_CASE("scale invariance of the argmax") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    auto p = testkit::random_problem(rng, 10);
    if (!testkit::brute_force(p).feasible) continue;
    const auto base = map_branch_and_bound(p);
    for (auto& c : p.linear) c *= 3.5;
    p.constant *= 3.5;
    for (auto& h : p.potentials) h.weight *= 3.5;
    CHECK(map_branch_and_bound(p).values == base.values);
  }
}

TEST_CASE("raising the weight of a rule the optimum satisfies keeps the argmax") {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int i = 0; i < 200 && checked < 40; ++i) {
    auto p = testkit::random_problem(rng, 10);
    if (!testkit::brute_force(p).feasible) continue;
    const auto base = map_branch_and_bound(p);
    for (std::size_t r = 0; r < p.potentials.size(); ++r) {
      if (p.potentials[r].distance(base.values) > 0.0) continue;
      auto q = p;
      q.potentials[r].weight += 2.0;
      CHECK(map_branch_and_bound(q).values == base.values);
      ++checked;
    }
  }
  CHECK(checked >= 40);
}

TEST_CASE("loss augmentation") {
  const auto p = one_group({0.9, 0.1, 0.0});
  const std::vector<double> gold{1, 0, 0};
  CHECK(hamming(gold, gold) == 0.0);
  const auto aug = loss_augment(p, gold);
  for (const auto& y : {std::vector<double>{1, 0, 0}, std::vector<double>{0, 1, 0}, std::vector<double>{0, 0, 1}})
    CHECK(aug.score(y) == doctest::Approx(p.score(y) + hamming(y, gold)));

  SUBCASE("a margin larger than the number of atoms keeps gold") {
    const auto q = one_group({10.0, 0.0, 0.0});
    CHECK(loss_augmented_map(q, gold).values == gold);
  }
  SUBCASE("zero weights: the feasible assignment farthest from gold") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 30; ++i) {
      auto q = testkit::random_problem(rng, 10);
      for (auto& c : q.linear) c = 0.0;
      for (auto& h : q.potentials) h.weight = 0.0;
      const auto feasible = testkit::brute_force(q);
      if (!feasible.feasible) continue;
      // Oracle: maximum Hamming distance over feasible binary vectors.
      double far = -1.0;
      std::vector<double> y(q.num_vars);
      for (std::uint64_t bits = 0; bits < (1ULL << q.num_vars); ++bits) {
        for (std::size_t k = 0; k < q.num_vars; ++k) y[k] = (bits >> k) & 1U;
        if (testkit::reference_feasible(q, y)) far = std::max(far, hamming(y, feasible.y));
      }
      const auto a = loss_augmented_map(q, feasible.y);
      CHECK(hamming(a.values, feasible.y) == far);
    }
  }
}

TEST_CASE("ADMM: a satisfied rule has zero energy") {
  MapProblem p(1);
  LinearExpr e;  // body 1 => head: 1 - 0 - y
  e.terms.push_back({0, -1.0});
  e.constant = 0.0;
  p.potentials.push_back({e, 1.0, 1});
  LinearExpr fix;
  fix.terms.push_back({0, 1.0});
  fix.constant = -1.0;
  p.constraints.push_back({fix, Sense::Equal, "head"});
  const auto a = map_admm(p);
  CHECK(a.values[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(a.energy == doctest::Approx(0.0));
}

TEST_CASE("ADMM: body 1 => head with weight 2 sets the head") {
  MapProblem p(2);
  HingePotential h;
  h.expr.terms.push_back({0, -1.0});
  h.expr.constant = 1.0;
  h.weight = 2.0;
  p.potentials.push_back(h);
  LinearExpr g;
  g.terms = {{0, 1.0}, {1, 1.0}};
  g.constant = -1.0;
  p.constraints.push_back({g, Sense::Equal, "one"});
  p.groups.push_back({0, 1});
  SolverConfig cfg;
  cfg.admm.record_trace = true;
  const auto a = map_admm(p, cfg);
  CHECK(a.converged);
  CHECK(a.values[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(a.values[1] == doctest::Approx(0.0).epsilon(1e-4));
  CHECK(round_assignment(a, p).values == std::vector<double>{1, 0});
}

TEST_CASE("ADMM matches exact MAP on totally unimodular programs") {
  // Exactly-one groups coupled by implications y_a <= y_b between groups, with
  // linear hinges: the LP relaxation has integral vertices.
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    MapProblem p(8);
    p.groups = {{0, 1, 2, 3}, {4, 5, 6, 7}};
    for (const auto& g : p.groups) {
      LinearExpr e;
      for (int v : g) e.terms.push_back({v, 1.0});
      e.constant = -1.0;
      p.constraints.push_back({e, Sense::Equal, "one"});
      for (int v : g) {
        HingePotential h;
        h.expr.terms.push_back({v, -1.0});
        h.expr.constant = 1.0;
        h.weight = u(rng);
        p.potentials.push_back(h);
      }
    }
    for (int k = 0; k < 4; ++k) {
      LinearExpr c;
      c.terms = {{4 + k, 1.0}, {k, -1.0}};  // group 2 label k implies group 1 label k
      p.constraints.push_back({c, Sense::LessEqual, "link"});
    }
    const auto exact = map_exact(p);
    SolverConfig cfg;
    cfg.admm.max_iterations = 50000;
    const auto relaxed = map_admm(p, cfg);
    CHECK(relaxed.converged);
    CHECK(relaxed.score == doctest::Approx(exact.score).epsilon(1e-4));
    CHECK(std::abs(relaxed.score - exact.score) <= 1e-4);
  }
}

TEST_CASE("ADMM serial and parallel kernels agree exactly") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto p = testkit::random_problem(rng, 12, true);
    SolverConfig cfg;
    cfg.admm.max_iterations = 2000;
    const auto a = map_admm_serial(p, cfg);
    const auto b = map_admm_parallel(p, cfg);
    CHECK(a.values == b.values);
    CHECK(a.iterations == b.iterations);
  }
}

TEST_CASE("ADMM rejects negative weights on non-linear hinges") {
  MapProblem p(2);
  HingePotential h;
  h.expr.terms = {{0, 1.0}, {1, -1.0}};
  h.weight = -1.0;
  p.potentials.push_back(h);
  CHECK_THROWS_AS(map_admm(p), SolverError);
}

TEST_CASE("rounding") {
  MapProblem p(5);
  LinearExpr e;
  for (int i = 0; i < 5; ++i) e.terms.push_back({i, 1.0});
  e.constant = -1.0;
  p.constraints.push_back({e, Sense::Equal, "one"});
  p.groups.push_back({0, 1, 2, 3, 4});
  Assignment r;
  r.values = {0.6, 0.4, 0, 0, 0};
  CHECK(round_assignment(r, p).values == std::vector<double>{1, 0, 0, 0, 0});
  r.values = {0.0, 0.5, 0.5, 0, 0};
  CHECK(round_assignment(r, p).values == std::vector<double>{0, 1, 0, 0, 0});

  SUBCASE("repair respects an implication into an earlier group") {
    MapProblem q(4);
    q.groups = {{0, 1}, {2, 3}};
    for (const auto& g : q.groups) {
      LinearExpr x;
      for (int v : g) x.terms.push_back({v, 1.0});
      x.constant = -1.0;
      q.constraints.push_back({x, Sense::Equal, "one"});
    }
    LinearExpr c;  // y2 <= y0
    c.terms = {{2, 1.0}, {0, -1.0}};
    q.constraints.push_back({c, Sense::LessEqual, "c1"});
    Assignment rr;
    rr.values = {0.4, 0.6, 0.9, 0.1};
    CHECK(round_assignment(rr, q).values == std::vector<double>{0, 1, 0, 1});
  }

  SUBCASE("1000 random programs keep exactly-one") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int done = 0;
    for (int i = 0; i < 3000 && done < 1000; ++i) {
      auto q = testkit::random_problem(rng, 12);
      if (!testkit::brute_force(q).feasible) continue;
      Assignment x;
      x.values.resize(q.num_vars);
      for (auto& v : x.values) v = u(rng);
      const auto out = round_assignment(x, q);
      ++done;
      for (const auto& g : q.groups) {
        double s = 0;
        for (int v : g) s += out.values[static_cast<std::size_t>(v)];
        CHECK(s == 1.0);
      }
      CHECK(q.count_violations(out.values) == 0);
    }
    CHECK(done == 1000);
  }
}

TEST_CASE("ADMM reaches the convex optimum computed by an interior-point solver") {
  std::ifstream in(MFRAME_TEST_DATA "/admm_convex.json");
  REQUIRE(in);
  const auto fixtures = nlohmann::json::parse(in);
  REQUIRE(fixtures.size() == 40);
  for (const auto& f : fixtures) {
    MapProblem p(f["n"].get<std::size_t>());
    p.linear = f["lin"].get<std::vector<double>>();
    auto expr = [](const nlohmann::json& e) {
      LinearExpr x;
      if (e.contains("t"))
        for (const auto& t : e["t"]) x.terms.push_back({t[0].get<int>(), t[1].get<double>()});
      x.constant = e["c"].get<double>();
      return x;
    };
    if (f.contains("pot"))
      for (const auto& e : f["pot"]) p.potentials.push_back({expr(e), e["w"].get<double>(), e["x"].get<int>()});
    if (f.contains("con"))
      for (const auto& e : f["con"]) p.constraints.push_back({expr(e), e["eq"].get<bool>() ? Sense::Equal : Sense::LessEqual, ""});
    SolverConfig cfg;
    cfg.admm.max_iterations = 100000;
    const auto a = map_admm(p, cfg);
    CHECK(a.converged);
    CHECK(std::abs(a.energy - f["optimum"].get<double>()) <= 1e-4);
    CHECK(p.count_violations(a.values, 1e-4) == 0);
  }
}
