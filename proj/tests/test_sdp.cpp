#include "doctest.h"

#include <random>

#include <nlohmann/json.hpp>

#include "steerdet/conic.hpp"

using namespace steerdet;

namespace {

std::mt19937_64 rng(991100);

Rmat random_sym(int n) {
  std::normal_distribution<double> g;
  Rmat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  return Rmat(0.5 * (m + m.transpose()));
}

// ties every entry of block `blk` to a constant symmetric target M - t*shift
void tie_block(ConicProblem& p, int blk, const Rmat& target, int tvar,
               const Rmat& shift) {
  const int n = static_cast<int>(target.rows());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Equality eq;
      eq.entries.push_back({blk, i, j, 1.0});
      if (tvar >= 0 && shift(i, j) != 0.0) eq.free_coefs.push_back({tvar, shift(i, j)});
      eq.rhs = target(i, j);
      eq.name = "tie(" + std::to_string(i) + "," + std::to_string(j) + ")";
      p.add_equality(std::move(eq));
    }
}

}  // namespace

TEST_CASE("max t with diag(1,2) - t I PSD gives the smallest eigenvalue") {
  // variables: PSD block P, free t; constraint P + t I = diag(1,2); max t
  ConicProblem p;
  int blk = p.add_block(2);
  int t = p.add_free();
  p.objective_free[t] = 1.0;
  Rmat target = Rmat::Zero(2, 2);
  target(0, 0) = 1;
  target(1, 1) = 2;
  tie_block(p, blk, target, t, Rmat::Identity(2, 2));

  ConicSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.rel_gap <= 1e-8);

  // dual multiplier pattern: projector onto the minimal eigenvector.
  // Equalities are ordered (0,0),(0,1),(1,1); Y = sum y_t basis_t should be
  // proportional to diag(1, 0).
  CHECK(sol.duals[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.duals[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(sol.duals[2] == doctest::Approx(0.0).epsilon(1e-6));

  auto rep = extract_duals(p, sol);
  CHECK(rep.multipliers.size() == 3);
  for (double c : rep.block_complementarity) CHECK(std::abs(c) < 1e-6);
}

TEST_CASE("max tr(CX), tr(X)=1 equals the largest eigenvalue of C") {
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 3 + (trial % 3);
    Rmat c = random_sym(n);
    ConicProblem p;
    int blk = p.add_block(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (c(i, j) != 0.0) p.objective_entries.push_back({blk, i, j, c(i, j)});
    Equality tr;
    for (int i = 0; i < n; ++i) tr.entries.push_back({blk, i, i, 1.0});
    tr.rhs = 1.0;
    tr.name = "trace";
    p.add_equality(std::move(tr));

    ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);

    // oracle: power iteration on shifted C
    double s = c.cwiseAbs().sum() + 1.0;
    Rmat shifted = s * Rmat::Identity(n, n) + c;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
    double lmax = 0.0;
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd w = shifted * v;
      lmax = w.norm();
      v = w / lmax;
    }
    lmax -= s;
    CHECK(sol.primal_objective == doctest::Approx(lmax).epsilon(1e-6));
    CHECK(std::abs(sol.primal_objective - sol.dual_objective) <=
          1e-6 * std::max(1.0, std::abs(lmax)));
  }
}

TEST_CASE("infeasible trace constraint yields a Farkas certificate") {
  ConicProblem p;
  int blk = p.add_block(3);
  Equality tr;
  for (int i = 0; i < 3; ++i) tr.entries.push_back({blk, i, i, 1.0});
  tr.rhs = -1.0;
  tr.name = "trace";
  p.add_equality(std::move(tr));

  ConicSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::PrimalInfeasible);
  // certificate y: b.y > 0 and A*(y) <= 0; here A*(y) = y I, b = -1
  double by = -1.0 * sol.duals[0];
  CHECK(by > 0.0);
  CHECK(sol.duals[0] < 0.0);
}

TEST_CASE("unbounded objective yields a dual infeasibility certificate") {
  // max t with X - t I = 0: X = t I PSD for all t >= 0, unbounded above
  ConicProblem p;
  int blk = p.add_block(2);
  int t = p.add_free();
  p.objective_free[t] = 1.0;
  tie_block(p, blk, Rmat::Zero(2, 2), t, -Rmat::Identity(2, 2));
  ConicSolution sol = solve(p);
  CHECK(sol.status == SolveStatus::DualInfeasible);
}

TEST_CASE("equality-only LP embedded as diagonal SDP matches vertex oracle") {
  // min c.x s.t. Ax = b, x >= 0  (maximize -c.x), 3 vars, 2 constraints
  Eigen::Matrix<double, 2, 3> A;
  A << 1, 1, 1, 1, -1, 2;
  Eigen::Vector2d b(1.0, 0.5);
  Eigen::Vector3d c(1.0, 2.0, 0.5);

  ConicProblem p;
  std::vector<int> blocks;
  for (int j = 0; j < 3; ++j) blocks.push_back(p.add_block(1));
  for (int j = 0; j < 3; ++j) p.objective_entries.push_back({blocks[j], 0, 0, -c(j)});
  for (int i = 0; i < 2; ++i) {
    Equality eq;
    for (int j = 0; j < 3; ++j)
      if (A(i, j) != 0.0) eq.entries.push_back({blocks[j], 0, 0, A(i, j)});
    eq.rhs = b(i);
    eq.name = "row" + std::to_string(i);
    p.add_equality(std::move(eq));
  }
  ConicSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);

  // textbook oracle: enumerate all 2x2 basic solutions, keep feasible ones
  double best = 1e300;
  Eigen::Vector2d ybest = Eigen::Vector2d::Zero();
  for (int j1 = 0; j1 < 3; ++j1)
    for (int j2 = j1 + 1; j2 < 3; ++j2) {
      Eigen::Matrix2d B;
      B.col(0) = A.col(j1);
      B.col(1) = A.col(j2);
      if (std::abs(B.determinant()) < 1e-12) continue;
      Eigen::Vector2d xb = B.inverse() * b;
      if (xb.minCoeff() < -1e-12) continue;
      double val = c(j1) * xb(0) + c(j2) * xb(1);
      if (val < best) {
        best = val;
        Eigen::Vector2d cb(c(j1), c(j2));
        ybest = B.transpose().inverse() * cb;  // duals of the optimal basis
      }
    }
  CHECK(-sol.primal_objective == doctest::Approx(best).epsilon(1e-7));
  // duals of the min LP are -duals of our max problem
  CHECK(-sol.duals[0] == doctest::Approx(ybest(0)).epsilon(1e-6));
  CHECK(-sol.duals[1] == doctest::Approx(ybest(1)).epsilon(1e-6));
}

TEST_CASE("zero objective feasibility returns optimal with zero duals") {
  ConicProblem p;
  int blk = p.add_block(2);
  Equality tr;
  for (int i = 0; i < 2; ++i) tr.entries.push_back({blk, i, i, 1.0});
  tr.rhs = 1.0;
  tr.name = "trace";
  p.add_equality(std::move(tr));
  ConicSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.primal_objective) < 1e-8);
  CHECK(std::abs(sol.duals[0]) < 1e-6);
  CHECK_THROWS_AS(extract_duals(p, ConicSolution{}), StateError);
}

TEST_CASE("scaling invariance of status and argmax pattern") {
  Rmat c = random_sym(4);
  for (double scale : {1.0, 7.5}) {
    ConicProblem p;
    int blk = p.add_block(4);
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j)
        p.objective_entries.push_back({blk, i, j, scale * c(i, j)});
    Equality tr;
    for (int i = 0; i < 4; ++i) tr.entries.push_back({blk, i, i, 1.0});
    tr.rhs = 1.0;
    p.add_equality(std::move(tr));
    static double base = 0.0;
    static Rmat xbase;
    ConicSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    if (scale == 1.0) {
      base = sol.primal_objective;
      xbase = sol.primal_blocks[0];
    } else {
      CHECK(sol.primal_objective / scale == doctest::Approx(base).epsilon(1e-7));
      CHECK((sol.primal_blocks[0] - xbase).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("random feasibility battery never reports infeasible") {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 4;
    Rmat g = random_sym(n);
    Rmat x0 = g * g.transpose() + 0.1 * Rmat::Identity(n, n);  // known point
    ConicProblem p;
    int blk = p.add_block(n);
    for (int k = 0; k < n; ++k) {
      Equality eq;
      Rmat a = random_sym(n);
      double rhs = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          eq.entries.push_back({blk, i, j, a(i, j)});
          rhs += (i == j ? 1.0 : 2.0) * a(i, j) * x0(i, j);
        }
      eq.rhs = rhs;
      p.add_equality(std::move(eq));
    }
    ConicSolution sol = solve(p);
    CHECK(sol.status == SolveStatus::Optimal);
  }
}

TEST_CASE("problem dump is self-describing json") {
  ConicProblem p;
  int blk = p.add_block(2);
  int t = p.add_free();
  p.objective_free[t] = 1.0;
  tie_block(p, blk, Rmat::Identity(2, 2), t, Rmat::Identity(2, 2));
  nlohmann::json j = p.to_json();
  CHECK(j.at("blocks").size() == 1);
  CHECK(j.at("num_free").get<int>() == 1);
  CHECK(j.at("equalities").size() == 3);
}

TEST_CASE("deterministic given identical inputs") {
  Rmat c = random_sym(5);
  auto build = [&]() {
    ConicProblem p;
    int blk = p.add_block(5);
    for (int i = 0; i < 5; ++i)
      for (int j = i; j < 5; ++j)
        p.objective_entries.push_back({blk, i, j, c(i, j)});
    Equality tr;
    for (int i = 0; i < 5; ++i) tr.entries.push_back({blk, i, i, 1.0});
    tr.rhs = 1.0;
    p.add_equality(std::move(tr));
    return p;
  };
  ConicSolution s1 = solve(build());
  ConicSolution s2 = solve(build());
  CHECK(s1.primal_objective == s2.primal_objective);
  CHECK((s1.primal_blocks[0] - s2.primal_blocks[0]).cwiseAbs().maxCoeff() == 0.0);
}
