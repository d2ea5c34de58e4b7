#ifndef STEERDET_CONIC_HPP
#define STEERDET_CONIC_HPP

// Standard-form conic problem container and the embedded dense primal-dual
// interior-point solver.
//
//   maximize    <C, X> + c_f . u
//   subject to  <A_i, X> + B_i . u = b_i     (i = 1..m)
//               X  block-diagonal PSD, u free
//
// All block matrices are real symmetric; complex Hermitian data enters
// through the real embedding upstream.

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "steerdet/herm.hpp"

namespace steerdet {

// Symmetric coefficient entry: value at (row, col) and (col, row) of `block`.
struct ConstraintEntry {
  int block;
  int row, col;  // row <= col
  double value;
};

struct Equality {
  std::vector<ConstraintEntry> entries;
  std::vector<std::pair<int, double>> free_coefs;
  double rhs = 0.0;
  std::string name;
};

struct ConicProblem {
  std::vector<int> block_dims;
  int num_free = 0;
  std::vector<ConstraintEntry> objective_entries;  // C
  std::vector<double> objective_free;              // c_f
  std::vector<Equality> equalities;

  int add_block(int dim);
  int add_free();
  int add_equality(Equality eq);  // returns constraint index

  nlohmann::json to_json() const;
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, NumericalTrouble };

std::string to_string(SolveStatus s);

struct SolveOptions {
  double tol_feas = 1e-8;
  double tol_gap = 1e-8;
  int max_iters = 200;
  double regularization = 1e-9;
  bool presolve = true;  // drop linearly dependent equality rows
  bool verbose = false;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalTrouble;
  std::vector<Rmat> primal_blocks;   // X
  std::vector<double> free_values;   // u
  std::vector<double> duals;         // y, scaled for the maximization problem
  std::vector<Rmat> dual_blocks;     // slack S = A*(y) - C  (PSD at optimality)
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double rel_gap = 0.0;
  int iterations = 0;
  std::string message;
};

ConicSolution solve(const ConicProblem& prob, const SolveOptions& opts = {});

struct DualReport {
  std::vector<std::pair<std::string, double>> multipliers;
  std::vector<double> block_complementarity;  // <X_b, S_b> per block
};

// Named multipliers of an Optimal solution; throws StateError otherwise.
DualReport extract_duals(const ConicProblem& prob, const ConicSolution& sol);

}  // namespace steerdet

#endif
