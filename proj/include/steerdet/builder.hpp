#ifndef STEERDET_BUILDER_HPP
#define STEERDET_BUILDER_HPP

// Helper layer for assembling conic problems from complex Hermitian
// variables. Every Hermitian variable is carried by a PSD block holding its
// real embedding; scalar equality rows pair Hermitian test matrices against
// the variables, so dual multipliers reconstruct Hermitian witness blocks.

#include <string>
#include <vector>

#include "steerdet/conic.hpp"
#include "steerdet/herm.hpp"

namespace steerdet {

struct HermVar {
  int block = -1;
  int d = 0;
};

// Linear operations that may wrap a variable inside an expression.
struct HermTerm {
  enum class Op { Id, PartialTranspose, PartialTrace, SubBlock, Permute };
  double coef = 1.0;
  HermVar var;
  Op op = Op::Id;
  std::vector<int> dims;   // party dims of the variable (PT/PTrace/Permute)
  int party = 0;           // PartialTranspose
  std::vector<int> keep;   // PartialTrace
  std::vector<int> perm;   // Permute: result party i = var party perm[i]
  int row0 = 0, col0 = 0;  // SubBlock corner
};

// Affine Hermitian-matrix expression: sum of terms, free-scalar terms with
// constant matrix shapes, and a constant.
struct HermExpr {
  int d = 0;
  std::vector<HermTerm> terms;
  std::vector<std::pair<int, Cmat>> free_terms;  // free var index, shape
  Cmat constant;

  static HermExpr of(const HermVar& v, double coef = 1.0);
  HermExpr& add(const HermVar& v, double coef = 1.0);
  HermExpr& add_free(int var, const Cmat& shape);
  HermExpr& add_const(const Cmat& c);
  HermExpr& add_term(HermTerm t);
};

HermTerm pt_term(const HermVar& v, const std::vector<int>& dims, int party,
                 double coef = 1.0);
HermTerm ptrace_term(const HermVar& v, const std::vector<int>& dims,
                     const std::vector<int>& keep, double coef = 1.0);
HermTerm subblock_term(const HermVar& v, int row0, int col0, int d,
                       double coef = 1.0);
HermTerm permute_term(const HermVar& v, const std::vector<int>& dims,
                      const std::vector<int>& perm, double coef = 1.0);

class ProblemBuilder {
 public:
  ConicProblem problem;

  // Hermitian PSD variable of complex dimension d (block of size 2d).
  HermVar add_herm_psd(int d);

  int add_free();

  // expr == rhs for Hermitian-valued expressions; emits d^2 scalar rows in
  // the orthonormal Hermitian basis order. Returns the first row index.
  int add_herm_equality(const HermExpr& expr, const Cmat& rhs,
                        const std::string& name);

  // expr == rhs entrywise for general complex-valued expressions; emits
  // 2 d^2 rows (real, then imaginary part, row-major). Returns first index.
  int add_entry_equality(const HermExpr& expr, const Cmat& rhs,
                         const std::string& name);

  // PSD membership of an affine expression: fresh Hermitian variable tied
  // entrywise to the expression.
  HermVar require_psd(const HermExpr& expr, const std::string& name);

  // objective <C, var> contribution (maximization)
  void add_objective(const HermVar& v, const Cmat& c);

  // Hermitian readout of a solved block.
  static Cmat value(const ConicSolution& sol, const HermVar& v);
  // Witness-style reconstruction: sum_t duals[first+t] H_t over the
  // Hermitian basis of dimension d.
  static Cmat dual_block(const ConicSolution& sol, int first_row, int d);

 private:
  // appends coef * E(K)/2 onto the entry list of var's block
  static void accumulate(std::vector<ConstraintEntry>& entries, int block,
                         const Cmat& k, double coef);
  int emit_row(const HermExpr& expr, const Cmat& test, double rhs,
               const std::string& name);
};

// Adjoint pullback of the wrapped operation: <H, Op(M)> = <pullback, M>.
Cmat pullback(const HermTerm& term, const Cmat& h);

}  // namespace steerdet

#endif
