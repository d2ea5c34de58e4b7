#ifndef STEERDET_HERM_HPP
#define STEERDET_HERM_HPP

// Dense complex Hermitian linear algebra primitives.
//
// Tensor index convention used throughout the project: party 0 is the
// slowest-varying index, i.e. kron(A, B) places A on the leftmost party.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "steerdet/errors.hpp"

namespace steerdet {

using Cmat = Eigen::MatrixXcd;
using Rmat = Eigen::MatrixXd;
using cdouble = std::complex<double>;

inline constexpr double kHermTol = 1e-9;

// Max-entry deviation from Hermitian symmetry.
double herm_deviation(const Cmat& m);

// Throws HermiticityError if herm_deviation(m) > tol.
void require_hermitian(const Cmat& m, double tol = kHermTol);

// (M + M†)/2, used after accumulating floating-point sums.
Cmat resymmetrize(const Cmat& m);

// Kronecker product, first factor on the slowest index.
Cmat kron(const Cmat& a, const Cmat& b);
Cmat kron(const std::vector<Cmat>& factors);

// Partial trace over the parties NOT in `keep`. `dims` lists the dimension
// of every party in order; their product must equal the matrix dimension.
// `keep` must be sorted ascending. Result parties keep their relative order.
Cmat partial_trace(const Cmat& m, const std::vector<int>& dims,
                   const std::vector<int>& keep);

// Transpose of a single party's factor.
Cmat partial_transpose(const Cmat& m, const std::vector<int>& dims, int party);

// Reorder tensor factors: result party i is input party perm[i].
Cmat permute_parties(const Cmat& m, const std::vector<int>& dims,
                     const std::vector<int>& perm);

// Smallest eigenvalue; input must be Hermitian within 1e-9.
double min_eig(const Cmat& m);

// Pauli matrices; axis 0..3 = {I, X, Y, Z}.
const Cmat& pauli(int axis);

// Coefficients c_t of M = sum_t c_t sigma^{t_1} x ... x sigma^{t_n} for an
// n-qubit Hermitian M, indexed by the base-4 integer t (party 0 slowest).
// Throws DimensionError unless dim(M) is a power of two.
std::vector<double> pauli_expand(const Cmat& m);

// Inverse of pauli_expand for n qubits.
Cmat pauli_reconstruct(const std::vector<double>& coeff, int nqubits);

// [[Re M, -Im M], [Im M, Re M]]; PSD iff M is PSD, each eigenvalue doubled.
Rmat real_embedding(const Cmat& m);

// Complex readout of a real-embedded matrix: averages the two diagonal
// blocks and antisymmetrizes the off-diagonal ones, so that
// complex_readout(real_embedding(M)) == M for every (not necessarily
// Hermitian) M, and the readout of any symmetric PSD matrix is PSD.
Cmat complex_readout(const Rmat& x);

// Orthonormal Hermitian basis of d x d matrices (Frobenius inner product):
// first the d diagonal units E_ii, then for each i<j the symmetric and
// antisymmetric pair (e_i e_j^T + e_j e_i^T)/sqrt(2), i(e_i e_j^T - e_j e_i^T)/sqrt(2).
// Used to turn block equalities into scalar equality rows and to rebuild
// witness blocks from dual multipliers.
int herm_basis_size(int d);
Cmat herm_basis_element(int d, int t);
std::vector<double> herm_basis_coords(const Cmat& m);
Cmat herm_from_coords(const std::vector<double>& coords, int d);

}  // namespace steerdet

#endif
