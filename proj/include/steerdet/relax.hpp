#ifndef STEERDET_RELAX_HPP
#define STEERDET_RELAX_HPP

// Convex-set relaxations: k-symmetric PPT extensions and the level-1
// moment-matrix outer approximation of quantum-realizable assemblages.

#include <functional>
#include <string>
#include <vector>

#include "steerdet/builder.hpp"

namespace steerdet {

struct SymExtensionSpec {
  int k = 1;            // extension order
  int d_ext = 2;        // dimension of the extended party
  int d_other = 2;      // dimension of the other party
  int extend_party = 0; // which factor of the bipartite block gets extended
};

// Adds the variables and constraints of a k-symmetric PPT extension and
// returns an expression for the base bipartite matrix (party order of the
// base is [party0, party1] regardless of which one is extended).
// k = 1 reduces to {M PSD, M^{T} on one party PSD} with no extension.
HermExpr build_sym_constraints(ProblemBuilder& pb, const SymExtensionSpec& spec,
                               const std::string& name);

struct MomentMatrixSpec {
  int m1 = 3;  // inputs of the first untrusted party
  int m2 = 3;  // inputs of the second untrusted party
  int d_t = 2; // dimension of the trusted party
  int level = 1;
};

// Level-1 word list {1, A_x, B_y, A_x B_y}; binary outcomes are folded into
// one projector per input.
int moment_word_count(const MomentMatrixSpec& spec);

// Builds the moment matrix Gamma (PSD, PSD under partial transposition of
// the trusted party) and ties its entries to the target assemblage blocks:
// identity/marginal/joint words map to sums of target(a,b,x,y); entries
// sharing the same reduced operator word are set equal (projector
// idempotence and cross-party commutation).
// Returns the moment variable.
HermVar build_moment_matrix(ProblemBuilder& pb, const MomentMatrixSpec& spec,
                            const std::function<HermExpr(int a, int b, int x, int y)>& target,
                            const std::string& name);

}  // namespace steerdet

#endif
