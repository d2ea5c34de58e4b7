#ifndef STEERDET_MODEL_HPP
#define STEERDET_MODEL_HPP

// States, measurements, trust patterns, forward simulation of assemblages
// and physicality checks.

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "steerdet/herm.hpp"

namespace steerdet {

// Party indices for the tripartite scenario.
inline constexpr int kPartyA = 0;
inline constexpr int kPartyB = 1;
inline constexpr int kPartyC = 2;
inline constexpr int kParties = 3;

std::string party_name(int p);

struct DensityMatrix {
  Cmat mat;
  std::vector<int> dims;

  DensityMatrix() = default;
  // Validates PSD (min eig >= -1e-9) and unit trace (within 1e-9).
  DensityMatrix(Cmat m, std::vector<int> d);

  int dim() const { return static_cast<int>(mat.rows()); }
};

struct Povm {
  std::vector<Cmat> elements;  // one per outcome

  int outcomes() const { return static_cast<int>(elements.size()); }
  int dim() const { return static_cast<int>(elements.at(0).rows()); }
  // PSD elements summing to the identity, within tol.
  void validate(double tol = kHermTol) const;
  // M_0 - M_1 for binary POVMs.
  Cmat observable() const;
};

DensityMatrix ghz_state();
DensityMatrix w_state();
// w |psi><psi| + (1-w) I/8 built from a (possibly mixed) input state.
DensityMatrix noisy(const DensityMatrix& psi, double w);

// Projective qubit POVM onto the +/- eigenstates of a Pauli axis (1..3).
Povm pauli_povm(int axis);
// Projectors (I +/- n.sigma)/2 for the Bloch direction (theta, phi).
Povm bloch_povm(double theta, double phi);

// Trust pattern of the tripartite network. Parties are ordered A, B, C;
// `untrusted` is a sorted subset of {0,1,2} of size 1 or 2.
struct TrustPattern {
  std::vector<int> untrusted;
  std::vector<int> inputs;        // m per untrusted party (2 or 3)
  std::vector<int> outcomes;      // o per untrusted party (2)
  std::vector<int> trusted_dims;  // per trusted party, in party order

  std::vector<int> trusted() const;
  int n_untrusted() const { return static_cast<int>(untrusted.size()); }
  int trusted_dim() const;
  int block_count() const;
  void validate() const;  // throws ScenarioError

  // Flat block index; party order of outcomes/inputs follows `untrusted`.
  int index(const std::vector<int>& outs, const std::vector<int>& ins) const;

  bool operator==(const TrustPattern&) const = default;
};

TrustPattern one_untrusted(int party, int inputs, std::vector<int> trusted_dims = {2, 2});
TrustPattern two_untrusted(int p1, int p2, int inputs1, int inputs2, int trusted_dim = 2);

// Indexed family of unnormalized conditional states on the trusted parties.
struct Assemblage {
  TrustPattern pattern;
  std::vector<Cmat> blocks;

  const Cmat& at(int a, int x) const;                  // one untrusted party
  Cmat& at(int a, int x);
  const Cmat& at(int a, int b, int x, int y) const;    // two untrusted parties
  Cmat& at(int a, int b, int x, int y);

  // Blockwise w*this + (1-w)*other; patterns must agree.
  Assemblage mix(const Assemblage& other, double w) const;
};

// Every block equal to I/(o_total * d_trusted): the assemblage of the
// maximally mixed state under rank-one projective measurements.
Assemblage max_mixed_assemblage(const TrustPattern& pattern);

// Forward simulation of the assemblage left on the trusted parties.
// `measurements[u][x]` is the POVM of untrusted party u for input x.
Assemblage compute_assemblage(const DensityMatrix& rho,
                              const std::vector<std::vector<Povm>>& measurements,
                              const TrustPattern& pattern);

struct Violation {
  std::string kind;   // "psd" | "normalization" | "no-signalling" | "hermiticity"
  std::string where;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  double max_magnitude() const;
  std::string summary() const;
};

ValidationReport validate_assemblage(const Assemblage& sigma, double tol);

nlohmann::json assemblage_to_json(const Assemblage& sigma);
Assemblage assemblage_from_json(const nlohmann::json& j);
nlohmann::json pattern_to_json(const TrustPattern& p);
TrustPattern pattern_from_json(const nlohmann::json& j);
nlohmann::json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const nlohmann::json& j);

}  // namespace steerdet

#endif
