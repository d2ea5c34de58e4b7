#ifndef STEERDET_DETECT_HPP
#define STEERDET_DETECT_HPP

// Membership tests for the entanglement classes of the tripartite
// semi-device-independent scenario, dual witness extraction, white-noise
// robustness and measurement search.

#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "steerdet/conic.hpp"
#include "steerdet/model.hpp"

namespace steerdet {

enum class ClassTag { FullySeparable, SeparableAcross, Biseparable };

struct EntanglementClass {
  ClassTag tag = ClassTag::Biseparable;
  int cut = kPartyA;  // singleton of the bipartition, for SeparableAcross

  bool operator==(const EntanglementClass&) const = default;
};

inline EntanglementClass fully_separable() {
  return {ClassTag::FullySeparable, kPartyA};
}
inline EntanglementClass separable_across(int singleton) {
  return {ClassTag::SeparableAcross, singleton};
}
inline EntanglementClass biseparable() {
  return {ClassTag::Biseparable, kPartyA};
}

std::string to_string(const EntanglementClass& cls);
EntanglementClass class_from_string(const std::string& s);

// Dual-derived witness: the value sum_i tr(F_i sigma_i) is nonnegative on
// every assemblage of the tested class and normalized to 1 on the maximally
// mixed assemblage.
struct Witness {
  TrustPattern pattern;
  std::vector<Cmat> blocks;  // F, indexed like Assemblage blocks

  double evaluate(const Assemblage& sigma) const;
  double id_pairing() const;  // <F, id>, equals 1 after normalization
};

struct DetectionOptions {
  int k = 1;                // extension order (SYM cases) / moment level
  double epsilon = 1e-6;    // detection threshold on p*
  bool both_ns = true;      // no-signalling on both branch families (2u GME)
  std::string cache_dir;    // NS vertex cache directory ("" = no cache)
  SolveOptions solver;
};

struct DetectionResult {
  double p_star = 0.0;
  bool detected = false;
  Witness witness;
  SolveStatus status = SolveStatus::NumericalTrouble;
  double rel_gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  int k = 1;
  std::string message;
};

// Solves the membership SDP "max p s.t. sigma - p id decomposes in the
// class" and extracts the dual witness. Throws ScenarioError when the
// class/pattern pair is unsupported or the assemblage fails physicality
// checks at 1e-8.
DetectionResult detect(const Assemblage& sigma, const EntanglementClass& cls,
                       const DetectionOptions& opt = {});

using MeasurementSet = std::vector<std::vector<Povm>>;

MeasurementSet pauli_measurements_for(const TrustPattern& pattern);

struct ThresholdResult {
  double w_star = 1.0;
  int solves = 0;
  double p_at_full_visibility = 0.0;
};

// White-noise robustness: bisects the detection verdict of
// w |psi><psi| + (1-w) I/8 over w in [0,1]. Throws NoThresholdError when the
// pure state itself is not detected.
ThresholdResult noise_threshold(const DensityMatrix& psi,
                                const MeasurementSet& measurements,
                                const EntanglementClass& cls,
                                const TrustPattern& pattern,
                                const DetectionOptions& opt = {},
                                int bisect_iters = 14);

struct SearchResult {
  MeasurementSet measurements;
  double w_star = std::numeric_limits<double>::quiet_NaN();
  int solves_used = 0;
};

// Derivative-free search (Nelder-Mead over Bloch angles, random restarts)
// minimizing the noise threshold. `budget` caps the number of SDP solves;
// the returned threshold is an upper bound on the optimum. A zero budget
// returns the seed unchanged.
SearchResult optimize_measurements(const DensityMatrix& psi,
                                   const EntanglementClass& cls,
                                   const TrustPattern& pattern,
                                   const MeasurementSet& seed, int budget,
                                   const DetectionOptions& opt = {},
                                   unsigned rng_seed = 1);

// --- witness views -------------------------------------------------------

// Observable form: one untrusted party uses J (J[0] = J_empty, J[x+1] = J_x);
// two untrusted parties use K0, Kx, Kpy and Kxy (row-major over (x,y)).
struct ObservableView {
  int untrusted = 1;
  std::vector<Cmat> J;
  Cmat K0;
  std::vector<Cmat> Kx, Kpy, Kxy;
};

ObservableView to_observable_form(const Witness& w);

// Coefficient form f_{xyz} with axis value 0 meaning the identity; requires
// qubit trusted parties. One untrusted party: shape (m+1, 4, 4); two
// untrusted parties: shape (m1+1, m2+1, 4).
struct CoefficientView {
  std::vector<int> shape;
  std::vector<double> f;

  double at(int i, int j, int k) const {
    return f.at((i * shape[1] + j) * shape[2] + k);
  }
};

CoefficientView to_coefficient_form(const Witness& w);

// Both views evaluated against a concrete state and untrusted measurements;
// all three routes agree with Witness::evaluate on the simulated assemblage.
double evaluate_observable_form(const ObservableView& v, const DensityMatrix& rho,
                                const MeasurementSet& meas,
                                const TrustPattern& pattern);
double evaluate_coefficient_form(const CoefficientView& v,
                                 const DensityMatrix& rho,
                                 const MeasurementSet& meas,
                                 const TrustPattern& pattern);

nlohmann::json witness_to_json(const Witness& w, const EntanglementClass& cls,
                               int k, double rel_gap, double primal_residual,
                               double dual_residual);
Witness witness_from_json(const nlohmann::json& j);

}  // namespace steerdet

#endif
