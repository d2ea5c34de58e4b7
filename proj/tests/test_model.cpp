#include "doctest.h"

#include <random>

#include <nlohmann/json.hpp>

#include "steerdet/model.hpp"

using namespace steerdet;

namespace {

std::mt19937_64 rng(77001);

Povm random_projective() {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return bloch_povm(std::acos(2 * u(rng) - 1.0), 2 * M_PI * u(rng));
}

std::vector<std::vector<Povm>> pauli_measurements(int parties, int inputs) {
  std::vector<std::vector<Povm>> out(parties);
  for (int p = 0; p < parties; ++p)
    for (int x = 0; x < inputs; ++x) out[p].push_back(pauli_povm(x + 1));
  return out;
}

}  // namespace

TEST_CASE("ghz and w states") {
  DensityMatrix g = ghz_state();
  for (int i : {0, 7})
    for (int j : {0, 7}) CHECK(g.mat(i, j).real() == doctest::Approx(0.5));
  CHECK(g.mat.cwiseAbs().sum() == doctest::Approx(2.0));  // only 4 entries of 1/2

  DensityMatrix w = w_state();
  CHECK((w.mat * w.mat).trace().real() == doctest::Approx(1.0));  // pure

  DensityMatrix iso = noisy(g, 0.0);
  CHECK((iso.mat - Cmat::Identity(8, 8) / 8.0).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(noisy(g, 1.5), ParamError);
}

TEST_CASE("pauli and bloch povms") {
  Povm z = pauli_povm(3);
  Cmat p0 = Cmat::Zero(2, 2);
  p0(0, 0) = 1;
  CHECK((z.elements[0] - p0).cwiseAbs().maxCoeff() < 1e-15);
  z.validate();

  Povm x = bloch_povm(M_PI / 2, 0.0);
  CHECK((x.elements[0] - 0.5 * (Cmat::Identity(2, 2) + pauli(1)))
            .cwiseAbs()
            .maxCoeff() < 1e-15);

  for (int t = 0; t < 10; ++t) {
    Povm p = random_projective();
    p.validate();
    for (const Cmat& e : p.elements)
      CHECK((e * e - e).cwiseAbs().maxCoeff() < 1e-12);  // idempotent
  }
}

TEST_CASE("compute_assemblage on GHZ, one untrusted") {
  TrustPattern pat = one_untrusted(kPartyA, 3);
  Assemblage sigma = compute_assemblage(ghz_state(), pauli_measurements(1, 3), pat);

  // x = Z is input index 2; expected blocks |00><00|/2 and |11><11|/2
  Cmat e00 = Cmat::Zero(4, 4), e11 = Cmat::Zero(4, 4);
  e00(0, 0) = 0.5;
  e11(3, 3) = 0.5;
  CHECK((sigma.at(0, 2) - e00).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((sigma.at(1, 2) - e11).cwiseAbs().maxCoeff() < 1e-14);

  CHECK(validate_assemblage(sigma, 1e-9).ok());
}

TEST_CASE("compute_assemblage on GHZ, two untrusted") {
  TrustPattern pat = two_untrusted(kPartyA, kPartyB, 3, 3);
  Assemblage sigma = compute_assemblage(ghz_state(), pauli_measurements(2, 3), pat);
  Cmat e0 = Cmat::Zero(2, 2), e1 = Cmat::Zero(2, 2);
  e0(0, 0) = 0.5;
  e1(1, 1) = 0.5;
  CHECK((sigma.at(0, 0, 2, 2) - e0).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((sigma.at(1, 1, 2, 2) - e1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(sigma.at(0, 1, 2, 2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(sigma.at(1, 0, 2, 2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(validate_assemblage(sigma, 1e-9).ok());
}

TEST_CASE("product state gives unsteerable assemblage") {
  // rho = rho_A x rho_BC  =>  sigma_{a|x} = p(a|x) rho_BC
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
  v(0) = 0.6;
  v(3) = 0.8;
  Cmat rho_bc = v * v.adjoint();
  Cmat rho_a = Cmat::Zero(2, 2);
  rho_a(0, 0) = 0.3;
  rho_a(1, 1) = 0.7;
  DensityMatrix rho(kron(rho_a, rho_bc), {2, 2, 2});
  TrustPattern pat = one_untrusted(kPartyA, 2);
  auto meas = pauli_measurements(1, 2);
  Assemblage sigma = compute_assemblage(rho, meas, pat);
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a) {
      double p = (meas[0][x].elements[a] * rho_a).trace().real();
      CHECK((sigma.at(a, x) - p * rho_bc).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("assemblage linearity and marginal consistency") {
  TrustPattern pat = one_untrusted(kPartyA, 3);
  auto meas = pauli_measurements(1, 3);
  DensityMatrix g = ghz_state(), w = w_state();
  double t = 0.35;
  DensityMatrix mixed(t * g.mat + (1 - t) * w.mat, {2, 2, 2});
  Assemblage left = compute_assemblage(mixed, meas, pat);
  Assemblage right =
      compute_assemblage(g, meas, pat).mix(compute_assemblage(w, meas, pat), t);
  for (size_t i = 0; i < left.blocks.size(); ++i)
    CHECK((left.blocks[i] - right.blocks[i]).cwiseAbs().maxCoeff() < 1e-12);

  Cmat marg = Cmat::Zero(4, 4);
  for (int a = 0; a < 2; ++a) marg += left.at(a, 0);
  Cmat direct = partial_trace(mixed.mat, {2, 2, 2}, {1, 2});
  CHECK((marg - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("validate_assemblage flags constructed violations") {
  TrustPattern pat = one_untrusted(kPartyA, 2);
  Assemblage sigma =
      compute_assemblage(ghz_state(), pauli_measurements(1, 2), pat);

  Assemblage bad = sigma;
  Cmat perturb = Cmat::Zero(4, 4);
  perturb(0, 0) = 2e-3;
  bad.at(0, 0) -= perturb;
  auto rep = validate_assemblage(bad, 1e-9);
  bool saw_psd = false;
  for (const auto& v : rep.violations) saw_psd = saw_psd || v.kind == "psd";
  CHECK(saw_psd);

  Assemblage sig2 = sigma;
  sig2.at(0, 1) += 1e-3 * Cmat::Identity(4, 4);
  auto rep2 = validate_assemblage(sig2, 1e-9);
  bool saw_ns = false;
  double mag = 0;
  for (const auto& v : rep2.violations)
    if (v.kind == "no-signalling") {
      saw_ns = true;
      mag = std::max(mag, v.magnitude);
    }
  CHECK(saw_ns);
  CHECK(mag == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("max mixed assemblage") {
  TrustPattern pat2 = two_untrusted(kPartyA, kPartyB, 3, 3);
  Assemblage id2 = max_mixed_assemblage(pat2);
  for (const Cmat& b : id2.blocks)
    CHECK((b - Cmat::Identity(2, 2) / 8.0).cwiseAbs().maxCoeff() == 0.0);

  // equals the simulated assemblage of the maximally mixed state
  DensityMatrix mm(Cmat::Identity(8, 8) / 8.0, {2, 2, 2});
  Assemblage sim = compute_assemblage(mm, pauli_measurements(2, 3), pat2);
  for (size_t i = 0; i < sim.blocks.size(); ++i)
    CHECK((sim.blocks[i] - id2.blocks[i]).cwiseAbs().maxCoeff() < 1e-14);

  TrustPattern pat1 = one_untrusted(kPartyB, 2);
  Assemblage id1 = max_mixed_assemblage(pat1);
  for (const Cmat& b : id1.blocks)
    CHECK((b - Cmat::Identity(4, 4) / 8.0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assemblage json round trip") {
  TrustPattern pat = two_untrusted(kPartyB, kPartyC, 2, 3);
  std::vector<std::vector<Povm>> meas(2);
  for (int x = 0; x < 2; ++x) meas[0].push_back(random_projective());
  for (int y = 0; y < 3; ++y) meas[1].push_back(random_projective());
  Assemblage sigma = compute_assemblage(noisy(w_state(), 0.83), meas, pat);

  nlohmann::json j = assemblage_to_json(sigma);
  Assemblage back = assemblage_from_json(j);
  CHECK(back.pattern == sigma.pattern);
  for (size_t i = 0; i < sigma.blocks.size(); ++i)
    CHECK((back.blocks[i] - sigma.blocks[i]).cwiseAbs().maxCoeff() < 1e-15);

  // serialization through text stays faithful
  Assemblage back2 = assemblage_from_json(nlohmann::json::parse(j.dump()));
  for (size_t i = 0; i < sigma.blocks.size(); ++i)
    CHECK((back2.blocks[i] - sigma.blocks[i]).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("pattern errors") {
  CHECK_THROWS_AS(one_untrusted(kPartyA, 5), ScenarioError);
  TrustPattern p;
  p.untrusted = {0, 1, 2};
  CHECK_THROWS_AS(p.validate(), ScenarioError);
  TrustPattern pat = one_untrusted(kPartyA, 3);
  CHECK_THROWS_AS(
      compute_assemblage(ghz_state(), pauli_measurements(1, 2), pat),
      ScenarioError);
}
