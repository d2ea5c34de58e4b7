#include "doctest.h"

#include <random>

#include "steerdet/herm.hpp"

using namespace steerdet;

namespace {

std::mt19937_64 rng(20240811);

Cmat random_hermitian(int n) {
  std::normal_distribution<double> g;
  Cmat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cdouble(g(rng), g(rng));
  return resymmetrize(m);
}

Cmat random_psd(int n) {
  Cmat m = random_hermitian(n);
  return m * m.adjoint() + 1e-12 * Cmat::Identity(n, n);
}

// Independent oracle: power iteration on s*I - M gives the smallest
// eigenvalue of M as s - lambda_max(s*I - M).
double min_eig_power_oracle(const Cmat& m) {
  const int n = static_cast<int>(m.rows());
  double s = m.cwiseAbs().sum() + 1.0;
  Cmat shifted = s * Cmat::Identity(n, n) - m;
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(n).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXcd w = shifted * v;
    lambda = w.norm();
    v = w / lambda;
  }
  return s - lambda;
}

}  // namespace

TEST_CASE("kron identity and diagonal cases") {
  Cmat id2 = Cmat::Identity(2, 2);
  CHECK((kron(id2, id2) - Cmat::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  Cmat zz = kron(pauli(3), pauli(3));
  Eigen::Vector4d diag(1, -1, -1, 1);
  for (int i = 0; i < 4; ++i) {
    CHECK(zz(i, i).real() == doctest::Approx(diag(i)));
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(std::abs(zz(i, j)) == 0.0);
  }
}

TEST_CASE("kron matches the entrywise index formula") {
  Cmat a = pauli(1), b = pauli(3);
  Cmat k = kron(a, b);
  for (int i = 0; i < 2; ++i)
    for (int kk = 0; kk < 2; ++kk)
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l)
          CHECK(std::abs(k(2 * i + kk, 2 * j + l) - a(i, j) * b(kk, l)) < 1e-15);
  // trace multiplicativity on random input
  Cmat x = random_hermitian(3), y = random_hermitian(2);
  CHECK(std::abs(kron(x, y).trace() - x.trace() * y.trace()) < 1e-12);
}

TEST_CASE("partial_trace basics") {
  Cmat id4 = Cmat::Identity(4, 4) / 4.0;
  Cmat r = partial_trace(id4, {2, 2}, {1});
  CHECK((r - Cmat::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-15);

  // Bell state marginal via direct index-sum oracle
  Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(4);
  phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
  Cmat bell = phi * phi.adjoint();
  Cmat ra = partial_trace(bell, {2, 2}, {0});
  Cmat oracle = Cmat::Zero(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) oracle(i, j) += bell(2 * i + k, 2 * j + k);
  CHECK((ra - oracle).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((ra - Cmat::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-12);

  // factorized case
  Cmat pa = random_psd(2), pb = random_psd(2);
  Cmat keep0 = partial_trace(kron(pa, pb), {2, 2}, {0});
  CHECK((keep0 - pa * pb.trace()).cwiseAbs().maxCoeff() < 1e-12);

  // trace preservation
  Cmat m = random_hermitian(8);
  CHECK(std::abs(partial_trace(m, {2, 2, 2}, {0, 2}).trace() - m.trace()) < 1e-12);

  CHECK_THROWS_AS(partial_trace(m, {2, 2}, {0}), DimensionError);
}

TEST_CASE("partial_transpose properties") {
  Cmat pa = random_psd(2), pb = random_psd(2);
  Cmat pt = partial_transpose(kron(pa, pb), {2, 2}, 1);
  CHECK((pt - kron(pa, pb.transpose())).cwiseAbs().maxCoeff() < 1e-14);

  Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(4);
  phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
  Cmat bell = phi * phi.adjoint();
  Cmat ptb = partial_transpose(bell, {2, 2}, 1);
  // oracle: PT of the Bell projector is SWAP/2, spectrum {1,1,1,-1}/2
  Cmat swap = Cmat::Zero(4, 4);
  swap(0, 0) = swap(3, 3) = swap(1, 2) = swap(2, 1) = 1.0;
  CHECK((ptb - 0.5 * swap).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(min_eig(ptb) == doctest::Approx(-0.5).epsilon(1e-12));

  Cmat id4 = Cmat::Identity(4, 4);
  CHECK((partial_transpose(id4, {2, 2}, 0) - id4).cwiseAbs().maxCoeff() == 0.0);

  Cmat m = random_hermitian(8);
  Cmat twice = partial_transpose(partial_transpose(m, {2, 2, 2}, 1), {2, 2, 2}, 1);
  CHECK((twice - m).cwiseAbs().maxCoeff() == 0.0);
  CHECK(herm_deviation(partial_transpose(m, {2, 2, 2}, 1)) < 1e-14);
  CHECK(std::abs(partial_transpose(m, {2, 2, 2}, 2).trace() - m.trace()) < 1e-13);
}

TEST_CASE("min_eig") {
  Cmat d = Cmat::Zero(3, 3);
  d(0, 0) = 3;
  d(1, 1) = 1;
  d(2, 2) = 2;
  CHECK(min_eig(d) == doctest::Approx(1.0));

  Cmat refl = Cmat::Identity(2, 2);
  refl(0, 0) = -1;  // I - 2|0><0|
  CHECK(min_eig(refl) == doctest::Approx(-1.0));

  for (int trial = 0; trial < 5; ++trial) {
    Cmat m = random_hermitian(6);
    CHECK(min_eig(m) == doctest::Approx(min_eig_power_oracle(m)).epsilon(1e-8));
  }

  Cmat bad = Cmat::Zero(2, 2);
  bad(0, 1) = 1.0;  // not Hermitian
  CHECK_THROWS_AS(min_eig(bad), HermiticityError);
}

TEST_CASE("pauli_expand round trip") {
  auto c = pauli_expand(Cmat::Identity(2, 2));
  CHECK(c[0] == doctest::Approx(1.0));
  for (int t = 1; t < 4; ++t) CHECK(c[t] == doctest::Approx(0.0));

  auto czz = pauli_expand(kron(pauli(3), pauli(3)));
  for (int t = 0; t < 16; ++t)
    CHECK(czz[t] == doctest::Approx(t == 15 ? 1.0 : 0.0));  // (3,3) = 3*4+3

  Cmat m = random_hermitian(8);
  Cmat back = pauli_reconstruct(pauli_expand(m), 3);
  CHECK((back - m).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(pauli_expand(random_hermitian(3)), DimensionError);
}

TEST_CASE("real_embedding") {
  CHECK((real_embedding(Cmat::Identity(2, 2)) - Rmat::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // char poly of E(Y) via Newton's identities: eigenvalues {1,1,-1,-1}
  Rmat ey = real_embedding(pauli(2));
  double p1 = ey.trace();
  double p2 = (ey * ey).trace();
  double p3 = (ey * ey * ey).trace();
  double p4 = (ey * ey * ey * ey).trace();
  double e1 = p1;
  double e2 = (e1 * p1 - p2) / 2;
  double e3 = (e2 * p1 - e1 * p2 + p3) / 3;
  double e4 = (e3 * p1 - e2 * p2 + e1 * p3 - p4) / 4;
  CHECK(e1 == doctest::Approx(0.0));   // sum of eigs
  CHECK(e2 == doctest::Approx(-2.0));  // lambda^4 - 2 lambda^2 + 1
  CHECK(e3 == doctest::Approx(0.0));
  CHECK(e4 == doctest::Approx(1.0));

  for (int trial = 0; trial < 8; ++trial) {
    Cmat m = random_hermitian(4);
    Rmat e = real_embedding(m);
    Eigen::SelfAdjointEigenSolver<Rmat> es(e, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() ==
          doctest::Approx(min_eig(m)).epsilon(1e-10));
    // PSD equivalence on both signs
    Cmat shifted = m - (min_eig(m) - 0.1) * Cmat::Identity(4, 4);
    Eigen::SelfAdjointEigenSolver<Rmat> es2(real_embedding(shifted),
                                            Eigen::EigenvaluesOnly);
    CHECK(es2.eigenvalues().minCoeff() > 0.0);
  }

  Cmat m = random_hermitian(4);
  CHECK((complex_readout(real_embedding(m)) - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hermitian basis is orthonormal and reconstructs") {
  const int d = 3;
  for (int s = 0; s < herm_basis_size(d); ++s) {
    Cmat hs = herm_basis_element(d, s);
    CHECK(herm_deviation(hs) < 1e-15);
    for (int t = 0; t < herm_basis_size(d); ++t) {
      double ip = (herm_basis_element(d, t).adjoint() * hs).trace().real();
      CHECK(ip == doctest::Approx(s == t ? 1.0 : 0.0));
    }
  }
  Cmat m = random_hermitian(d);
  Cmat back = herm_from_coords(herm_basis_coords(m), d);
  CHECK((back - m).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("partial_trace of kron recovers scaled factors") {
  Cmat a = random_hermitian(2), b = random_hermitian(3);
  Cmat k = kron(a, b);
  CHECK((partial_trace(k, {2, 3}, {1}) - b * a.trace()).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("permute_parties") {
  Cmat a = random_hermitian(2), b = random_hermitian(3), c = random_hermitian(2);
  Cmat abc = kron(kron(a, b), c);
  Cmat bca = permute_parties(abc, {2, 3, 2}, {1, 2, 0});
  CHECK((bca - kron(kron(b, c), a)).cwiseAbs().maxCoeff() < 1e-13);
}
