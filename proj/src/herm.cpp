#include "steerdet/herm.hpp"

#include <array>
#include <cmath>

namespace steerdet {

double herm_deviation(const Cmat& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

void require_hermitian(const Cmat& m, double tol) {
  if (m.rows() != m.cols()) throw DimensionError("matrix is not square");
  double dev = herm_deviation(m);
  if (dev > tol)
    throw HermiticityError("matrix deviates from Hermitian by " +
                           std::to_string(dev));
}

Cmat resymmetrize(const Cmat& m) { return 0.5 * (m + m.adjoint()); }

Cmat kron(const Cmat& a, const Cmat& b) {
  Cmat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Cmat kron(const std::vector<Cmat>& factors) {
  Cmat out = Cmat::Identity(1, 1);
  for (const Cmat& f : factors) out = kron(out, f);
  return out;
}

namespace {

long long check_dims(const Cmat& m, const std::vector<int>& dims) {
  long long total = 1;
  for (int d : dims) {
    if (d <= 0) throw DimensionError("party dimension must be positive");
    total *= d;
  }
  if (total != m.rows() || m.rows() != m.cols())
    throw DimensionError("product of party dimensions does not match matrix");
  return total;
}

// Decompose a flat index into per-party digits, party 0 slowest.
void to_digits(long long idx, const std::vector<int>& dims, std::vector<int>& out) {
  for (int p = static_cast<int>(dims.size()) - 1; p >= 0; --p) {
    out[p] = static_cast<int>(idx % dims[p]);
    idx /= dims[p];
  }
}

long long from_digits(const std::vector<int>& digits, const std::vector<int>& dims) {
  long long idx = 0;
  for (size_t p = 0; p < dims.size(); ++p) idx = idx * dims[p] + digits[p];
  return idx;
}

}  // namespace

Cmat partial_trace(const Cmat& m, const std::vector<int>& dims,
                   const std::vector<int>& keep) {
  check_dims(m, dims);
  const int np = static_cast<int>(dims.size());
  std::vector<int> traced;
  for (int p = 0; p < np; ++p) {
    bool kept = false;
    for (int k : keep) kept = kept || (k == p);
    if (!kept) traced.push_back(p);
  }
  long long dk = 1, dt = 1;
  for (int p : keep) dk *= dims[p];
  for (int p : traced) dt *= dims[p];

  Cmat out = Cmat::Zero(dk, dt ? dk : dk);
  std::vector<int> kdims, tdims;
  for (int p : keep) kdims.push_back(dims[p]);
  for (int p : traced) tdims.push_back(dims[p]);

  std::vector<int> row(np), col(np), kr(keep.size()), kc(keep.size()), td(traced.size());
  for (long long i = 0; i < dk; ++i) {
    to_digits(i, kdims, kr);
    for (long long j = 0; j < dk; ++j) {
      to_digits(j, kdims, kc);
      cdouble acc = 0.0;
      for (long long t = 0; t < dt; ++t) {
        to_digits(t, tdims, td);
        for (size_t q = 0; q < keep.size(); ++q) {
          row[keep[q]] = kr[q];
          col[keep[q]] = kc[q];
        }
        for (size_t q = 0; q < traced.size(); ++q) {
          row[traced[q]] = td[q];
          col[traced[q]] = td[q];
        }
        acc += m(from_digits(row, dims), from_digits(col, dims));
      }
      out(i, j) = acc;
    }
  }
  return out;
}

Cmat partial_transpose(const Cmat& m, const std::vector<int>& dims, int party) {
  long long n = check_dims(m, dims);
  if (party < 0 || party >= static_cast<int>(dims.size()))
    throw DimensionError("partial_transpose: party index out of range");
  Cmat out(n, n);
  const int np = static_cast<int>(dims.size());
  std::vector<int> r(np), c(np);
  for (long long i = 0; i < n; ++i) {
    to_digits(i, dims, r);
    for (long long j = 0; j < n; ++j) {
      to_digits(j, dims, c);
      std::vector<int> rr = r, cc = c;
      std::swap(rr[party], cc[party]);
      out(from_digits(rr, dims), from_digits(cc, dims)) = m(i, j);
    }
  }
  return out;
}

Cmat permute_parties(const Cmat& m, const std::vector<int>& dims,
                     const std::vector<int>& perm) {
  long long n = check_dims(m, dims);
  if (perm.size() != dims.size())
    throw DimensionError("permute_parties: permutation size mismatch");
  std::vector<int> ndims(dims.size());
  for (size_t p = 0; p < perm.size(); ++p) ndims[p] = dims[perm[p]];
  Cmat out(n, n);
  const int np = static_cast<int>(dims.size());
  std::vector<int> r(np), c(np), rr(np), cc(np);
  for (long long i = 0; i < n; ++i) {
    to_digits(i, dims, r);
    for (long long j = 0; j < n; ++j) {
      to_digits(j, dims, c);
      for (int p = 0; p < np; ++p) {
        rr[p] = r[perm[p]];
        cc[p] = c[perm[p]];
      }
      out(from_digits(rr, ndims), from_digits(cc, ndims)) = m(i, j);
    }
  }
  return out;
}

double min_eig(const Cmat& m) {
  require_hermitian(m);
  Eigen::SelfAdjointEigenSolver<Cmat> es(resymmetrize(m),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

const Cmat& pauli(int axis) {
  static const std::array<Cmat, 4> sigma = [] {
    std::array<Cmat, 4> s;
    const cdouble I(0.0, 1.0);
    for (auto& x : s) x = Cmat::Zero(2, 2);
    s[0] << 1, 0, 0, 1;
    s[1] << 0, 1, 1, 0;
    s[2] << 0, -I, I, 0;
    s[3] << 1, 0, 0, -1;
    return s;
  }();
  if (axis < 0 || axis > 3) throw ParamError("pauli axis must be 0..3");
  return sigma[axis];
}

namespace {
int qubit_count(Eigen::Index dim) {
  int n = 0;
  Eigen::Index d = 1;
  while (d < dim) {
    d *= 2;
    ++n;
  }
  if (d != dim) throw DimensionError("dimension is not a power of two");
  return n;
}
}  // namespace

std::vector<double> pauli_expand(const Cmat& m) {
  const int n = qubit_count(m.rows());
  require_hermitian(m, 1e-9);
  const long long terms = 1LL << (2 * n);
  std::vector<double> coeff(terms);
  for (long long t = 0; t < terms; ++t) {
    std::vector<Cmat> factors(n);
    long long tt = t;
    for (int q = n - 1; q >= 0; --q) {
      factors[q] = pauli(static_cast<int>(tt & 3));
      tt >>= 2;
    }
    // tr(P M)/2^n is real for Hermitian M.
    coeff[t] = (kron(factors).adjoint() * m).trace().real() / double(1LL << n);
  }
  return coeff;
}

Cmat pauli_reconstruct(const std::vector<double>& coeff, int nqubits) {
  const long long terms = 1LL << (2 * nqubits);
  if (static_cast<long long>(coeff.size()) != terms)
    throw DimensionError("coefficient array has wrong length");
  Cmat out = Cmat::Zero(1LL << nqubits, 1LL << nqubits);
  for (long long t = 0; t < terms; ++t) {
    if (coeff[t] == 0.0) continue;
    std::vector<Cmat> factors(nqubits);
    long long tt = t;
    for (int q = nqubits - 1; q >= 0; --q) {
      factors[q] = pauli(static_cast<int>(tt & 3));
      tt >>= 2;
    }
    out += coeff[t] * kron(factors);
  }
  return out;
}

Rmat real_embedding(const Cmat& m) {
  const Eigen::Index n = m.rows();
  Rmat out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = m.real();
  out.topRightCorner(n, n) = -m.imag();
  out.bottomLeftCorner(n, n) = m.imag();
  out.bottomRightCorner(n, n) = m.real();
  return out;
}

Cmat complex_readout(const Rmat& x) {
  if (x.rows() != x.cols() || x.rows() % 2 != 0)
    throw DimensionError("real-embedded matrix must be square of even size");
  const Eigen::Index n = x.rows() / 2;
  Cmat out(n, n);
  out.real() = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  out.imag() = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  return out;
}

int herm_basis_size(int d) { return d * d; }

Cmat herm_basis_element(int d, int t) {
  if (t < 0 || t >= d * d) throw ParamError("basis index out of range");
  Cmat out = Cmat::Zero(d, d);
  if (t < d) {
    out(t, t) = 1.0;
    return out;
  }
  // Off-diagonal pairs are enumerated row-major over i<j, two elements each.
  int k = t - d;
  int pair = k / 2, which = k % 2;
  int i = 0, j = 1;
  for (int count = 0;; ++i) {
    int rowpairs = d - 1 - i;
    if (count + rowpairs > pair) {
      j = i + 1 + (pair - count);
      break;
    }
    count += rowpairs;
  }
  const double s = 1.0 / std::sqrt(2.0);
  if (which == 0) {
    out(i, j) = s;
    out(j, i) = s;
  } else {
    out(i, j) = cdouble(0, s);
    out(j, i) = cdouble(0, -s);
  }
  return out;
}

std::vector<double> herm_basis_coords(const Cmat& m) {
  const int d = static_cast<int>(m.rows());
  require_hermitian(m, 1e-7);
  std::vector<double> out(d * d);
  for (int i = 0; i < d; ++i) out[i] = m(i, i).real();
  int t = d;
  const double s = std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      out[t++] = s * m(i, j).real();
      out[t++] = s * m(i, j).imag();
    }
  return out;
}

Cmat herm_from_coords(const std::vector<double>& coords, int d) {
  if (static_cast<int>(coords.size()) != d * d)
    throw DimensionError("coordinate vector has wrong length");
  Cmat out = Cmat::Zero(d, d);
  for (int t = 0; t < d * d; ++t)
    if (coords[t] != 0.0) out += coords[t] * herm_basis_element(d, t);
  return out;
}

}  // namespace steerdet
