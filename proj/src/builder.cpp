#include "steerdet/builder.hpp"

#include <map>
#include <tuple>

namespace steerdet {

HermExpr HermExpr::of(const HermVar& v, double coef) {
  HermExpr e;
  e.d = v.d;
  e.constant = Cmat::Zero(v.d, v.d);
  e.add(v, coef);
  return e;
}

HermExpr& HermExpr::add(const HermVar& v, double coef) {
  HermTerm t;
  t.coef = coef;
  t.var = v;
  terms.push_back(std::move(t));
  return *this;
}

HermExpr& HermExpr::add_free(int var, const Cmat& shape) {
  free_terms.emplace_back(var, shape);
  return *this;
}

HermExpr& HermExpr::add_const(const Cmat& c) {
  constant += c;
  return *this;
}

HermExpr& HermExpr::add_term(HermTerm t) {
  terms.push_back(std::move(t));
  return *this;
}

HermTerm pt_term(const HermVar& v, const std::vector<int>& dims, int party,
                 double coef) {
  HermTerm t;
  t.coef = coef;
  t.var = v;
  t.op = HermTerm::Op::PartialTranspose;
  t.dims = dims;
  t.party = party;
  return t;
}

HermTerm ptrace_term(const HermVar& v, const std::vector<int>& dims,
                     const std::vector<int>& keep, double coef) {
  HermTerm t;
  t.coef = coef;
  t.var = v;
  t.op = HermTerm::Op::PartialTrace;
  t.dims = dims;
  t.keep = keep;
  return t;
}

HermTerm subblock_term(const HermVar& v, int row0, int col0, int d, double coef) {
  HermTerm t;
  t.coef = coef;
  t.var = v;
  t.op = HermTerm::Op::SubBlock;
  t.row0 = row0;
  t.col0 = col0;
  t.dims = {d};
  return t;
}

HermTerm permute_term(const HermVar& v, const std::vector<int>& dims,
                      const std::vector<int>& perm, double coef) {
  HermTerm t;
  t.coef = coef;
  t.var = v;
  t.op = HermTerm::Op::Permute;
  t.dims = dims;
  t.perm = perm;
  return t;
}

Cmat pullback(const HermTerm& term, const Cmat& h) {
  switch (term.op) {
    case HermTerm::Op::Id:
      return h;
    case HermTerm::Op::PartialTranspose:
      // self-adjoint
      return partial_transpose(h, term.dims, term.party);
    case HermTerm::Op::PartialTrace: {
      // adjoint embeds h on the kept parties, identity on the traced ones
      const auto& dims = term.dims;
      long long n = 1;
      for (int d : dims) n *= d;
      Cmat out = Cmat::Zero(n, n);
      std::vector<int> kdims;
      for (int p : term.keep) kdims.push_back(dims[p]);
      const int np = static_cast<int>(dims.size());
      std::vector<int> row(np), col(np);
      for (long long r = 0; r < n; ++r) {
        long long rr = r;
        for (int p = np - 1; p >= 0; --p) {
          row[p] = static_cast<int>(rr % dims[p]);
          rr /= dims[p];
        }
        for (long long c = 0; c < n; ++c) {
          long long cc = c;
          for (int p = np - 1; p >= 0; --p) {
            col[p] = static_cast<int>(cc % dims[p]);
            cc /= dims[p];
          }
          bool diag = true;
          for (int p = 0; p < np && diag; ++p) {
            bool kept = false;
            for (int k : term.keep) kept = kept || (k == p);
            if (!kept) diag = diag && (row[p] == col[p]);
          }
          if (!diag) continue;
          long long hr = 0, hc = 0;
          for (size_t q = 0; q < term.keep.size(); ++q) {
            hr = hr * kdims[q] + row[term.keep[q]];
            hc = hc * kdims[q] + col[term.keep[q]];
          }
          out(r, c) = h(hr, hc);
        }
      }
      return out;
    }
    case HermTerm::Op::SubBlock: {
      const int dv = term.var.d, ds = static_cast<int>(h.rows());
      Cmat placed = Cmat::Zero(dv, dv);
      placed.block(term.row0, term.col0, ds, ds) = h;
      return 0.5 * (placed + placed.adjoint());
    }
    case HermTerm::Op::Permute: {
      // <H, Permute_perm(M)> = <Permute_perm^{-1}(H), M>
      std::vector<int> inv(term.perm.size());
      for (size_t i = 0; i < term.perm.size(); ++i)
        inv[term.perm[i]] = static_cast<int>(i);
      std::vector<int> permuted_dims(term.perm.size());
      for (size_t i = 0; i < term.perm.size(); ++i)
        permuted_dims[i] = term.dims[term.perm[i]];
      return permute_parties(h, permuted_dims, inv);
    }
  }
  throw Error("unknown term op");
}

HermVar ProblemBuilder::add_herm_psd(int d) {
  HermVar v;
  v.d = d;
  v.block = problem.add_block(2 * d);
  return v;
}

int ProblemBuilder::add_free() { return problem.add_free(); }

void ProblemBuilder::accumulate(std::vector<ConstraintEntry>& entries, int block,
                                const Cmat& k, double coef) {
  const int d = static_cast<int>(k.rows());
  // coef * E(K)/2 with E(K) = [[Re K, -Im K],[Im K, Re K]]; only the
  // (row <= col) representative of each symmetric pair is stored.
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      double re = 0.5 * coef * k(i, j).real();
      if (re != 0.0) {
        entries.push_back({block, i, j, re});
        entries.push_back({block, d + i, d + j, re});
      }
    }
    for (int j = 0; j < d; ++j) {
      double im = 0.5 * coef * k(i, j).imag();
      // -Im K occupies the (i, d+j) corner; its mirror is implied
      if (im != 0.0) entries.push_back({block, i, d + j, -im});
    }
  }
}

int ProblemBuilder::emit_row(const HermExpr& expr, const Cmat& test, double rhs,
                             const std::string& name) {
  Equality eq;
  std::map<std::tuple<int, int, int>, double> acc;
  std::vector<ConstraintEntry> scratch;
  for (const HermTerm& t : expr.terms) {
    scratch.clear();
    // variables are Hermitian-valued, so the pullback may be Hermitized even
    // for non-Hermitian test matrices (entrywise rows on off-diagonal blocks)
    Cmat k = pullback(t, test);
    k = 0.5 * (k + k.adjoint());
    accumulate(scratch, t.var.block, k, t.coef);
    for (const auto& e : scratch) acc[{e.block, e.row, e.col}] += e.value;
  }
  for (const auto& [key, val] : acc)
    if (val != 0.0)
      eq.entries.push_back(
          {std::get<0>(key), std::get<1>(key), std::get<2>(key), val});
  std::map<int, double> facc;
  for (const auto& [fv, shape] : expr.free_terms) {
    double c = (test.adjoint() * shape).trace().real();
    if (c != 0.0) facc[fv] += c;
  }
  for (const auto& [fv, c] : facc) eq.free_coefs.emplace_back(fv, c);
  eq.rhs = rhs - (test.adjoint() * expr.constant).trace().real();
  eq.name = name;
  return problem.add_equality(std::move(eq));
}

int ProblemBuilder::add_herm_equality(const HermExpr& expr, const Cmat& rhs,
                                      const std::string& name) {
  const int d = expr.d;
  int first = -1;
  for (int t = 0; t < herm_basis_size(d); ++t) {
    Cmat ht = herm_basis_element(d, t);
    int idx = emit_row(expr, ht, (ht.adjoint() * rhs).trace().real(),
                       name + "[" + std::to_string(t) + "]");
    if (first < 0) first = idx;
  }
  return first;
}

int ProblemBuilder::add_entry_equality(const HermExpr& expr, const Cmat& rhs,
                                       const std::string& name) {
  const int d = expr.d;
  const cdouble I(0.0, 1.0);
  int first = -1;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      // single-entry tests: Re tr(T^dag B) picks Re B_ij / Im B_ij even when
      // the expression value B is not Hermitian
      Cmat e_re = Cmat::Zero(d, d), e_im = Cmat::Zero(d, d);
      e_re(i, j) = 1.0;
      e_im(i, j) = I;
      int idx = emit_row(expr, e_re, rhs(i, j).real(),
                         name + ".re[" + std::to_string(i) + "," +
                             std::to_string(j) + "]");
      if (first < 0) first = idx;
      emit_row(expr, e_im, rhs(i, j).imag(),
               name + ".im[" + std::to_string(i) + "," + std::to_string(j) + "]");
    }
  return first;
}

HermVar ProblemBuilder::require_psd(const HermExpr& expr, const std::string& name) {
  HermVar q = add_herm_psd(expr.d);
  HermExpr diff = expr;
  diff.add(q, -1.0);
  add_herm_equality(diff, Cmat::Zero(expr.d, expr.d), name);
  return q;
}

void ProblemBuilder::add_objective(const HermVar& v, const Cmat& c) {
  std::vector<ConstraintEntry> scratch;
  accumulate(scratch, v.block, c, 1.0);
  for (const auto& e : scratch) problem.objective_entries.push_back(e);
}

Cmat ProblemBuilder::value(const ConicSolution& sol, const HermVar& v) {
  return complex_readout(sol.primal_blocks.at(v.block));
}

Cmat ProblemBuilder::dual_block(const ConicSolution& sol, int first_row, int d) {
  Cmat out = Cmat::Zero(d, d);
  for (int t = 0; t < herm_basis_size(d); ++t)
    out += sol.duals.at(first_row + t) * herm_basis_element(d, t);
  return out;
}

}  // namespace steerdet
