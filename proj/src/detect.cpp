#include "steerdet/detect.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "steerdet/builder.hpp"
#include "steerdet/polytopes.hpp"
#include "steerdet/relax.hpp"

namespace steerdet {

std::string to_string(const EntanglementClass& cls) {
  switch (cls.tag) {
    case ClassTag::FullySeparable: return "fullsep";
    case ClassTag::SeparableAcross: return "sep:" + party_name(cls.cut);
    case ClassTag::Biseparable: return "gme";
  }
  throw Error("unknown class tag");
}

EntanglementClass class_from_string(const std::string& s) {
  if (s == "fullsep") return fully_separable();
  if (s == "gme" || s == "bisep") return biseparable();
  if (s.rfind("sep:", 0) == 0 && s.size() == 5) {
    if (s[4] == 'A') return separable_across(kPartyA);
    if (s[4] == 'B') return separable_across(kPartyB);
    if (s[4] == 'C') return separable_across(kPartyC);
  }
  throw ScenarioError("unknown entanglement class: " + s);
}

double Witness::evaluate(const Assemblage& sigma) const {
  if (!(sigma.pattern == pattern))
    throw ScenarioError("witness/assemblage pattern mismatch");
  double v = 0.0;
  for (size_t i = 0; i < blocks.size(); ++i)
    v += (blocks[i].adjoint() * sigma.blocks[i]).trace().real();
  return v;
}

double Witness::id_pairing() const {
  Assemblage id = max_mixed_assemblage(pattern);
  double v = 0.0;
  for (size_t i = 0; i < blocks.size(); ++i)
    v += (blocks[i].adjoint() * id.blocks[i]).trace().real();
  return v;
}

namespace {

void add_scaled(HermExpr& into, const HermExpr& e, double c) {
  for (HermTerm t : e.terms) {
    t.coef *= c;
    into.add_term(std::move(t));
  }
  for (const auto& [fv, shape] : e.free_terms) into.add_free(fv, Cmat(c * shape));
  into.add_const(Cmat(c * e.constant));
}

HermExpr zero_expr(int d) {
  HermExpr e;
  e.d = d;
  e.constant = Cmat::Zero(d, d);
  return e;
}

// partial trace of a SYM base expression down to one party of the pair
HermExpr reduce_base(const HermExpr& base, int keep_party, int d0, int d1) {
  const HermTerm& t = base.terms.at(0);
  HermExpr out = zero_expr(keep_party == 0 ? d0 : d1);
  if (t.op == HermTerm::Op::Id) {
    out.add_term(ptrace_term(t.var, {d0, d1}, {keep_party}, t.coef));
  } else if (t.op == HermTerm::Op::PartialTrace) {
    out.add_term(
        ptrace_term(t.var, t.dims, {t.keep.at(keep_party)}, t.coef));
  } else {
    throw Error("unexpected base expression");
  }
  return out;
}

struct Build {
  ProblemBuilder pb;
  int p = -1;                      // free visibility-slack variable
  std::vector<int> witness_rows;   // first equality row per assemblage block
};

// shared skeleton: p and the witness-bearing decomposition equalities
void finish_decomposition(Build& b, const Assemblage& sigma,
                          const std::vector<HermExpr>& decomp) {
  Assemblage id = max_mixed_assemblage(sigma.pattern);
  for (size_t i = 0; i < sigma.blocks.size(); ++i) {
    HermExpr e = decomp[i];
    e.add_free(b.p, id.blocks[i]);
    b.witness_rows.push_back(b.pb.add_herm_equality(
        e, sigma.blocks[i], "decomp[" + std::to_string(i) + "]"));
  }
}

// Case: fully separable state, one untrusted party.
Build build_fullsep_1u(const Assemblage& sigma, const DetectionOptions& opt) {
  Build b;
  const TrustPattern& pat = sigma.pattern;
  const int m = pat.inputs[0], d1 = pat.trusted_dims[0], d2 = pat.trusted_dims[1];
  b.p = b.pb.add_free();
  b.pb.problem.objective_free[b.p] = 1.0;
  auto strategies = enum_deterministic(m, 2);
  std::vector<HermExpr> bases;
  for (const auto& s : strategies)
    bases.push_back(build_sym_constraints(
        b.pb, {opt.k, d1, d2, 0}, "sym[" + std::to_string(s.index) + "]"));
  std::vector<HermExpr> decomp(sigma.blocks.size(), zero_expr(d1 * d2));
  for (int x = 0; x < m; ++x)
    for (int a = 0; a < 2; ++a) {
      HermExpr& e = decomp[pat.index({a}, {x})];
      for (const auto& s : strategies)
        if (s.table[x] == a) add_scaled(e, bases[s.index], 1.0);
    }
  finish_decomposition(b, sigma, decomp);
  return b;
}

// Case: fully separable state, two untrusted parties.
Build build_fullsep_2u(const Assemblage& sigma, const DetectionOptions&) {
  Build b;
  const TrustPattern& pat = sigma.pattern;
  const int m1 = pat.inputs[0], m2 = pat.inputs[1], d = pat.trusted_dim();
  b.p = b.pb.add_free();
  b.pb.problem.objective_free[b.p] = 1.0;
  auto sa = enum_deterministic(m1, 2), sb = enum_deterministic(m2, 2);
  std::vector<std::vector<HermVar>> v(sa.size(), std::vector<HermVar>(sb.size()));
  for (size_t i = 0; i < sa.size(); ++i)
    for (size_t j = 0; j < sb.size(); ++j) v[i][j] = b.pb.add_herm_psd(d);
  std::vector<HermExpr> decomp(sigma.blocks.size(), zero_expr(d));
  for (int x = 0; x < m1; ++x)
    for (int y = 0; y < m2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb) {
          HermExpr& e = decomp[pat.index({a, bb}, {x, y})];
          for (const auto& s1 : sa)
            for (const auto& s2 : sb)
              if (s1.table[x] == a && s2.table[y] == bb)
                e.add(v[s1.index][s2.index]);
        }
  finish_decomposition(b, sigma, decomp);
  return b;
}

// Case: separability across cut:rest, the untrusted party is the singleton.
// Plain local-hidden-state test; the conditional states are unconstrained.
Build build_sep_unsteerable(const Assemblage& sigma, const DetectionOptions&) {
  Build b;
  const TrustPattern& pat = sigma.pattern;
  const int m = pat.inputs[0], d = pat.trusted_dim();
  b.p = b.pb.add_free();
  b.pb.problem.objective_free[b.p] = 1.0;
  auto strategies = enum_deterministic(m, 2);
  std::vector<HermVar> v;
  for (const auto& s : strategies) {
    (void)s;
    v.push_back(b.pb.add_herm_psd(d));
  }
  std::vector<HermExpr> decomp(sigma.blocks.size(), zero_expr(d));
  for (int x = 0; x < m; ++x)
    for (int a = 0; a < 2; ++a) {
      HermExpr& e = decomp[pat.index({a}, {x})];
      for (const auto& s : strategies)
        if (s.table[x] == a) e.add(v[s.index]);
    }
  finish_decomposition(b, sigma, decomp);
  return b;
}

// Case: separability across cut:rest, one untrusted party inside the pair.
// The trusted blocks must be separable (SYM^k) with the singleton's
// reduction unsteerable from the untrusted party.
Build build_sep_pair_member(const Assemblage& sigma, int singleton_pos,
                            const DetectionOptions& opt) {
  Build b;
  const TrustPattern& pat = sigma.pattern;
  const int m = pat.inputs[0];
  const int d0 = pat.trusted_dims[0], d1 = pat.trusted_dims[1];
  const int ds = singleton_pos == 0 ? d0 : d1;
  b.p = b.pb.add_free();
  b.pb.problem.objective_free[b.p] = 1.0;

  auto strategies = enum_deterministic(m, 2);
  std::vector<HermVar> hidden;  // singleton-side hidden states
  for (const auto& s : strategies) {
    (void)s;
    hidden.push_back(b.pb.add_herm_psd(ds));
  }

  std::vector<HermExpr> decomp(sigma.blocks.size(), zero_expr(d0 * d1));
  for (int x = 0; x < m; ++x)
    for (int a = 0; a < 2; ++a) {
      const int idx = pat.index({a}, {x});
      SymExtensionSpec spec{opt.k, ds, singleton_pos == 0 ? d1 : d0,
                            singleton_pos};
      HermExpr base = build_sym_constraints(
          b.pb, spec, "gamma[" + std::to_string(idx) + "]");
      decomp[idx] = base;
      // tr over the non-singleton trusted party = sum_mu D(a|x) sigma_mu
      HermExpr red = reduce_base(base, singleton_pos, d0, d1);
      for (const auto& s : strategies)
        if (s.table[x] == a) red.add(hidden[s.index], -1.0);
      b.pb.add_herm_equality(red, Cmat::Zero(ds, ds),
                             "reduction[" + std::to_string(idx) + "]");
    }
  finish_decomposition(b, sigma, decomp);
  return b;
}

// Case: separability across cut:rest, two untrusted parties, the singleton
// untrusted (role 0 or 1). Steering allowed only from the other party.
Build build_sep_2u_mixed(const Assemblage& sigma, int role,
                         const DetectionOptions&) {
  Build b;
  const TrustPattern& pat = sigma.pattern;
  const int m1 = pat.inputs[0], m2 = pat.inputs[1], d = pat.trusted_dim();
  const int ms = role == 0 ? m1 : m2;     // singleton inputs
  const int mo = role == 0 ? m2 : m1;     // other-party inputs
  b.p = b.pb.add_free();
  b.pb.problem.objective_free[b.p] = 1.0;

  auto strategies = enum_deterministic(ms, 2);
  // sigma_{b|y,mu}: conditional assemblage of the other untrusted party
  std::vector<std::vector<HermVar>> cond(strategies.size());
  for (auto& row : cond) {
    row.resize(2 * mo);
    for (auto& h : row) h = b.pb.add_herm_psd(d);
  }
  auto cond_at = [&](int mu, int out, int in) -> HermVar& {
    return cond[mu][in * 2 + out];
  };

  std::vector<HermExpr> decomp(sigma.blocks.size(), zero_expr(d));
  for (int x = 0; x < m1; ++x)
    for (int y = 0; y < m2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb) {
          const int s_out = role == 0 ? a : bb, s_in = role == 0 ? x : y;
          const int o_out = role == 0 ? bb : a, o_in = role == 0 ? y : x;
          HermExpr& e = decomp[pat.index({a, bb}, {x, y})];
          for (const auto& s : strategies)
            if (s.table[s_in] == s_out) e.add(cond_at(s.index, o_out, o_in));
        }
  // each conditional assemblage is no-signalling
  for (const auto& s : strategies)
    for (int in = 0; in + 1 < mo; ++in) {
      HermExpr e = zero_expr(d);
      for (int out = 0; out < 2; ++out) {
        e.add(cond_at(s.index, out, in));
        e.add(cond_at(s.index, out, in + 1), -1.0);
      }
      b.pb.add_herm_equality(e, Cmat::Zero(d, d),
                             "ns[" + std::to_string(s.index) + "," +
                                 std::to_string(in) + "]");
    }
  finish_decomposition(b, sigma, decomp);
  return b;
}

// Case: separability across cut:rest with the trusted party as singleton.
// No-signalling extremal decomposition plus quantum-moment membership.
Build build_sep_2u_pair(const Assemblage& sigma, const DetectionOptions& opt) {
  if (opt.k != 1)
    throw ScenarioError("moment-matrix tests support only level k = 1");
  Build b;
  const TrustPattern& pat = sigma.pattern;
  const int m1 = pat.inputs[0], m2 = pat.inputs[1], d = pat.trusted_dim();
  b.p = b.pb.add_free();
  b.pb.problem.objective_free[b.p] = 1.0;

  NsPolytope poly = ns_vertices_cached(m1, m2, opt.cache_dir);
  std::vector<HermVar> nsvars;
  nsvars.reserve(poly.vertices.size());
  for (size_t v = 0; v < poly.vertices.size(); ++v)
    nsvars.push_back(b.pb.add_herm_psd(d));

  std::vector<HermExpr> decomp(sigma.blocks.size(), zero_expr(d));
  for (int x = 0; x < m1; ++x)
    for (int y = 0; y < m2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb) {
          HermExpr& e = decomp[pat.index({a, bb}, {x, y})];
          for (size_t v = 0; v < poly.vertices.size(); ++v) {
            double w = poly.value(poly.vertices[v], a, bb, x, y);
            if (w != 0.0) e.add(nsvars[v], w);
          }
        }
  finish_decomposition(b, sigma, decomp);

  // moment membership of sigma - p id itself
  Assemblage id = max_mixed_assemblage(pat);
  auto target = [&](int a, int bb, int x, int y) {
    HermExpr e = zero_expr(d);
    e.add_const(sigma.at(a, bb, x, y));
    e.add_free(b.p, Cmat(-id.at(a, bb, x, y)));
    return e;
  };
  build_moment_matrix(b.pb, {m1, m2, d, opt.k}, target, "moment");
  return b;
}

// Case: biseparable state, one untrusted party.
Build build_bisep_1u(const Assemblage& sigma, const DetectionOptions& opt) {
  Build b;
  const TrustPattern& pat = sigma.pattern;
  const int m = pat.inputs[0], d1 = pat.trusted_dims[0], d2 = pat.trusted_dims[1];
  const int d = d1 * d2;
  b.p = b.pb.add_free();
  b.pb.problem.objective_free[b.p] = 1.0;
  auto strategies = enum_deterministic(m, 2);

  // branch 1: unsteerable with arbitrary trusted-pair states
  std::vector<HermVar> lhs;
  for (const auto& s : strategies) {
    (void)s;
    lhs.push_back(b.pb.add_herm_psd(d));
  }
  // branch 2/3: separable trusted blocks with one party's reduction
  // unsteerable; SYM^(k) stands in for separability
  std::vector<HermVar> hidden1, hidden2;
  for (const auto& s : strategies) {
    (void)s;
    hidden1.push_back(b.pb.add_herm_psd(d1));
    hidden2.push_back(b.pb.add_herm_psd(d2));
  }
  std::vector<HermExpr> gammaB(sigma.blocks.size()), gammaC(sigma.blocks.size());
  std::vector<HermExpr> decomp(sigma.blocks.size(), zero_expr(d));
  for (int x = 0; x < m; ++x)
    for (int a = 0; a < 2; ++a) {
      const int idx = pat.index({a}, {x});
      gammaB[idx] = build_sym_constraints(b.pb, {opt.k, d1, d2, 0},
                                          "gammaB[" + std::to_string(idx) + "]");
      gammaC[idx] = build_sym_constraints(b.pb, {opt.k, d2, d1, 1},
                                          "gammaC[" + std::to_string(idx) + "]");
      HermExpr& e = decomp[idx];
      for (const auto& s : strategies)
        if (s.table[x] == a) e.add(lhs[s.index]);
      add_scaled(e, gammaB[idx], 1.0);
      add_scaled(e, gammaC[idx], 1.0);

      HermExpr redB = reduce_base(gammaB[idx], 0, d1, d2);
      for (const auto& s : strategies)
        if (s.table[x] == a) redB.add(hidden1[s.index], -1.0);
      b.pb.add_herm_equality(redB, Cmat::Zero(d1, d1),
                             "reductionB[" + std::to_string(idx) + "]");
      HermExpr redC = reduce_base(gammaC[idx], 1, d1, d2);
      for (const auto& s : strategies)
        if (s.table[x] == a) redC.add(hidden2[s.index], -1.0);
      b.pb.add_herm_equality(redC, Cmat::Zero(d2, d2),
                             "reductionC[" + std::to_string(idx) + "]");
    }
  // no-signalling of the first separable branch (the other is implied)
  for (int x = 0; x + 1 < m; ++x) {
    HermExpr e = zero_expr(d);
    for (int a = 0; a < 2; ++a) {
      add_scaled(e, gammaB[pat.index({a}, {x})], 1.0);
      add_scaled(e, gammaB[pat.index({a}, {x + 1})], -1.0);
    }
    b.pb.add_herm_equality(e, Cmat::Zero(d, d), "nsB[" + std::to_string(x) + "]");
  }
  finish_decomposition(b, sigma, decomp);
  return b;
}

// Case: biseparable state, two untrusted parties.
Build build_bisep_2u(const Assemblage& sigma, const DetectionOptions& opt) {
  if (opt.k != 1)
    throw ScenarioError("moment-matrix tests support only level k = 1");
  Build b;
  const TrustPattern& pat = sigma.pattern;
  const int m1 = pat.inputs[0], m2 = pat.inputs[1], d = pat.trusted_dim();
  b.p = b.pb.add_free();
  b.pb.problem.objective_free[b.p] = 1.0;

  auto sa = enum_deterministic(m1, 2), sb = enum_deterministic(m2, 2);
  // branch A:rest -- first party classical, conditional assemblages of the
  // second party; branch B:rest symmetric
  std::vector<std::vector<HermVar>> condA(sa.size()), condB(sb.size());
  for (auto& row : condA) {
    row.resize(2 * m2);
    for (auto& h : row) h = b.pb.add_herm_psd(d);
  }
  for (auto& row : condB) {
    row.resize(2 * m1);
    for (auto& h : row) h = b.pb.add_herm_psd(d);
  }

  // branch rest:trusted -- extremal no-signalling decomposition
  NsPolytope poly = ns_vertices_cached(m1, m2, opt.cache_dir);
  std::vector<HermVar> nsvars;
  for (size_t v = 0; v < poly.vertices.size(); ++v)
    nsvars.push_back(b.pb.add_herm_psd(d));
  std::vector<HermVar> pis(sigma.blocks.size());
  for (auto& h : pis) h = b.pb.add_herm_psd(d);
  for (int x = 0; x < m1; ++x)
    for (int y = 0; y < m2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb) {
          const int idx = pat.index({a, bb}, {x, y});
          HermExpr e = HermExpr::of(pis[idx], -1.0);
          for (size_t v = 0; v < poly.vertices.size(); ++v) {
            double w = poly.value(poly.vertices[v], a, bb, x, y);
            if (w != 0.0) e.add(nsvars[v], w);
          }
          b.pb.add_herm_equality(e, Cmat::Zero(d, d),
                                 "pi[" + std::to_string(idx) + "]");
        }

  std::vector<HermExpr> decomp(sigma.blocks.size(), zero_expr(d));
  for (int x = 0; x < m1; ++x)
    for (int y = 0; y < m2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb) {
          const int idx = pat.index({a, bb}, {x, y});
          HermExpr& e = decomp[idx];
          for (const auto& s : sa)
            if (s.table[x] == a) e.add(condA[s.index][y * 2 + bb]);
          for (const auto& s : sb)
            if (s.table[y] == bb) e.add(condB[s.index][x * 2 + a]);
          e.add(pis[idx]);
        }

  // per-strategy no-signalling of the conditional assemblages
  for (const auto& s : sa)
    for (int y = 0; y + 1 < m2; ++y) {
      HermExpr e = zero_expr(d);
      for (int bb = 0; bb < 2; ++bb) {
        e.add(condA[s.index][y * 2 + bb]);
        e.add(condA[s.index][(y + 1) * 2 + bb], -1.0);
      }
      b.pb.add_herm_equality(e, Cmat::Zero(d, d),
                             "nsA[" + std::to_string(s.index) + "," +
                                 std::to_string(y) + "]");
    }
  if (opt.both_ns)
    for (const auto& s : sb)
      for (int x = 0; x + 1 < m1; ++x) {
        HermExpr e = zero_expr(d);
        for (int a = 0; a < 2; ++a) {
          e.add(condB[s.index][x * 2 + a]);
          e.add(condB[s.index][(x + 1) * 2 + a], -1.0);
        }
        b.pb.add_herm_equality(e, Cmat::Zero(d, d),
                               "nsB[" + std::to_string(s.index) + "," +
                                   std::to_string(x) + "]");
      }

  // quantum-moment membership of the rest:trusted branch
  auto target = [&](int a, int bb, int x, int y) {
    return HermExpr::of(pis[pat.index({a, bb}, {x, y})]);
  };
  build_moment_matrix(b.pb, {m1, m2, d, opt.k}, target, "moment");
  finish_decomposition(b, sigma, decomp);
  return b;
}

}  // namespace

DetectionResult detect(const Assemblage& sigma, const EntanglementClass& cls,
                       const DetectionOptions& opt) {
  sigma.pattern.validate();
  ValidationReport rep = validate_assemblage(sigma, 1e-8);
  if (!rep.ok())
    throw ScenarioError("assemblage fails physicality checks: " + rep.summary());
  const int nu = sigma.pattern.n_untrusted();

  Build b;
  if (cls.tag == ClassTag::FullySeparable) {
    b = nu == 1 ? build_fullsep_1u(sigma, opt) : build_fullsep_2u(sigma, opt);
  } else if (cls.tag == ClassTag::Biseparable) {
    b = nu == 1 ? build_bisep_1u(sigma, opt) : build_bisep_2u(sigma, opt);
  } else {
    const auto& unt = sigma.pattern.untrusted;
    bool cut_untrusted = std::find(unt.begin(), unt.end(), cls.cut) != unt.end();
    if (nu == 1) {
      if (cut_untrusted) {
        b = build_sep_unsteerable(sigma, opt);
      } else {
        const auto trusted = sigma.pattern.trusted();
        int pos = trusted[0] == cls.cut ? 0 : 1;
        b = build_sep_pair_member(sigma, pos, opt);
      }
    } else {
      if (cut_untrusted) {
        int role = unt[0] == cls.cut ? 0 : 1;
        b = build_sep_2u_mixed(sigma, role, opt);
      } else {
        b = build_sep_2u_pair(sigma, opt);
      }
    }
  }

  ConicSolution sol = solve(b.pb.problem, opt.solver);
  DetectionResult out;
  out.k = opt.k;
  out.status = sol.status;
  out.rel_gap = sol.rel_gap;
  out.primal_residual = sol.primal_residual;
  out.dual_residual = sol.dual_residual;
  out.iterations = sol.iterations;
  out.message = sol.message;
  if (sol.status != SolveStatus::Optimal) {
    out.message = "solver failed: " + to_string(sol.status) +
                  (sol.message.empty() ? "" : " (" + sol.message + ")");
    return out;
  }
  out.p_star = sol.primal_objective;
  out.detected = out.p_star < -opt.epsilon;

  const int d = sigma.pattern.trusted_dim();
  out.witness.pattern = sigma.pattern;
  out.witness.blocks.resize(sigma.blocks.size());
  for (size_t i = 0; i < sigma.blocks.size(); ++i)
    out.witness.blocks[i] = ProblemBuilder::dual_block(sol, b.witness_rows[i], d);
  double scale = out.witness.id_pairing();
  if (std::abs(scale) > 1e-12)
    for (Cmat& f : out.witness.blocks) f /= scale;
  return out;
}

MeasurementSet pauli_measurements_for(const TrustPattern& pattern) {
  MeasurementSet out(pattern.n_untrusted());
  for (int u = 0; u < pattern.n_untrusted(); ++u)
    for (int x = 0; x < pattern.inputs[u]; ++x)
      out[u].push_back(pauli_povm(x + 1));
  return out;
}

ThresholdResult noise_threshold(const DensityMatrix& psi,
                                const MeasurementSet& measurements,
                                const EntanglementClass& cls,
                                const TrustPattern& pattern,
                                const DetectionOptions& opt, int bisect_iters) {
  Assemblage pure = compute_assemblage(psi, measurements, pattern);
  const int n = psi.dim();
  DensityMatrix mixed(Cmat::Identity(n, n) / double(n), psi.dims);
  Assemblage noise = compute_assemblage(mixed, measurements, pattern);

  ThresholdResult res;
  auto run = [&](double w) {
    ++res.solves;
    return detect(pure.mix(noise, w), cls, opt);
  };
  DetectionResult top = run(1.0);
  if (top.status != SolveStatus::Optimal)
    throw Error("solver failed at full visibility: " + top.message);
  res.p_at_full_visibility = top.p_star;
  if (!top.detected)
    throw NoThresholdError("state is not detected even at visibility 1");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < bisect_iters; ++it) {
    double mid = 0.5 * (lo + hi);
    if (run(mid).detected)
      hi = mid;
    else
      lo = mid;
  }
  res.w_star = 0.5 * (lo + hi);
  return res;
}

namespace {

MeasurementSet measurements_from_angles(const std::vector<double>& v,
                                        const TrustPattern& pattern) {
  MeasurementSet out(pattern.n_untrusted());
  size_t i = 0;
  for (int u = 0; u < pattern.n_untrusted(); ++u)
    for (int x = 0; x < pattern.inputs[u]; ++x) {
      out[u].push_back(bloch_povm(v.at(i), v.at(i + 1)));
      i += 2;
    }
  return out;
}

std::vector<double> angles_from_measurements(const MeasurementSet& meas) {
  std::vector<double> v;
  for (const auto& list : meas)
    for (const Povm& p : list) {
      // Bloch vector of the +1 projector
      Cmat a = p.elements[0] - p.elements[1];
      double nx = 0.5 * (a * pauli(1)).trace().real();
      double ny = 0.5 * (a * pauli(2)).trace().real();
      double nz = 0.5 * (a * pauli(3)).trace().real();
      v.push_back(std::acos(std::clamp(nz, -1.0, 1.0)));
      v.push_back(std::atan2(ny, nx));
    }
  return v;
}

}  // namespace

SearchResult optimize_measurements(const DensityMatrix& psi,
                                   const EntanglementClass& cls,
                                   const TrustPattern& pattern,
                                   const MeasurementSet& seed, int budget,
                                   const DetectionOptions& opt,
                                   unsigned rng_seed) {
  SearchResult best;
  best.measurements = seed;
  if (budget <= 0) return best;

  const int coarse_iters = 10;
  int used = 0;
  auto objective = [&](const std::vector<double>& angles) -> double {
    if (used + coarse_iters + 1 > budget) return std::nan("");
    try {
      ThresholdResult tr = noise_threshold(
          psi, measurements_from_angles(angles, pattern), cls, pattern, opt,
          coarse_iters);
      used += tr.solves;
      return tr.w_star;
    } catch (const NoThresholdError&) {
      used += coarse_iters + 1;
      return 1.5;  // penalty: no detection even for the pure state
    }
  };

  std::vector<double> x0 = angles_from_measurements(seed);
  const int n = static_cast<int>(x0.size());
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> jitter(0.0, 0.25);

  auto record = [&](const std::vector<double>& x, double f) {
    if (std::isnan(f)) return;
    if (std::isnan(best.w_star) || f < best.w_star) {
      best.w_star = f;
      best.measurements = measurements_from_angles(x, pattern);
    }
  };

  bool first_restart = true;
  while (used + coarse_iters + 1 <= budget) {
    // simplex around the current best (seed on the first pass)
    std::vector<std::vector<double>> pts(n + 1, x0);
    for (int i = 1; i <= n; ++i) {
      pts[i][i - 1] += first_restart ? 0.25 : jitter(rng);
      if (!first_restart)
        for (int j = 0; j < n; ++j) pts[i][j] += 0.3 * jitter(rng);
    }
    std::vector<double> f(n + 1);
    bool out_of_budget = false;
    for (int i = 0; i <= n && !out_of_budget; ++i) {
      f[i] = objective(pts[i]);
      out_of_budget = std::isnan(f[i]);
      record(pts[i], f[i]);
    }
    if (out_of_budget) break;

    // standard Nelder-Mead loop
    for (int step = 0; step < 200; ++step) {
      std::vector<int> order(n + 1);
      for (int i = 0; i <= n; ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](int a, int bb) { return f[a] < f[bb]; });
      if (f[order[n]] - f[order[0]] < 5e-4) break;

      std::vector<double> centroid(n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) centroid[j] += pts[order[i]][j] / n;
      auto combine = [&](double t) {
        std::vector<double> x(n);
        for (int j = 0; j < n; ++j)
          x[j] = centroid[j] + t * (pts[order[n]][j] - centroid[j]);
        return x;
      };
      auto xr = combine(-1.0);
      double fr = objective(xr);
      record(xr, fr);
      if (std::isnan(fr)) break;
      if (fr < f[order[0]]) {
        auto xe = combine(-2.0);
        double fe = objective(xe);
        record(xe, fe);
        if (std::isnan(fe)) break;
        if (fe < fr) {
          pts[order[n]] = xe;
          f[order[n]] = fe;
        } else {
          pts[order[n]] = xr;
          f[order[n]] = fr;
        }
      } else if (fr < f[order[n - 1]]) {
        pts[order[n]] = xr;
        f[order[n]] = fr;
      } else {
        auto xc = combine(0.5);
        double fc = objective(xc);
        record(xc, fc);
        if (std::isnan(fc)) break;
        if (fc < f[order[n]]) {
          pts[order[n]] = xc;
          f[order[n]] = fc;
        } else {
          // shrink towards the best point
          bool oob = false;
          for (int i = 1; i <= n && !oob; ++i) {
            for (int j = 0; j < n; ++j)
              pts[order[i]][j] =
                  0.5 * (pts[order[i]][j] + pts[order[0]][j]);
            f[order[i]] = objective(pts[order[i]]);
            record(pts[order[i]], f[order[i]]);
            oob = std::isnan(f[order[i]]);
          }
          if (oob) break;
        }
      }
    }
    first_restart = false;
    if (!std::isnan(best.w_star)) x0 = angles_from_measurements(best.measurements);
  }
  best.solves_used = used;
  return best;
}

}  // namespace steerdet
