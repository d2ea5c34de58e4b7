#include "steerdet/relax.hpp"

#include <map>

namespace steerdet {

HermExpr build_sym_constraints(ProblemBuilder& pb, const SymExtensionSpec& spec,
                               const std::string& name) {
  if (spec.k < 1) throw ParamError("extension order must be >= 1");
  if (spec.extend_party != 0 && spec.extend_party != 1)
    throw ParamError("extend_party must be 0 or 1");
  const int d0 = spec.extend_party == 0 ? spec.d_ext : spec.d_other;
  const int d1 = spec.extend_party == 0 ? spec.d_other : spec.d_ext;
  if (spec.k == 1) {
    // PSD + PPT, no extension variables
    HermVar v = pb.add_herm_psd(d0 * d1);
    HermExpr ppt;
    ppt.d = d0 * d1;
    ppt.constant = Cmat::Zero(ppt.d, ppt.d);
    ppt.add_term(pt_term(v, {d0, d1}, 1));
    pb.require_psd(ppt, name + ".ppt");
    return HermExpr::of(v);
  }

  long long ext_dim = spec.d_other;
  for (int i = 0; i < spec.k; ++i) {
    ext_dim *= spec.d_ext;
    if (2 * ext_dim > 256)
      throw ResourceError("symmetric extension exceeds the memory budget");
  }
  // copies of the extended party sit adjacent so the base keeps the
  // caller's factor order: extend_party 0 -> [e_1..e_k, other],
  // extend_party 1 -> [other, e_1..e_k]
  std::vector<int> dims;
  int first_copy, ppt_party;
  std::vector<int> keep;
  if (spec.extend_party == 0) {
    dims.assign(spec.k, spec.d_ext);
    dims.push_back(spec.d_other);
    first_copy = 0;
    ppt_party = spec.k;
    keep = {0, spec.k};
  } else {
    dims.assign(1, spec.d_other);
    dims.insert(dims.end(), spec.k, spec.d_ext);
    first_copy = 1;
    ppt_party = 0;
    keep = {0, 1};
  }
  HermVar ext = pb.add_herm_psd(static_cast<int>(ext_dim));

  // invariance under adjacent swaps generates the full symmetric group
  for (int i = first_copy; i + 1 < first_copy + spec.k; ++i) {
    std::vector<int> perm(spec.k + 1);
    for (int p = 0; p <= spec.k; ++p) perm[p] = p;
    std::swap(perm[i], perm[i + 1]);
    HermExpr sym;
    sym.d = static_cast<int>(ext_dim);
    sym.constant = Cmat::Zero(sym.d, sym.d);
    sym.add_term(permute_term(ext, dims, perm));
    sym.add(ext, -1.0);
    pb.add_herm_equality(sym, Cmat::Zero(sym.d, sym.d),
                         name + ".swap" + std::to_string(i));
  }

  // PPT cut on the non-extended party
  HermExpr ppt;
  ppt.d = static_cast<int>(ext_dim);
  ppt.constant = Cmat::Zero(ppt.d, ppt.d);
  ppt.add_term(pt_term(ext, dims, ppt_party));
  pb.require_psd(ppt, name + ".ppt");

  // base = reduction to one copy plus the other party
  HermExpr base;
  base.d = d0 * d1;
  base.constant = Cmat::Zero(base.d, base.d);
  base.add_term(ptrace_term(ext, dims, keep));
  return base;
}

namespace {

// A reduced word: ordered A-projector indices and B-projector indices.
struct Word {
  std::vector<int> a, b;
  bool operator<(const Word& o) const { return std::tie(a, b) < std::tie(o.a, o.b); }
  bool operator==(const Word& o) const { return a == o.a && b == o.b; }
  Word adjoint() const {
    Word w = *this;
    std::reverse(w.a.begin(), w.a.end());
    std::reverse(w.b.begin(), w.b.end());
    return w;
  }
};

std::vector<int> reduce_idem(std::vector<int> v) {
  std::vector<int> out;
  for (int x : v)
    if (out.empty() || out.back() != x) out.push_back(x);
  return out;
}

Word product(const Word& v, const Word& w) {
  Word out;
  out.a = v.a;
  out.a.insert(out.a.end(), w.a.begin(), w.a.end());
  out.b = v.b;
  out.b.insert(out.b.end(), w.b.begin(), w.b.end());
  out.a = reduce_idem(out.a);
  out.b = reduce_idem(out.b);
  return out;
}

}  // namespace

int moment_word_count(const MomentMatrixSpec& spec) {
  return 1 + spec.m1 + spec.m2 + spec.m1 * spec.m2;
}

HermVar build_moment_matrix(ProblemBuilder& pb, const MomentMatrixSpec& spec,
                            const std::function<HermExpr(int, int, int, int)>& target,
                            const std::string& name) {
  if (spec.level != 1) throw ScenarioError("only moment level 1 is supported");
  const int m1 = spec.m1, m2 = spec.m2, d = spec.d_t;
  const int nw = moment_word_count(spec);

  // word list: identity, A_x, B_y, A_x B_y
  std::vector<Word> words;
  words.push_back({});
  for (int x = 0; x < m1; ++x) words.push_back({{x}, {}});
  for (int y = 0; y < m2; ++y) words.push_back({{}, {y}});
  for (int x = 0; x < m1; ++x)
    for (int y = 0; y < m2; ++y) words.push_back({{x}, {y}});

  HermVar gamma = pb.add_herm_psd(nw * d);
  HermExpr ppt;
  ppt.d = nw * d;
  ppt.constant = Cmat::Zero(ppt.d, ppt.d);
  ppt.add_term(pt_term(gamma, {nw, d}, 1));
  pb.require_psd(ppt, name + ".ppt");

  auto gamma_block = [&](int v, int w, double coef = 1.0) {
    return subblock_term(gamma, v * d, w * d, d, coef);
  };

  // identified words are tied to the target; other repeated words are tied
  // to the first position where they occur (daggered positions to the
  // transposed block, which equals the adjoint for Hermitian Gamma)
  std::map<Word, std::pair<int, int>> first_pos;
  for (int v = 0; v < nw; ++v)
    for (int w = v; w < nw; ++w) {
      Word mono = product(words[v], words[w]);
      const bool idA = mono.a.size() <= 1, idB = mono.b.size() <= 1;
      if (idA && idB) {
        // identified with an assemblage expression
        HermExpr t;
        if (mono.a.empty() && mono.b.empty()) {
          t = target(0, 0, 0, 0);
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              if (a || b) {
                HermExpr e = target(a, b, 0, 0);
                for (auto& tt : e.terms) t.add_term(tt);
                for (auto& ft : e.free_terms) t.add_free(ft.first, ft.second);
                t.add_const(e.constant);
              }
        } else if (mono.b.empty()) {
          t = target(0, 0, mono.a[0], 0);
          HermExpr e = target(0, 1, mono.a[0], 0);
          for (auto& tt : e.terms) t.add_term(tt);
          for (auto& ft : e.free_terms) t.add_free(ft.first, ft.second);
          t.add_const(e.constant);
        } else if (mono.a.empty()) {
          t = target(0, 0, 0, mono.b[0]);
          HermExpr e = target(1, 0, 0, mono.b[0]);
          for (auto& tt : e.terms) t.add_term(tt);
          for (auto& ft : e.free_terms) t.add_free(ft.first, ft.second);
          t.add_const(e.constant);
        } else {
          t = target(0, 0, mono.a[0], mono.b[0]);
        }
        // Gamma[v,w] - t == 0
        HermExpr diff;
        diff.d = d;
        diff.constant = -t.constant;
        diff.add_term(gamma_block(v, w));
        for (auto& tt : t.terms) {
          tt.coef = -tt.coef;
          diff.add_term(tt);
        }
        for (auto& ft : t.free_terms)
          diff.add_free(ft.first, Cmat(-ft.second));
        std::string ename = name + ".id[" + std::to_string(v) + "," +
                            std::to_string(w) + "]";
        if (v == w)
          pb.add_herm_equality(diff, Cmat::Zero(d, d), ename);
        else
          pb.add_entry_equality(diff, Cmat::Zero(d, d), ename);
        continue;
      }
      // unknown moment: group equal reduced words
      Word canon = std::min(mono, mono.adjoint());
      bool daggered = !(mono == canon);
      auto it = first_pos.find(canon);
      if (it == first_pos.end()) {
        first_pos[canon] = {daggered ? w : v, daggered ? v : w};
        continue;
      }
      auto [rv, rw] = it->second;
      if (rv == v && rw == w) continue;
      HermExpr diff;
      diff.d = d;
      diff.constant = Cmat::Zero(d, d);
      diff.add_term(gamma_block(v, w));
      // the adjoint of a sub-block of Hermitian Gamma is the transposed
      // sub-block, so a daggered tie just references (rw, rv)
      if (daggered)
        diff.add_term(subblock_term(gamma, rw * d, rv * d, d, -1.0));
      else
        diff.add_term(subblock_term(gamma, rv * d, rw * d, d, -1.0));
      pb.add_entry_equality(diff, Cmat::Zero(d, d),
                            name + ".tie[" + std::to_string(v) + "," +
                                std::to_string(w) + "]");
    }
  return gamma;
}

}  // namespace steerdet
