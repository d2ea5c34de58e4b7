#include <nlohmann/json.hpp>

#include "steerdet/detect.hpp"

namespace steerdet {

using nlohmann::json;

ObservableView to_observable_form(const Witness& w) {
  const TrustPattern& pat = w.pattern;
  ObservableView v;
  v.untrusted = pat.n_untrusted();
  const int d = pat.trusted_dim();
  if (v.untrusted == 1) {
    const int m = pat.inputs[0];
    v.J.assign(m + 1, Cmat::Zero(d, d));
    for (int x = 0; x < m; ++x)
      for (int a = 0; a < 2; ++a) {
        v.J[0] += 0.5 * w.blocks[pat.index({a}, {x})];
        v.J[x + 1] += 0.5 * (a == 0 ? 1.0 : -1.0) * w.blocks[pat.index({a}, {x})];
      }
  } else {
    const int m1 = pat.inputs[0], m2 = pat.inputs[1];
    v.K0 = Cmat::Zero(d, d);
    v.Kx.assign(m1, Cmat::Zero(d, d));
    v.Kpy.assign(m2, Cmat::Zero(d, d));
    v.Kxy.assign(m1 * m2, Cmat::Zero(d, d));
    for (int x = 0; x < m1; ++x)
      for (int y = 0; y < m2; ++y)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            const Cmat& f = w.blocks[pat.index({a, b}, {x, y})];
            double sa = a == 0 ? 1.0 : -1.0, sb = b == 0 ? 1.0 : -1.0;
            v.K0 += 0.25 * f;
            v.Kx[x] += 0.25 * sa * f;
            v.Kpy[y] += 0.25 * sb * f;
            v.Kxy[x * m2 + y] += 0.25 * sa * sb * f;
          }
  }
  return v;
}

CoefficientView to_coefficient_form(const Witness& w) {
  const TrustPattern& pat = w.pattern;
  for (int d : pat.trusted_dims)
    if (d != 2)
      throw ScenarioError("coefficient form requires qubit trusted parties");
  ObservableView ov = to_observable_form(w);
  CoefficientView cv;
  if (pat.n_untrusted() == 1) {
    const int m = pat.inputs[0];
    cv.shape = {m + 1, 4, 4};
    cv.f.assign((m + 1) * 16, 0.0);
    for (int x = 0; x <= m; ++x) {
      auto c = pauli_expand(ov.J[x]);
      for (int t = 0; t < 16; ++t) cv.f[x * 16 + t] = c[t];
    }
  } else {
    const int m1 = pat.inputs[0], m2 = pat.inputs[1];
    cv.shape = {m1 + 1, m2 + 1, 4};
    cv.f.assign((m1 + 1) * (m2 + 1) * 4, 0.0);
    auto put = [&](int i, int j, const Cmat& block) {
      auto c = pauli_expand(block);
      for (int z = 0; z < 4; ++z) cv.f[(i * (m2 + 1) + j) * 4 + z] = c[z];
    };
    put(0, 0, ov.K0);
    for (int x = 0; x < m1; ++x) put(x + 1, 0, ov.Kx[x]);
    for (int y = 0; y < m2; ++y) put(0, y + 1, ov.Kpy[y]);
    for (int x = 0; x < m1; ++x)
      for (int y = 0; y < m2; ++y) put(x + 1, y + 1, ov.Kxy[x * m2 + y]);
  }
  return cv;
}

namespace {

// permutation sending the ordering [untrusted..., trusted...] back to A,B,C
std::vector<int> placement_perm(const TrustPattern& pat) {
  std::vector<int> order = pat.untrusted;
  for (int t : pat.trusted()) order.push_back(t);
  std::vector<int> perm(order.size());
  for (size_t pos = 0; pos < order.size(); ++pos) perm[order[pos]] = static_cast<int>(pos);
  return perm;
}

double trace_with_state(const Cmat& op_grouped, const TrustPattern& pat,
                        const DensityMatrix& rho) {
  // op is built on the grouped ordering [untrusted..., trusted...]
  std::vector<int> gdims;
  for (int u : pat.untrusted) gdims.push_back(rho.dims[u]);
  for (int d : pat.trusted_dims) gdims.push_back(d);
  Cmat op = permute_parties(op_grouped, gdims, placement_perm(pat));
  return (op * rho.mat).trace().real();
}

}  // namespace

double evaluate_observable_form(const ObservableView& v, const DensityMatrix& rho,
                                const MeasurementSet& meas,
                                const TrustPattern& pattern) {
  const int du0 = rho.dims[pattern.untrusted[0]];
  if (pattern.n_untrusted() == 1) {
    Cmat op = kron(Cmat::Identity(du0, du0), v.J[0]);
    for (size_t x = 0; x + 1 < v.J.size(); ++x)
      op += kron(meas[0][x].observable(), v.J[x + 1]);
    return trace_with_state(op, pattern, rho);
  }
  const int du1 = rho.dims[pattern.untrusted[1]];
  Cmat id0 = Cmat::Identity(du0, du0), id1 = Cmat::Identity(du1, du1);
  Cmat op = kron(kron(id0, id1), v.K0);
  const int m1 = pattern.inputs[0], m2 = pattern.inputs[1];
  for (int x = 0; x < m1; ++x)
    op += kron(kron(meas[0][x].observable(), id1), v.Kx[x]);
  for (int y = 0; y < m2; ++y)
    op += kron(kron(id0, meas[1][y].observable()), v.Kpy[y]);
  for (int x = 0; x < m1; ++x)
    for (int y = 0; y < m2; ++y)
      op += kron(kron(meas[0][x].observable(), meas[1][y].observable()),
                 v.Kxy[x * m2 + y]);
  return trace_with_state(op, pattern, rho);
}

double evaluate_coefficient_form(const CoefficientView& v,
                                 const DensityMatrix& rho,
                                 const MeasurementSet& meas,
                                 const TrustPattern& pattern) {
  const int du0 = rho.dims[pattern.untrusted[0]];
  if (pattern.n_untrusted() == 1) {
    const int m = pattern.inputs[0];
    Cmat grouped = Cmat::Zero(rho.dim(), rho.dim());
    for (int x = 0; x <= m; ++x) {
      Cmat ax = x == 0 ? Cmat(Cmat::Identity(du0, du0)) : meas[0][x - 1].observable();
      for (int y = 0; y < 4; ++y)
        for (int z = 0; z < 4; ++z) {
          double c = v.at(x, y, z);
          if (c != 0.0) grouped += c * kron(kron(ax, pauli(y)), pauli(z));
        }
    }
    return trace_with_state(grouped, pattern, rho);
  }
  const int du1 = rho.dims[pattern.untrusted[1]];
  const int m1 = pattern.inputs[0], m2 = pattern.inputs[1];
  Cmat grouped = Cmat::Zero(rho.dim(), rho.dim());
  for (int x = 0; x <= m1; ++x) {
    Cmat ax = x == 0 ? Cmat(Cmat::Identity(du0, du0)) : meas[0][x - 1].observable();
    for (int y = 0; y <= m2; ++y) {
      Cmat by = y == 0 ? Cmat(Cmat::Identity(du1, du1)) : meas[1][y - 1].observable();
      for (int z = 0; z < 4; ++z) {
        double c = v.at(x, y, z);
        if (c != 0.0) grouped += c * kron(kron(ax, by), pauli(z));
      }
    }
  }
  return trace_with_state(grouped, pattern, rho);
}

namespace {

json cmat_json_re(const Cmat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j).real());
    rows.push_back(row);
  }
  return rows;
}

json cmat_json_im(const Cmat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j).imag());
    rows.push_back(row);
  }
  return rows;
}

Cmat cmat_from(const json& re, const json& im) {
  const int n = static_cast<int>(re.size());
  Cmat m(n, re.at(0).size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m.cols(); ++j)
      m(i, j) = cdouble(re.at(i).at(j).get<double>(), im.at(i).at(j).get<double>());
  return m;
}

}  // namespace

json witness_to_json(const Witness& w, const EntanglementClass& cls, int k,
                     double rel_gap, double primal_residual,
                     double dual_residual) {
  const TrustPattern& pat = w.pattern;
  json blocks = json::array();
  auto push = [&](std::vector<int> idx, const Cmat& f) {
    blocks.push_back(json{
        {"index", idx}, {"re", cmat_json_re(f)}, {"im", cmat_json_im(f)}});
  };
  if (pat.n_untrusted() == 1) {
    for (int x = 0; x < pat.inputs[0]; ++x)
      for (int a = 0; a < 2; ++a) push({a, x}, w.blocks[pat.index({a}, {x})]);
  } else {
    for (int x = 0; x < pat.inputs[0]; ++x)
      for (int y = 0; y < pat.inputs[1]; ++y)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            push({a, b, x, y}, w.blocks[pat.index({a, b}, {x, y})]);
  }
  json out{{"pattern", pattern_to_json(pat)},
           {"F", blocks},
           {"normalization", w.id_pairing()},
           {"provenance",
            {{"class", to_string(cls)},
             {"k", k},
             {"residuals",
              {{"rel_gap", rel_gap},
               {"primal", primal_residual},
               {"dual", dual_residual}}}}}};
  bool qubits = true;
  for (int d : pat.trusted_dims) qubits = qubits && d == 2;
  if (qubits) {
    CoefficientView cv = to_coefficient_form(w);
    out["f"] = json{{"shape", cv.shape}, {"data", cv.f}};
  }
  return out;
}

Witness witness_from_json(const json& j) {
  Witness w;
  w.pattern = pattern_from_json(j.at("pattern"));
  w.blocks.assign(w.pattern.block_count(), Cmat());
  for (const auto& b : j.at("F")) {
    Cmat f = cmat_from(b.at("re"), b.at("im"));
    const auto& idx = b.at("index");
    if (w.pattern.n_untrusted() == 1)
      w.blocks[w.pattern.index({idx.at(0).get<int>()}, {idx.at(1).get<int>()})] = f;
    else
      w.blocks[w.pattern.index({idx.at(0).get<int>(), idx.at(1).get<int>()},
                               {idx.at(2).get<int>(), idx.at(3).get<int>()})] = f;
  }
  for (const Cmat& b : w.blocks)
    if (b.size() == 0) throw Error("witness file misses blocks");
  return w;
}

}  // namespace steerdet
