#include "steerdet/model.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace steerdet {

using nlohmann::json;

std::string party_name(int p) {
  static const char* names[] = {"A", "B", "C"};
  if (p < 0 || p >= kParties) throw ParamError("party index out of range");
  return names[p];
}

DensityMatrix::DensityMatrix(Cmat m, std::vector<int> d)
    : mat(std::move(m)), dims(std::move(d)) {
  long long total = 1;
  for (int x : dims) total *= x;
  if (total != mat.rows()) throw DimensionError("state dims mismatch");
  require_hermitian(mat);
  if (std::abs(mat.trace().real() - 1.0) > 1e-9)
    throw ParamError("density matrix trace differs from 1");
  if (min_eig(mat) < -1e-9) throw ParamError("density matrix is not PSD");
}

void Povm::validate(double tol) const {
  if (elements.empty()) throw ParamError("empty POVM");
  Cmat sum = Cmat::Zero(dim(), dim());
  for (const Cmat& e : elements) {
    require_hermitian(e, tol);
    if (min_eig(e) < -tol) throw ParamError("POVM element is not PSD");
    sum += e;
  }
  if ((sum - Cmat::Identity(dim(), dim())).cwiseAbs().maxCoeff() > tol)
    throw ParamError("POVM elements do not sum to the identity");
}

Cmat Povm::observable() const {
  if (outcomes() != 2) throw ScenarioError("observable requires binary POVM");
  return elements[0] - elements[1];
}

DensityMatrix ghz_state() {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(8);
  v(0) = v(7) = 1.0 / std::sqrt(2.0);
  return DensityMatrix(v * v.adjoint(), {2, 2, 2});
}

DensityMatrix w_state() {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(8);
  v(1) = v(2) = v(4) = 1.0 / std::sqrt(3.0);
  return DensityMatrix(v * v.adjoint(), {2, 2, 2});
}

DensityMatrix noisy(const DensityMatrix& psi, double w) {
  if (w < 0.0 || w > 1.0) throw ParamError("visibility must lie in [0,1]");
  const int n = psi.dim();
  Cmat m = w * psi.mat + (1.0 - w) * Cmat::Identity(n, n) / double(n);
  return DensityMatrix(m, psi.dims);
}

Povm pauli_povm(int axis) {
  if (axis < 1 || axis > 3) throw ParamError("pauli axis must be 1..3 (X,Y,Z)");
  Cmat id = Cmat::Identity(2, 2);
  return Povm{{0.5 * (id + pauli(axis)), 0.5 * (id - pauli(axis))}};
}

Povm bloch_povm(double theta, double phi) {
  Cmat n = std::sin(theta) * std::cos(phi) * pauli(1) +
           std::sin(theta) * std::sin(phi) * pauli(2) +
           std::cos(theta) * pauli(3);
  Cmat id = Cmat::Identity(2, 2);
  return Povm{{0.5 * (id + n), 0.5 * (id - n)}};
}

std::vector<int> TrustPattern::trusted() const {
  std::vector<int> out;
  for (int p = 0; p < kParties; ++p)
    if (std::find(untrusted.begin(), untrusted.end(), p) == untrusted.end())
      out.push_back(p);
  return out;
}

int TrustPattern::trusted_dim() const {
  int d = 1;
  for (int x : trusted_dims) d *= x;
  return d;
}

int TrustPattern::block_count() const {
  int n = 1;
  for (size_t u = 0; u < untrusted.size(); ++u) n *= inputs[u] * outcomes[u];
  return n;
}

void TrustPattern::validate() const {
  if (untrusted.empty() || untrusted.size() > 2)
    throw ScenarioError("pattern must have 1 or 2 untrusted parties");
  if (!std::is_sorted(untrusted.begin(), untrusted.end()) ||
      untrusted.front() < 0 || untrusted.back() >= kParties)
    throw ScenarioError("untrusted parties must be a sorted subset of {A,B,C}");
  if (inputs.size() != untrusted.size() || outcomes.size() != untrusted.size())
    throw ScenarioError("inputs/outcomes must match the untrusted party count");
  for (size_t u = 0; u < untrusted.size(); ++u) {
    if (inputs[u] < 2 || inputs[u] > 3)
      throw ScenarioError("number of inputs must be 2 or 3");
    if (outcomes[u] != 2) throw ScenarioError("only binary outcomes supported");
  }
  if (trusted_dims.size() != kParties - untrusted.size())
    throw ScenarioError("trusted_dims must cover every trusted party");
  for (int d : trusted_dims)
    if (d < 2) throw ScenarioError("trusted dimensions must be >= 2");
}

int TrustPattern::index(const std::vector<int>& outs,
                        const std::vector<int>& ins) const {
  int idx = 0;
  for (size_t u = 0; u < untrusted.size(); ++u) idx = idx * inputs[u] + ins[u];
  for (size_t u = 0; u < untrusted.size(); ++u) idx = idx * outcomes[u] + outs[u];
  return idx;
}

TrustPattern one_untrusted(int party, int inputs, std::vector<int> trusted_dims) {
  TrustPattern p{{party}, {inputs}, {2}, std::move(trusted_dims)};
  p.validate();
  return p;
}

TrustPattern two_untrusted(int p1, int p2, int inputs1, int inputs2, int trusted_dim) {
  if (p1 > p2) {
    std::swap(p1, p2);
    std::swap(inputs1, inputs2);
  }
  TrustPattern p{{p1, p2}, {inputs1, inputs2}, {2, 2}, {trusted_dim}};
  p.validate();
  return p;
}

const Cmat& Assemblage::at(int a, int x) const {
  return blocks.at(pattern.index({a}, {x}));
}
Cmat& Assemblage::at(int a, int x) {
  return blocks.at(pattern.index({a}, {x}));
}
const Cmat& Assemblage::at(int a, int b, int x, int y) const {
  return blocks.at(pattern.index({a, b}, {x, y}));
}
Cmat& Assemblage::at(int a, int b, int x, int y) {
  return blocks.at(pattern.index({a, b}, {x, y}));
}

Assemblage Assemblage::mix(const Assemblage& other, double w) const {
  if (!(pattern == other.pattern)) throw ScenarioError("pattern mismatch in mix");
  Assemblage out{pattern, {}};
  out.blocks.reserve(blocks.size());
  for (size_t i = 0; i < blocks.size(); ++i)
    out.blocks.push_back(w * blocks[i] + (1.0 - w) * other.blocks[i]);
  return out;
}

Assemblage max_mixed_assemblage(const TrustPattern& pattern) {
  pattern.validate();
  int o_total = 1;
  for (int o : pattern.outcomes) o_total *= o;
  const int d = pattern.trusted_dim();
  Assemblage out{pattern, {}};
  out.blocks.assign(pattern.block_count(),
                    Cmat::Identity(d, d) / double(o_total * d));
  return out;
}

Assemblage compute_assemblage(const DensityMatrix& rho,
                              const std::vector<std::vector<Povm>>& measurements,
                              const TrustPattern& pattern) {
  pattern.validate();
  if (rho.dims.size() != kParties)
    throw ScenarioError("state must be tripartite");
  if (measurements.size() != pattern.untrusted.size())
    throw ScenarioError("one measurement list per untrusted party required");
  const std::vector<int> trusted = pattern.trusted();
  for (size_t t = 0; t < trusted.size(); ++t)
    if (rho.dims[trusted[t]] != pattern.trusted_dims[t])
      throw ScenarioError("trusted dimensions do not match the state");
  for (size_t u = 0; u < measurements.size(); ++u) {
    if (static_cast<int>(measurements[u].size()) != pattern.inputs[u])
      throw ScenarioError("measurement count does not match pattern inputs");
    for (const Povm& m : measurements[u]) {
      if (m.outcomes() != pattern.outcomes[u])
        throw ScenarioError("POVM outcome count does not match pattern");
      if (m.dim() != rho.dims[pattern.untrusted[u]])
        throw ScenarioError("POVM dimension does not match the state");
    }
  }

  Assemblage out{pattern, {}};
  out.blocks.assign(pattern.block_count(), Cmat());
  const int nu = pattern.n_untrusted();
  std::vector<int> ins(nu, 0), outs(nu, 0);
  for (;;) {
    // iterate all (input, outcome) tuples
    std::vector<Cmat> factors(kParties);
    for (int p = 0; p < kParties; ++p)
      factors[p] = Cmat::Identity(rho.dims[p], rho.dims[p]);
    for (int u = 0; u < nu; ++u)
      factors[pattern.untrusted[u]] = measurements[u][ins[u]].elements[outs[u]];
    Cmat block = partial_trace(kron(factors) * rho.mat, rho.dims, trusted);
    out.blocks[pattern.index(outs, ins)] = resymmetrize(block);

    int k = nu - 1;
    for (; k >= 0; --k) {
      if (++outs[k] < pattern.outcomes[k]) break;
      outs[k] = 0;
      if (++ins[k] < pattern.inputs[k]) break;
      ins[k] = 0;
    }
    if (k < 0) break;
  }
  return out;
}

double ValidationReport::max_magnitude() const {
  double m = 0.0;
  for (const auto& v : violations) m = std::max(m, v.magnitude);
  return m;
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::string s;
  for (const auto& v : violations) {
    s += v.kind + " at " + v.where + " (" + std::to_string(v.magnitude) + "); ";
  }
  return s;
}

namespace {

void check_block(ValidationReport& rep, const Cmat& m, const std::string& where,
                 double tol) {
  double dev = herm_deviation(m);
  if (dev > tol) {
    rep.violations.push_back({"hermiticity", where, dev});
    return;
  }
  double me = min_eig(resymmetrize(m));
  if (me < -tol) rep.violations.push_back({"psd", where, -me});
}

}  // namespace

ValidationReport validate_assemblage(const Assemblage& sigma, double tol) {
  ValidationReport rep;
  const TrustPattern& pat = sigma.pattern;
  pat.validate();
  const int d = pat.trusted_dim();
  if (static_cast<int>(sigma.blocks.size()) != pat.block_count()) {
    rep.violations.push_back({"shape", "block count", 0.0});
    return rep;
  }
  for (const Cmat& b : sigma.blocks)
    if (b.rows() != d || b.cols() != d) {
      rep.violations.push_back({"shape", "block dimension", 0.0});
      return rep;
    }

  if (pat.n_untrusted() == 1) {
    const int m = pat.inputs[0], o = pat.outcomes[0];
    for (int x = 0; x < m; ++x)
      for (int a = 0; a < o; ++a)
        check_block(rep, sigma.at(a, x),
                    "sigma(" + std::to_string(a) + "|" + std::to_string(x) + ")",
                    tol);
    std::vector<Cmat> marg(m, Cmat::Zero(d, d));
    for (int x = 0; x < m; ++x) {
      for (int a = 0; a < o; ++a) marg[x] += sigma.at(a, x);
      double norm_dev = std::abs(marg[x].trace().real() - 1.0);
      if (norm_dev > tol)
        rep.violations.push_back(
            {"normalization", "x=" + std::to_string(x), norm_dev});
    }
    for (int x = 1; x < m; ++x) {
      double dev = (marg[x] - marg[0]).cwiseAbs().maxCoeff();
      if (dev > tol)
        rep.violations.push_back(
            {"no-signalling", "x=" + std::to_string(x) + " vs x=0", dev});
    }
  } else {
    const int mA = pat.inputs[0], mB = pat.inputs[1];
    const int oA = pat.outcomes[0], oB = pat.outcomes[1];
    for (int x = 0; x < mA; ++x)
      for (int y = 0; y < mB; ++y) {
        Cmat tot = Cmat::Zero(d, d);
        for (int a = 0; a < oA; ++a)
          for (int b = 0; b < oB; ++b) {
            check_block(rep, sigma.at(a, b, x, y),
                        "sigma(" + std::to_string(a) + std::to_string(b) + "|" +
                            std::to_string(x) + std::to_string(y) + ")",
                        tol);
            tot += sigma.at(a, b, x, y);
          }
        double norm_dev = std::abs(tot.trace().real() - 1.0);
        if (norm_dev > tol)
          rep.violations.push_back({"normalization",
                                    "xy=" + std::to_string(x) + std::to_string(y),
                                    norm_dev});
      }
    // sum_a sigma_{ab|xy} must not depend on x; sum_b not on y
    for (int b = 0; b < oB; ++b)
      for (int y = 0; y < mB; ++y) {
        Cmat ref = Cmat::Zero(d, d);
        for (int a = 0; a < oA; ++a) ref += sigma.at(a, b, 0, y);
        for (int x = 1; x < mA; ++x) {
          Cmat s = Cmat::Zero(d, d);
          for (int a = 0; a < oA; ++a) s += sigma.at(a, b, x, y);
          double dev = (s - ref).cwiseAbs().maxCoeff();
          if (dev > tol)
            rep.violations.push_back(
                {"no-signalling",
                 "A-marginal b=" + std::to_string(b) + ",y=" + std::to_string(y) +
                     ",x=" + std::to_string(x),
                 dev});
        }
      }
    for (int a = 0; a < oA; ++a)
      for (int x = 0; x < mA; ++x) {
        Cmat ref = Cmat::Zero(d, d);
        for (int b = 0; b < oB; ++b) ref += sigma.at(a, b, x, 0);
        for (int y = 1; y < mB; ++y) {
          Cmat s = Cmat::Zero(d, d);
          for (int b = 0; b < oB; ++b) s += sigma.at(a, b, x, y);
          double dev = (s - ref).cwiseAbs().maxCoeff();
          if (dev > tol)
            rep.violations.push_back(
                {"no-signalling",
                 "B-marginal a=" + std::to_string(a) + ",x=" + std::to_string(x) +
                     ",y=" + std::to_string(y),
                 dev});
        }
      }
  }
  return rep;
}

namespace {

json cmat_to_json_re(const Cmat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j).real());
    rows.push_back(row);
  }
  return rows;
}

json cmat_to_json_im(const Cmat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j).imag());
    rows.push_back(row);
  }
  return rows;
}

Cmat cmat_from_json(const json& re, const json& im) {
  const int n = static_cast<int>(re.size());
  Cmat m(n, re.at(0).size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < static_cast<int>(re.at(i).size()); ++j)
      m(i, j) = cdouble(re.at(i).at(j).get<double>(), im.at(i).at(j).get<double>());
  return m;
}

}  // namespace

json pattern_to_json(const TrustPattern& p) {
  json u = json::array();
  for (int x : p.untrusted) u.push_back(party_name(x));
  return json{{"untrusted", u},
              {"inputs", p.inputs},
              {"outcomes", p.outcomes},
              {"trusted_dims", p.trusted_dims}};
}

TrustPattern pattern_from_json(const json& j) {
  TrustPattern p;
  for (const auto& name : j.at("untrusted")) {
    std::string s = name.get<std::string>();
    if (s == "A") p.untrusted.push_back(kPartyA);
    else if (s == "B") p.untrusted.push_back(kPartyB);
    else if (s == "C") p.untrusted.push_back(kPartyC);
    else throw ScenarioError("unknown party name: " + s);
  }
  p.inputs = j.at("inputs").get<std::vector<int>>();
  p.outcomes = j.at("outcomes").get<std::vector<int>>();
  p.trusted_dims = j.at("trusted_dims").get<std::vector<int>>();
  p.validate();
  return p;
}

json assemblage_to_json(const Assemblage& sigma) {
  const TrustPattern& pat = sigma.pattern;
  json blocks = json::array();
  if (pat.n_untrusted() == 1) {
    for (int x = 0; x < pat.inputs[0]; ++x)
      for (int a = 0; a < pat.outcomes[0]; ++a)
        blocks.push_back(json{{"index", {a, x}},
                              {"re", cmat_to_json_re(sigma.at(a, x))},
                              {"im", cmat_to_json_im(sigma.at(a, x))}});
  } else {
    for (int x = 0; x < pat.inputs[0]; ++x)
      for (int y = 0; y < pat.inputs[1]; ++y)
        for (int a = 0; a < pat.outcomes[0]; ++a)
          for (int b = 0; b < pat.outcomes[1]; ++b)
            blocks.push_back(json{{"index", {a, b, x, y}},
                                  {"re", cmat_to_json_re(sigma.at(a, b, x, y))},
                                  {"im", cmat_to_json_im(sigma.at(a, b, x, y))}});
  }
  return json{{"pattern", pattern_to_json(pat)},
              {"dims", pat.trusted_dims},
              {"blocks", blocks}};
}

Assemblage assemblage_from_json(const json& j) {
  Assemblage out{pattern_from_json(j.at("pattern")), {}};
  out.blocks.assign(out.pattern.block_count(), Cmat());
  for (const auto& b : j.at("blocks")) {
    Cmat m = cmat_from_json(b.at("re"), b.at("im"));
    const auto& idx = b.at("index");
    if (out.pattern.n_untrusted() == 1)
      out.at(idx.at(0).get<int>(), idx.at(1).get<int>()) = m;
    else
      out.at(idx.at(0).get<int>(), idx.at(1).get<int>(), idx.at(2).get<int>(),
             idx.at(3).get<int>()) = m;
  }
  for (const Cmat& b : out.blocks)
    if (b.size() == 0) throw ScenarioError("assemblage file misses blocks");
  return out;
}

json density_to_json(const DensityMatrix& rho) {
  return json{{"dims", rho.dims},
              {"re", cmat_to_json_re(rho.mat)},
              {"im", cmat_to_json_im(rho.mat)}};
}

DensityMatrix density_from_json(const json& j) {
  return DensityMatrix(cmat_from_json(j.at("re"), j.at("im")),
                       j.at("dims").get<std::vector<int>>());
}

}  // namespace steerdet
