#include "steerdet/polytopes.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace steerdet {

using nlohmann::json;
using Int = boost::multiprecision::cpp_int;

std::vector<DeterministicStrategy> enum_deterministic(int inputs, int outcomes) {
  if (inputs < 1 || outcomes < 2)
    throw ParamError("enum_deterministic requires m >= 1, o >= 2");
  long long count = 1;
  for (int x = 0; x < inputs; ++x) count *= outcomes;
  std::vector<DeterministicStrategy> out(count);
  for (long long mu = 0; mu < count; ++mu) {
    DeterministicStrategy s;
    s.index = static_cast<int>(mu);
    s.table.assign(inputs, 0);
    long long v = mu;
    for (int x = inputs - 1; x >= 0; --x) {
      s.table[x] = static_cast<int>(v % outcomes);
      v /= outcomes;
    }
    out[mu] = std::move(s);
  }
  return out;
}

namespace {

// A ray of the homogenized no-signalling cone, in correlator coordinates
// (t, alpha_x, beta_y, gamma_xy). Stored as an integer vector with content 1.
struct Ray {
  std::vector<Int> v;
  uint64_t active = 0;  // rows satisfied with equality
};

std::vector<Int> normalize_ray(std::vector<Rational> r) {
  Int lcm = 1;
  for (const Rational& x : r) lcm = boost::multiprecision::lcm(lcm, denominator(x));
  std::vector<Int> out(r.size());
  for (size_t i = 0; i < r.size(); ++i)
    out[i] = numerator(r[i]) * (lcm / denominator(r[i]));
  Int g = 0;
  for (const Int& x : out) g = boost::multiprecision::gcd(g, x);
  if (g != 0)
    for (Int& x : out) x /= g;
  return out;
}

Int dot(const std::vector<Int>& a, const std::vector<Int>& b) {
  Int s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Exact inverse via Gauss-Jordan; rows of `m` must be independent.
std::vector<std::vector<Rational>> rational_inverse(
    std::vector<std::vector<Rational>> m) {
  const int n = static_cast<int>(m.size());
  std::vector<std::vector<Rational>> inv(n, std::vector<Rational>(n, 0));
  for (int i = 0; i < n; ++i) inv[i][i] = 1;
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r)
      if (m[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) throw Error("singular matrix in vertex enumeration");
    std::swap(m[col], m[piv]);
    std::swap(inv[col], inv[piv]);
    Rational d = m[col][col];
    for (int j = 0; j < n; ++j) {
      m[col][j] /= d;
      inv[col][j] /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col || m[r][col] == 0) continue;
      Rational f = m[r][col];
      for (int j = 0; j < n; ++j) {
        m[r][j] -= f * m[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

}  // namespace

NsPolytope enum_ns_vertices(int mA, int mB, int o) {
  if (o != 2) throw ScenarioError("only binary outcomes supported");
  if (mA < 2 || mA > 3 || mB < 2 || mB > 3)
    throw ScenarioError("inputs per party must be 2 or 3");

  // Correlator coordinates: (t, alpha_x [mA], beta_y [mB], gamma_xy [mA*mB]).
  const int n = 1 + mA + mB + mA * mB;
  auto a_of = [&](int x) { return 1 + x; };
  auto b_of = [&](int y) { return 1 + mA + y; };
  auto g_of = [&](int x, int y) { return 1 + mA + mB + x * mB + y; };

  // Rows: 4 p(ab|xy) >= 0  <=>  t + (-1)^a alpha + (-1)^b beta + (-1)^{a+b} gamma >= 0.
  std::vector<std::vector<Rational>> rows;
  for (int x = 0; x < mA; ++x)
    for (int y = 0; y < mB; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          std::vector<Rational> row(n, 0);
          row[0] = 1;
          row[a_of(x)] = (a == 0) ? 1 : -1;
          row[b_of(y)] = (b == 0) ? 1 : -1;
          row[g_of(x, y)] = (a + b) % 2 == 0 ? 1 : -1;
          rows.push_back(std::move(row));
        }
  const int nrows = static_cast<int>(rows.size());
  if (nrows > 64) throw ScenarioError("scenario too large for enumeration");

  // Initial simplicial cone from n independent rows (greedy rational
  // elimination), rays = columns of the inverse.
  std::vector<int> basis;
  {
    std::vector<std::vector<Rational>> work;
    for (int r = 0; r < nrows && static_cast<int>(basis.size()) < n; ++r) {
      std::vector<std::vector<Rational>> trial = work;
      trial.push_back(rows[r]);
      // row-reduce trial to check independence
      std::vector<std::vector<Rational>> m = trial;
      int rank = 0;
      for (int col = 0; col < n && rank < static_cast<int>(m.size()); ++col) {
        int piv = -1;
        for (int rr = rank; rr < static_cast<int>(m.size()); ++rr)
          if (m[rr][col] != 0) {
            piv = rr;
            break;
          }
        if (piv < 0) continue;
        std::swap(m[rank], m[piv]);
        for (int rr = 0; rr < static_cast<int>(m.size()); ++rr) {
          if (rr == rank || m[rr][col] == 0) continue;
          Rational f = m[rr][col] / m[rank][col];
          for (int j = col; j < n; ++j) m[rr][j] -= f * m[rank][j];
        }
        ++rank;
      }
      if (rank == static_cast<int>(trial.size())) {
        work = std::move(trial);
        basis.push_back(r);
      }
    }
    if (static_cast<int>(basis.size()) != n)
      throw Error("could not find full-rank initial basis");
  }

  std::vector<std::vector<Rational>> binv;
  {
    std::vector<std::vector<Rational>> bm;
    for (int r : basis) bm.push_back(rows[r]);
    binv = rational_inverse(std::move(bm));
  }

  std::vector<std::vector<Int>> introws(nrows);
  for (int r = 0; r < nrows; ++r) introws[r] = normalize_ray(rows[r]);

  auto recompute_active = [&](Ray& ray, const std::vector<int>& processed) {
    ray.active = 0;
    for (int r : processed)
      if (dot(introws[r], ray.v) == 0) ray.active |= (uint64_t(1) << r);
  };

  std::vector<Ray> rays;
  std::vector<int> processed = basis;
  for (int j = 0; j < n; ++j) {
    std::vector<Rational> col(n);
    for (int i = 0; i < n; ++i) col[i] = binv[i][j];
    Ray ray;
    ray.v = normalize_ray(col);
    recompute_active(ray, processed);
    rays.push_back(std::move(ray));
  }

  // Incremental double description over the remaining halfspaces.
  for (int r = 0; r < nrows; ++r) {
    if (std::find(basis.begin(), basis.end(), r) != basis.end()) continue;
    std::vector<Int> sign(rays.size());
    bool any_negative = false;
    for (size_t i = 0; i < rays.size(); ++i) {
      sign[i] = dot(introws[r], rays[i].v);
      any_negative = any_negative || sign[i] < 0;
    }
    processed.push_back(r);
    if (!any_negative) {
      for (size_t i = 0; i < rays.size(); ++i)
        if (sign[i] == 0) rays[i].active |= (uint64_t(1) << r);
      continue;
    }
    std::vector<Ray> next;
    for (size_t i = 0; i < rays.size(); ++i)
      if (sign[i] >= 0) {
        Ray keep = rays[i];
        if (sign[i] == 0) keep.active |= (uint64_t(1) << r);
        next.push_back(std::move(keep));
      }
    for (size_t i = 0; i < rays.size(); ++i) {
      if (sign[i] <= 0) continue;
      for (size_t k = 0; k < rays.size(); ++k) {
        if (sign[k] >= 0) continue;
        // adjacency: no third ray's active set contains the intersection
        uint64_t inter = rays[i].active & rays[k].active;
        bool adjacent = true;
        for (size_t l = 0; l < rays.size() && adjacent; ++l) {
          if (l == i || l == k) continue;
          if ((inter & ~rays[l].active) == 0) adjacent = false;
        }
        if (!adjacent) continue;
        std::vector<Rational> comb(n);
        for (int j = 0; j < n; ++j)
          comb[j] = Rational(sign[i]) * Rational(rays[k].v[j]) -
                    Rational(sign[k]) * Rational(rays[i].v[j]);
        Ray nr;
        nr.v = normalize_ray(std::move(comb));
        recompute_active(nr, processed);
        next.push_back(std::move(nr));
      }
    }
    // two adjacent pairs can generate the same ray; deduplicate
    std::sort(next.begin(), next.end(),
              [](const Ray& a, const Ray& b) { return a.v < b.v; });
    next.erase(std::unique(next.begin(), next.end(),
                           [](const Ray& a, const Ray& b) { return a.v == b.v; }),
               next.end());
    rays = std::move(next);
  }

  NsPolytope poly;
  poly.mA = mA;
  poly.mB = mB;
  poly.o = o;
  for (const Ray& ray : rays) {
    if (ray.v[0] <= 0) throw Error("unbounded direction in NS polytope");
    NsVertex v;
    v.p.assign(4 * mA * mB, 0);
    Rational t(ray.v[0]);
    bool local = true;
    for (int x = 0; x < mA; ++x)
      for (int y = 0; y < mB; ++y)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            Rational val = (Rational(ray.v[0]) +
                            Rational(a == 0 ? 1 : -1) * Rational(ray.v[a_of(x)]) +
                            Rational(b == 0 ? 1 : -1) * Rational(ray.v[b_of(y)]) +
                            Rational((a + b) % 2 == 0 ? 1 : -1) *
                                Rational(ray.v[g_of(x, y)])) /
                           (4 * t);
            v.p[poly.flat(a, b, x, y)] = val;
            local = local && (val == 0 || val == 1);
          }
    v.local = local;
    poly.vertices.push_back(std::move(v));
  }

  std::sort(poly.vertices.begin(), poly.vertices.end(),
            [](const NsVertex& a, const NsVertex& b) {
              if (a.local != b.local) return a.local;
              return a.p < b.p;
            });
  poly.n_local = static_cast<int>(
      std::count_if(poly.vertices.begin(), poly.vertices.end(),
                    [](const NsVertex& v) { return v.local; }));
  return poly;
}

std::string content_hash(const std::string& payload) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

json ns_polytope_to_json(const NsPolytope& poly) {
  json verts = json::array();
  for (const NsVertex& v : poly.vertices) {
    json p = json::array();
    for (const Rational& r : v.p)
      p.push_back(json::array({numerator(r).str(), denominator(r).str()}));
    verts.push_back(json{{"p", p}, {"local", v.local}});
  }
  json body{{"scenario", {{"inputs_a", poly.mA}, {"inputs_b", poly.mB}, {"outcomes", poly.o}}},
            {"count", poly.vertices.size()},
            {"n_local", poly.n_local},
            {"vertices", verts}};
  body["hash"] = content_hash(body["vertices"].dump());
  return body;
}

NsPolytope ns_polytope_from_json(const json& j) {
  NsPolytope poly;
  poly.mA = j.at("scenario").at("inputs_a").get<int>();
  poly.mB = j.at("scenario").at("inputs_b").get<int>();
  poly.o = j.at("scenario").at("outcomes").get<int>();
  if (j.at("hash").get<std::string>() != content_hash(j.at("vertices").dump()))
    throw Error("vertex cache hash mismatch");
  for (const auto& jv : j.at("vertices")) {
    NsVertex v;
    v.local = jv.at("local").get<bool>();
    for (const auto& pr : jv.at("p"))
      v.p.emplace_back(Int(pr.at(0).get<std::string>()),
                       Int(pr.at(1).get<std::string>()));
    poly.vertices.push_back(std::move(v));
  }
  poly.n_local = static_cast<int>(
      std::count_if(poly.vertices.begin(), poly.vertices.end(),
                    [](const NsVertex& v) { return v.local; }));
  if (poly.vertices.size() != j.at("count").get<size_t>())
    throw Error("vertex cache count mismatch");
  return poly;
}

NsPolytope ns_vertices_cached(int mA, int mB, const std::string& dir) {
  if (dir.empty()) return enum_ns_vertices(mA, mB);
  std::string path = dir + "/ns_vertices_" + std::to_string(mA) + "x" +
                     std::to_string(mB) + ".json";
  {
    std::ifstream in(path);
    if (in) {
      try {
        json j;
        in >> j;
        NsPolytope poly = ns_polytope_from_json(j);
        if (poly.mA == mA && poly.mB == mB) return poly;
      } catch (const std::exception&) {
        // fall through to recompute
      }
    }
  }
  NsPolytope poly = enum_ns_vertices(mA, mB);
  std::ofstream out(path);
  if (out) out << ns_polytope_to_json(poly).dump(1) << "\n";
  return poly;
}

}  // namespace steerdet
