#ifndef STEERDET_POLYTOPES_HPP
#define STEERDET_POLYTOPES_HPP

// Deterministic single-party strategies and extremal bipartite
// no-signalling behaviours (exact rational vertex enumeration).

#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json_fwd.hpp>

#include "steerdet/errors.hpp"

namespace steerdet {

using Rational = boost::multiprecision::cpp_rational;

struct DeterministicStrategy {
  int index = 0;             // position in the lexicographic enumeration
  std::vector<int> table;    // outcome assigned to each input

  int operator()(int x) const { return table.at(x); }
  // D(a|x)
  double weight(int a, int x) const { return table.at(x) == a ? 1.0 : 0.0; }
};

// All o^m deterministic strategies, ordered lexicographically by
// (a(x_0), ..., a(x_{m-1})) with input 0 most significant.
std::vector<DeterministicStrategy> enum_deterministic(int inputs, int outcomes);

struct NsVertex {
  std::vector<Rational> p;   // p(ab|xy), flat index ((x*mB + y)*oA + a)*oB + b
  bool local = false;        // 0/1-valued, i.e. a deterministic product
};

struct NsPolytope {
  int mA = 0, mB = 0, o = 2;
  std::vector<NsVertex> vertices;  // local vertices first, each group sorted
  int n_local = 0;

  int flat(int a, int b, int x, int y) const {
    return ((x * mB + y) * o + a) * o + b;
  }
  double value(const NsVertex& v, int a, int b, int x, int y) const {
    return static_cast<double>(v.p[flat(a, b, x, y)]);
  }
};

// Complete vertex list of the bipartite no-signalling polytope, computed by
// double description over {nonnegativity, normalization, no-signalling} in
// exact rational arithmetic. Only binary outcomes and 2..3 inputs per side
// are in scope.
NsPolytope enum_ns_vertices(int mA, int mB, int o = 2);

// Cache wrapper: loads `<dir>/ns_vertices_<mA>x<mB>.json` when present and
// valid, else enumerates and writes it. `dir` empty means no caching.
NsPolytope ns_vertices_cached(int mA, int mB, const std::string& dir);

nlohmann::json ns_polytope_to_json(const NsPolytope& poly);
NsPolytope ns_polytope_from_json(const nlohmann::json& j);

// FNV-1a hash of a string, used to fingerprint cache and report payloads.
std::string content_hash(const std::string& payload);

}  // namespace steerdet

#endif
