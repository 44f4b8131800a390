#pragma once

#include <limits>
#include <string>

#include "json.hpp"
#include "wigner/algebra.hpp"
#include "wigner/series.hpp"
#include "wigner/walks.hpp"

namespace wigner {

using nlohmann::json;

namespace detail {

inline json integer_to_json(const BigInt& v) {
  if (v >= std::numeric_limits<long long>::min() && v <= std::numeric_limits<long long>::max())
    return v.convert_to<long long>();
  return v.str();
}

inline BigInt integer_from_json(const json& j) {
  if (j.is_string()) return BigInt(j.get<std::string>());
  if (j.is_number_integer()) return BigInt(j.get<long long>());
  throw ParseError("expected an integer, got " + j.dump());
}

}  // namespace detail

inline json monomial_to_json(const MomentMonomial& m, std::string_view symbol = "v") {
  json out = json::object();
  for (auto [j, e] : m.exponents()) out[std::string(symbol) + std::to_string(2 * j)] = e;
  return out;
}

inline MomentMonomial monomial_from_json(const json& j) {
  MomentMonomial m;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key.size() < 2 || key[0] != 'v') throw ParseError("bad moment key '" + key + "'");
    int index = std::stoi(key.substr(1));
    if (index < 2 || index % 2) throw ParseError("bad moment key '" + key + "'");
    m.multiply_by(index / 2, it.value().get<int>());
  }
  return m;
}

/// [{s, monomial, coeff}, ...] in canonical order.
inline json terms_to_json(const CorrelatorPolynomial& p) {
  json terms = json::array();
  for (const auto& [k, c] : p.terms())
    terms.push_back({{"s", k.s}, {"monomial", monomial_to_json(k.monomial)}, {"coeff", detail::integer_to_json(c)}});
  return terms;
}

inline CorrelatorPolynomial terms_from_json(const json& terms) {
  CorrelatorPolynomial p;
  for (const auto& t : terms)
    p.add_term(t.at("s").get<int>(), monomial_from_json(t.at("monomial")), detail::integer_from_json(t.at("coeff")));
  return p;
}

inline json expansion_to_json(const StandardizedExpansion& e) {
  json terms = json::array();
  for (const auto& [p, poly] : e.terms())
    for (const auto& [m, c] : poly)
      terms.push_back({{"inverse_n_power", p}, {"monomial", monomial_to_json(m, "vt")}, {"coeff", to_string(c)}});
  return {{"order", e.order()}, {"terms", terms}};
}

inline json series_to_json(const FormalSeries& s) {
  json coeffs = json::array();
  for (const auto& [e, c] : s.coefficients()) coeffs.push_back({{"exponents", e}, {"coeff", to_string(c)}});
  return {{"variables", s.variables()}, {"orders", s.orders()}, {"coefficients", coeffs}};
}

inline json profile_to_json(const PathProfile& p) {
  json edges = json::array();
  for (const auto& [e, h] : p.edge_multiplicities) edges.push_back({{"edge", {e.first, e.second}}, {"runs", h}});
  json runs = json::object();
  for (auto [h, count] : p.runs) runs[std::to_string(h)] = count;
  return {{"V", p.vertices}, {"E", p.edges},          {"L", p.loops},
          {"components", p.components}, {"edges", edges}, {"n_h", runs}};
}

}  // namespace wigner
