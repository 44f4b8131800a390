#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "wigner/errors.hpp"

namespace wigner {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// n(n-1)...(n-s+1); zero when s > n, one when s == 0.
inline BigInt ff_evaluate(int s, const BigInt& n) {
  BigInt out = 1;
  for (int t = 0; t < s; ++t) {
    BigInt factor = n - t;
    if (factor <= 0) return 0;
    out *= factor;
  }
  return out;
}

inline BigInt binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt out = 1;
  for (int i = 1; i <= k; ++i) {
    out *= n - k + i;
    out /= i;
  }
  return out;
}

inline BigInt factorial(int n) {
  BigInt out = 1;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

inline std::string to_string(const Rational& q) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

/// Parses "3", "-7/2" or a plain decimal such as "0.25" into an exact rational.
inline Rational parse_rational(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  auto parse_int = [&](std::string_view s) -> BigInt {
    s = trim(s);
    std::string_view digits = s;
    if (!digits.empty() && (digits.front() == '-' || digits.front() == '+')) digits.remove_prefix(1);
    if (digits.empty() ||
        !std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      throw ParseError("not a number: '" + std::string(text) + "'");
    BigInt v{std::string(digits)};
    return (s.front() == '-') ? BigInt(-v) : v;
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    BigInt den = parse_int(text.substr(slash + 1));
    if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
    return Rational(parse_int(text.substr(0, slash)), den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string whole(text.substr(0, dot));
    std::string frac(text.substr(dot + 1));
    bool negative = !whole.empty() && whole.front() == '-';
    if (whole.empty() || whole == "-" || whole == "+") whole += "0";
    if (frac.empty()) frac = "0";
    BigInt scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    BigInt int_part = parse_int(whole);
    BigInt frac_part = parse_int(frac);
    if (frac.front() == '-' || frac.front() == '+') throw ParseError("not a number: '" + std::string(text) + "'");
    Rational mag = Rational(boost::multiprecision::abs(int_part)) + Rational(frac_part, scale);
    return negative ? Rational(-mag) : mag;
  }
  return Rational(parse_int(text));
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

// ---------------------------------------------------------------------------
// MomentMonomial

/// Product of entry moments v_{2j}^{e_j}; stored as j -> e_j with e_j > 0.
class MomentMonomial {
 public:
  MomentMonomial() = default;

  static MomentMonomial power(int j, int exponent = 1) {
    MomentMonomial m;
    m.multiply_by(j, exponent);
    return m;
  }

  void multiply_by(int j, int exponent = 1) {
    if (j < 1) throw Error("moment index must be >= 1");
    if (exponent < 0) throw Error("negative moment exponent");
    if (exponent == 0) return;
    exps_[j] += exponent;
  }

  int exponent(int j) const {
    auto it = exps_.find(j);
    return it == exps_.end() ? 0 : it->second;
  }

  /// Sum of j * e_j; half the number of matrix entries in the product.
  int degree() const {
    int d = 0;
    for (auto [j, e] : exps_) d += j * e;
    return d;
  }

  int highest_index() const { return exps_.empty() ? 0 : exps_.rbegin()->first; }
  bool empty() const { return exps_.empty(); }
  const std::map<int, int>& exponents() const { return exps_; }

  MomentMonomial without(int j) const {
    MomentMonomial out = *this;
    out.exps_.erase(j);
    return out;
  }

  friend MomentMonomial operator*(MomentMonomial a, const MomentMonomial& b) {
    for (auto [j, e] : b.exps_) a.exps_[j] += e;
    return a;
  }

  friend bool operator==(const MomentMonomial&, const MomentMonomial&) = default;

  /// Rendered as "v4*v2^2" (highest index first); "1" when empty.
  std::string to_string(std::string_view symbol = "v") const {
    if (exps_.empty()) return "1";
    std::string out;
    for (auto it = exps_.rbegin(); it != exps_.rend(); ++it) {
      if (!out.empty()) out += '*';
      out += std::string(symbol) + std::to_string(2 * it->first);
      if (it->second != 1) out += '^' + std::to_string(it->second);
    }
    return out;
  }

  Rational evaluate(const std::function<Rational(int)>& moment) const {
    Rational out = 1;
    for (auto [j, e] : exps_) {
      Rational v = moment(j);
      for (int t = 0; t < e; ++t) out *= v;
    }
    return out;
  }

 private:
  std::map<int, int> exps_;
};

/// Canonical order: compare exponents from the highest index down, larger first.
struct MonomialOrder {
  bool operator()(const MomentMonomial& a, const MomentMonomial& b) const {
    int top = std::max(a.highest_index(), b.highest_index());
    for (int j = top; j >= 1; --j) {
      int ea = a.exponent(j);
      int eb = b.exponent(j);
      if (ea != eb) return ea > eb;
    }
    return false;
  }
};

// ---------------------------------------------------------------------------
// CorrelatorPolynomial

/// Exact finite-n expectation: sum of integer * N_s * monomial, falling factorials unexpanded.
class CorrelatorPolynomial {
 public:
  struct Key {
    int s = 0;
    MomentMonomial monomial;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyOrder {
    bool operator()(const Key& a, const Key& b) const {
      if (a.s != b.s) return a.s > b.s;
      return MonomialOrder{}(a.monomial, b.monomial);
    }
  };
  using TermMap = std::map<Key, BigInt, KeyOrder>;

  CorrelatorPolynomial() = default;

  static CorrelatorPolynomial constant(const BigInt& c) {
    CorrelatorPolynomial p;
    p.add_term(0, {}, c);
    return p;
  }

  static CorrelatorPolynomial term(int s, const MomentMonomial& m, const BigInt& c = 1) {
    CorrelatorPolynomial p;
    p.add_term(s, m, c);
    return p;
  }

  void add_term(int s, const MomentMonomial& m, const BigInt& c) {
    if (s < 0) throw Error("falling factorial index must be >= 0");
    if (c == 0) return;
    Key key{s, m};
    auto [it, inserted] = terms_.try_emplace(key, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  BigInt coefficient(int s, const MomentMonomial& m) const {
    auto it = terms_.find(Key{s, m});
    return it == terms_.end() ? BigInt(0) : it->second;
  }

  int max_s() const { return terms_.empty() ? 0 : terms_.begin()->first.s; }

  /// Total moment degree shared by all terms; -1 for the zero polynomial.
  int moment_degree() const { return terms_.empty() ? -1 : terms_.begin()->first.monomial.degree(); }

  CorrelatorPolynomial& operator+=(const CorrelatorPolynomial& o) {
    for (const auto& [k, c] : o.terms_) add_term(k.s, k.monomial, c);
    return *this;
  }
  CorrelatorPolynomial& operator-=(const CorrelatorPolynomial& o) {
    for (const auto& [k, c] : o.terms_) add_term(k.s, k.monomial, -c);
    return *this;
  }
  CorrelatorPolynomial& operator*=(const BigInt& c) {
    if (c == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [k, v] : terms_) v *= c;
    return *this;
  }

  friend CorrelatorPolynomial operator+(CorrelatorPolynomial a, const CorrelatorPolynomial& b) { return a += b; }
  friend CorrelatorPolynomial operator-(CorrelatorPolynomial a, const CorrelatorPolynomial& b) { return a -= b; }
  friend CorrelatorPolynomial operator*(CorrelatorPolynomial a, const BigInt& c) { return a *= c; }
  friend CorrelatorPolynomial operator-(CorrelatorPolynomial a) { return a *= BigInt(-1); }

  /// N_a N_b = sum_c C(a,c) C(b,c) c! N_{a+b-c}: pairs of injective placements grouped by overlap.
  friend CorrelatorPolynomial operator*(const CorrelatorPolynomial& a, const CorrelatorPolynomial& b) {
    CorrelatorPolynomial out;
    for (const auto& [ka, ca] : a.terms_) {
      for (const auto& [kb, cb] : b.terms_) {
        MomentMonomial m = ka.monomial * kb.monomial;
        BigInt c = ca * cb;
        for (int overlap = 0; overlap <= std::min(ka.s, kb.s); ++overlap) {
          BigInt mult = binomial(ka.s, overlap) * binomial(kb.s, overlap) * factorial(overlap);
          out.add_term(ka.s + kb.s - overlap, m, c * mult);
        }
      }
    }
    return out;
  }

  friend bool operator==(const CorrelatorPolynomial& a, const CorrelatorPolynomial& b) {
    return a.terms_ == b.terms_;
  }

  /// Exact value at integer n with v_{2j} = moment(j).
  Rational evaluate(const BigInt& n, const std::function<Rational(int)>& moment) const {
    Rational out = 0;
    for (const auto& [k, c] : terms_) {
      BigInt ff = ff_evaluate(k.s, n);
      if (ff == 0) continue;
      out += Rational(c * ff) * k.monomial.evaluate(moment);
    }
    return out;
  }

  /// Canonical text form, e.g. "2*N3*v2^2 + N2*v4"; "0" for the zero polynomial.
  std::string to_text() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [k, c] : terms_) {
      BigInt mag = boost::multiprecision::abs(c);
      if (first) {
        if (c < 0) out += '-';
      } else {
        out += (c < 0) ? " - " : " + ";
      }
      first = false;
      std::vector<std::string> factors;
      if (mag != 1 || (k.s == 0 && k.monomial.empty())) factors.push_back(mag.str());
      if (k.s > 0) factors.push_back("N" + std::to_string(k.s));
      if (!k.monomial.empty()) factors.push_back(k.monomial.to_string());
      for (std::size_t i = 0; i < factors.size(); ++i) {
        if (i) out += '*';
        out += factors[i];
      }
    }
    return out;
  }

  static CorrelatorPolynomial parse(std::string_view text);

 private:
  TermMap terms_;
};

namespace detail {

// Recursive-descent parser for sums of products of integers, N<s>, v<2j>[^e] and
// parenthesised sub-expressions. Juxtaposition multiplies, so "5 N4(9 v6 v2^2 + v8)" parses.
class PolynomialParser {
 public:
  explicit PolynomialParser(std::string_view text) : text_(text) {}

  CorrelatorPolynomial parse() {
    CorrelatorPolynomial out = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character");
    return out;
  }

 private:
  CorrelatorPolynomial expression() {
    CorrelatorPolynomial sum;
    skip_space();
    bool negative = false;
    if (peek() == '+' || peek() == '-') {
      negative = peek() == '-';
      ++pos_;
    }
    CorrelatorPolynomial t = term();
    sum += negative ? -t : t;
    while (true) {
      skip_space();
      char c = peek();
      if (c != '+' && c != '-') break;
      ++pos_;
      t = term();
      if (c == '-') sum -= t;
      else sum += t;
    }
    return sum;
  }

  CorrelatorPolynomial term() {
    CorrelatorPolynomial product = factor();
    while (true) {
      skip_space();
      char c = peek();
      if (c == '*') {
        ++pos_;
        product = product * factor();
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == 'N' || c == 'v' || c == '(') {
        product = product * factor();
      } else {
        break;
      }
    }
    return product;
  }

  CorrelatorPolynomial factor() {
    skip_space();
    char c = peek();
    if (c == '(') {
      ++pos_;
      CorrelatorPolynomial inner = expression();
      skip_space();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return CorrelatorPolynomial::constant(BigInt(digits()));
    if (c == 'N') {
      ++pos_;
      int s = std::stoi(digits());
      return CorrelatorPolynomial::term(s, {});
    }
    if (c == 'v') {
      ++pos_;
      int index = std::stoi(digits());
      if (index < 2 || index % 2 != 0) fail("moment index must be even and >= 2");
      int exponent = 1;
      skip_space();
      if (peek() == '^') {
        ++pos_;
        skip_space();
        exponent = std::stoi(digits());
      }
      return CorrelatorPolynomial::term(0, MomentMonomial::power(index / 2, exponent));
    }
    fail("expected a factor");
    return {};
  }

  std::string digits() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected digits");
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what + " at position " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline CorrelatorPolynomial CorrelatorPolynomial::parse(std::string_view text) {
  return detail::PolynomialParser(text).parse();
}

// ---------------------------------------------------------------------------
// StandardizedExpansion

/// Map from power p of 1/n to a polynomial in the standardized moments vt_{2j} = v_{2j}/v_2^j (j >= 2).
class StandardizedExpansion {
 public:
  using Polynomial = std::map<MomentMonomial, Rational, MonomialOrder>;

  StandardizedExpansion() = default;
  explicit StandardizedExpansion(int order) : order_(order) {}

  int order() const { return order_; }

  void add(int power, const MomentMonomial& m, const Rational& c) {
    if (power > order_ || c == 0) return;
    auto& poly = terms_[power];
    auto [it, inserted] = poly.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) poly.erase(it);
    }
    if (poly.empty()) terms_.erase(power);
  }

  const std::map<int, Polynomial>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  Rational coefficient(int power, const MomentMonomial& m) const {
    auto it = terms_.find(power);
    if (it == terms_.end()) return 0;
    auto jt = it->second.find(m);
    return jt == it->second.end() ? Rational(0) : jt->second;
  }

  /// Smallest power of 1/n with a nonzero coefficient (i.e. the leading order in n).
  std::optional<int> leading_power() const {
    if (terms_.empty()) return std::nullopt;
    return terms_.begin()->first;
  }

  /// Substitutes vt_{2j} = standardized(j); returns power -> rational coefficient.
  std::map<int, Rational> evaluate(const std::function<Rational(int)>& standardized) const {
    std::map<int, Rational> out;
    for (const auto& [p, poly] : terms_) {
      Rational sum = 0;
      for (const auto& [m, c] : poly) sum += c * m.evaluate(standardized);
      if (sum != 0) out[p] = sum;
    }
    return out;
  }

  std::string to_text() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first_line = true;
    for (const auto& [p, poly] : terms_) {
      if (!first_line) os << '\n';
      first_line = false;
      os << "n^" << -p << ": ";
      bool first = true;
      for (const auto& [m, c] : poly) {
        Rational mag = c < 0 ? Rational(-c) : c;
        if (first) {
          if (c < 0) os << '-';
        } else {
          os << (c < 0 ? " - " : " + ");
        }
        first = false;
        if (m.empty()) {
          os << wigner::to_string(mag);
        } else {
          if (mag != 1) os << wigner::to_string(mag) << '*';
          os << m.to_string("vt");
        }
      }
    }
    return os.str();
  }

  friend bool operator==(const StandardizedExpansion&, const StandardizedExpansion&) = default;

 private:
  std::map<int, Polynomial> terms_;
  int order_ = 0;
};

/// Signed Stirling numbers of the first kind: N_s = sum_i c[i] n^i.
inline std::vector<BigInt> falling_factorial_power_coefficients(int s) {
  std::vector<BigInt> c{1};
  for (int t = 0; t < s; ++t) {
    std::vector<BigInt> next(c.size() + 1, 0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= c[i] * t;
    }
    c = std::move(next);
  }
  return c;
}

/// Expansion of N_s / (n^a (n-1)^b) in u = 1/n: returns (lowest power, coefficients from that power on),
/// covering powers up to and including max_power.
inline std::pair<int, std::vector<Rational>> falling_factorial_ratio_series(int s, int a, int b, int max_power) {
  // N_s = n^s * P(u), P(u) = sum_i stirling(s, s-i) u^i; (n-1)^{-b} = n^{-b} sum_m C(b+m-1, m) u^m.
  int lowest = a + b - s;
  int length = max_power - lowest + 1;
  std::vector<Rational> out(std::max(length, 0), Rational(0));
  if (length <= 0) return {lowest, out};
  auto stirling = falling_factorial_power_coefficients(s);
  for (int i = 0; i <= s && i < length; ++i) {
    const BigInt& pc = stirling[s - i];
    if (pc == 0) continue;
    for (int m = 0; i + m < length; ++m) {
      BigInt geo = (b == 0) ? BigInt(m == 0 ? 1 : 0) : binomial(b + m - 1, m);
      out[i + m] += Rational(pc * geo);
    }
  }
  return {lowest, out};
}

}  // namespace wigner
