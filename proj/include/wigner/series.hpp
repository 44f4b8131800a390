#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wigner/algebra.hpp"

namespace wigner {

/// Truncated power series in one or more variables with exact rational coefficients.
/// A coefficient is kept only when every exponent is within that variable's truncation order.
class FormalSeries {
 public:
  using Exponents = std::vector<int>;

  FormalSeries() = default;
  FormalSeries(std::vector<std::string> variables, std::vector<int> orders)
      : vars_(std::move(variables)), orders_(std::move(orders)) {
    if (vars_.size() != orders_.size()) throw OrderMismatch("one truncation order per variable is required");
    for (int o : orders_)
      if (o < 0) throw OrderMismatch("truncation orders must be >= 0");
  }

  static FormalSeries univariate(const std::string& var, int order, const std::vector<Rational>& coeffs = {}) {
    FormalSeries s({var}, {order});
    for (std::size_t i = 0; i < coeffs.size(); ++i) s.set({static_cast<int>(i)}, coeffs[i]);
    return s;
  }

  static FormalSeries constant(std::vector<std::string> vars, std::vector<int> orders, const Rational& c) {
    FormalSeries s(std::move(vars), std::move(orders));
    s.set(Exponents(s.vars_.size(), 0), c);
    return s;
  }

  /// The series consisting of the single variable vars[index].
  static FormalSeries variable(std::vector<std::string> vars, std::vector<int> orders, std::size_t index) {
    FormalSeries s(std::move(vars), std::move(orders));
    Exponents e(s.vars_.size(), 0);
    e.at(index) = 1;
    s.set(e, 1);
    return s;
  }

  const std::vector<std::string>& variables() const { return vars_; }
  const std::vector<int>& orders() const { return orders_; }
  const std::map<Exponents, Rational>& coefficients() const { return coeffs_; }
  std::size_t arity() const { return vars_.size(); }

  bool in_range(const Exponents& e) const {
    if (e.size() != vars_.size()) return false;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] < 0 || e[i] > orders_[i]) return false;
    return true;
  }

  void set(const Exponents& e, const Rational& c) {
    if (!in_range(e)) return;
    if (c == 0) coeffs_.erase(e);
    else coeffs_[e] = c;
  }

  void add_to(const Exponents& e, const Rational& c) {
    if (!in_range(e) || c == 0) return;
    auto [it, inserted] = coeffs_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) coeffs_.erase(it);
    }
  }

  Rational coeff(const Exponents& e) const {
    if (e.size() != vars_.size()) throw OrderMismatch("exponent arity does not match the series variables");
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] > orders_[i]) throw OrderMismatch("requested coefficient lies beyond the truncation order");
    auto it = coeffs_.find(e);
    return it == coeffs_.end() ? Rational(0) : it->second;
  }
  Rational coeff(int e) const { return coeff(Exponents{e}); }

  FormalSeries truncated(std::vector<int> orders) const {
    FormalSeries out(vars_, std::move(orders));
    for (const auto& [e, c] : coeffs_) out.set(e, c);
    return out;
  }

  FormalSeries& operator+=(const FormalSeries& o) {
    adopt_common_orders(o);
    for (const auto& [e, c] : o.coeffs_) add_to(e, c);
    return *this;
  }
  FormalSeries& operator-=(const FormalSeries& o) {
    adopt_common_orders(o);
    for (const auto& [e, c] : o.coeffs_) add_to(e, -c);
    return *this;
  }
  FormalSeries& operator*=(const Rational& c) {
    if (c == 0) coeffs_.clear();
    for (auto& [e, v] : coeffs_) v *= c;
    return *this;
  }

  friend FormalSeries operator+(FormalSeries a, const FormalSeries& b) { return a += b; }
  friend FormalSeries operator-(FormalSeries a, const FormalSeries& b) { return a -= b; }
  friend FormalSeries operator*(FormalSeries a, const Rational& c) { return a *= c; }

  friend FormalSeries operator*(const FormalSeries& a, const FormalSeries& b) {
    a.check_variables(b);
    FormalSeries out(a.vars_, common_orders(a.orders_, b.orders_));
    Exponents e(a.vars_.size());
    for (const auto& [ea, ca] : a.coeffs_) {
      for (const auto& [eb, cb] : b.coeffs_) {
        bool keep = true;
        for (std::size_t i = 0; i < e.size(); ++i) {
          e[i] = ea[i] + eb[i];
          if (e[i] > out.orders_[i]) {
            keep = false;
            break;
          }
        }
        if (keep) out.add_to(e, ca * cb);
      }
    }
    return out;
  }

  FormalSeries pow(int k) const {
    if (k < 0) throw Error("negative series power");
    FormalSeries out = constant(vars_, orders_, 1);
    FormalSeries base = *this;
    while (k > 0) {
      if (k & 1) out = out * base;
      k >>= 1;
      if (k) base = base * base;
    }
    return out;
  }

  /// d/dvar; the result is exact only up to one order lower in that variable.
  FormalSeries derive(std::size_t var) const {
    std::vector<int> orders = orders_;
    orders.at(var) = std::max(0, orders[var] - 1);
    FormalSeries out(vars_, orders);
    for (const auto& [e, c] : coeffs_) {
      if (e[var] == 0) continue;
      Exponents d = e;
      d[var] -= 1;
      out.add_to(d, c * e[var]);
    }
    return out;
  }

  /// var * d/dvar; keeps the truncation order.
  FormalSeries euler(std::size_t var) const {
    FormalSeries out(vars_, orders_);
    for (const auto& [e, c] : coeffs_) out.add_to(e, c * e.at(var));
    return out;
  }

  /// Multiplies by var^k (drops what falls past the truncation).
  FormalSeries shifted(std::size_t var, int k) const {
    FormalSeries out(vars_, orders_);
    for (const auto& [e, c] : coeffs_) {
      Exponents s = e;
      s.at(var) += k;
      out.add_to(s, c);
    }
    return out;
  }

  /// Embeds a univariate series as a function of variable `index` of a larger variable set.
  FormalSeries embedded(std::vector<std::string> vars, std::vector<int> orders, std::size_t index) const {
    if (arity() != 1) throw OrderMismatch("only univariate series can be embedded");
    FormalSeries out(std::move(vars), std::move(orders));
    for (const auto& [e, c] : coeffs_) {
      Exponents x(out.arity(), 0);
      x.at(index) = e[0];
      out.add_to(x, c);
    }
    return out;
  }

  friend bool operator==(const FormalSeries& a, const FormalSeries& b) {
    return a.vars_ == b.vars_ && a.orders_ == b.orders_ && a.coeffs_ == b.coeffs_;
  }

  /// Equality of coefficients up to the smaller of the two truncations.
  bool agrees_with(const FormalSeries& o) const {
    check_variables(o);
    auto common = common_orders(orders_, o.orders_);
    return truncated(common).coeffs_ == o.truncated(common).coeffs_;
  }

  std::string to_text() const {
    if (coeffs_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [e, c] : coeffs_) {
      if (!first) os << (c < 0 ? " - " : " + ");
      else if (c < 0) os << '-';
      first = false;
      Rational mag = c < 0 ? Rational(-c) : c;
      std::string mono;
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        if (!mono.empty()) mono += '*';
        mono += vars_[i];
        if (e[i] != 1) mono += '^' + std::to_string(e[i]);
      }
      if (mono.empty()) os << wigner::to_string(mag);
      else if (mag == 1) os << mono;
      else os << wigner::to_string(mag) << '*' << mono;
    }
    return os.str();
  }

 private:
  static std::vector<int> common_orders(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::min(a[i], b[i]);
    return out;
  }

  void check_variables(const FormalSeries& o) const {
    if (vars_ != o.vars_) throw OrderMismatch("series have different variables");
  }

  void adopt_common_orders(const FormalSeries& o) {
    check_variables(o);
    auto common = common_orders(orders_, o.orders_);
    if (common != orders_) *this = truncated(common);
  }

  std::vector<std::string> vars_;
  std::vector<int> orders_;
  std::map<Exponents, Rational> coeffs_;
};

}  // namespace wigner
