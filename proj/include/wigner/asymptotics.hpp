#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "wigner/correlators.hpp"
#include "wigner/series.hpp"

namespace wigner {

// ---------------------------------------------------------------------------
// Tree generating functions

/// T(x) = sum_m C_m x^{2m}: closed walks on trees with every edge run twice.
inline FormalSeries catalan_series(int order, const std::string& var = "x") {
  FormalSeries t({var}, {order});
  BigInt c = 1;  // C_m
  for (int m = 0; 2 * m <= order; ++m) {
    t.set({2 * m}, Rational(c));
    c = c * 2 * (2 * m + 1) / (m + 2);
  }
  return t;
}

/// T(x)^s from the closed form sum_j s/(2j+s) C(2j+s, j) x^{2j}.
inline FormalSeries t_power_series(int s, int order, const std::string& var = "x") {
  if (s < 1) throw Error("t_power_series needs s >= 1");
  FormalSeries out({var}, {order});
  for (int j = 0; 2 * j <= order; ++j) out.set({2 * j}, Rational(s, 2 * j + s) * Rational(binomial(2 * j + s, j)));
  return out;
}

/// f_m(x) = sum_{n >= m} C(2n, n-m) x^{2n}: tree walks with one special edge run 2m times.
inline FormalSeries special_edge_series(int m, int order, const std::string& var = "x") {
  if (m < 1) throw Error("special_edge_series needs m >= 1");
  FormalSeries out({var}, {order});
  for (int n = m; 2 * n <= order; ++n) out.set({2 * n}, Rational(binomial(2 * n, n - m)));
  return out;
}

/// f_m built as (x / 2m) d/dx (x^{2m} T^{2m}) from the Catalan series.
inline FormalSeries special_edge_series_from_trees(int m, int order, const std::string& var = "x") {
  FormalSeries t = catalan_series(order, var);
  return t.pow(2 * m).shifted(0, 2 * m).euler(0) * Rational(1, 2 * m);
}

/// phi(x, z) = sum_{m >= 1} f_m(x) z^{2m}.
inline FormalSeries phi_series(int x_order, int z_order) {
  FormalSeries out({"x", "z"}, {x_order, z_order});
  for (int m = 1; 2 * m <= z_order; ++m) {
    const FormalSeries f = special_edge_series(m, x_order);
    for (const auto& [e, c] : f.coefficients()) out.set({e[0], 2 * m}, c);
  }
  return out;
}

/// Phi_r(x_1..x_r, z) = 2^{r-1} prod_i phi(x_i, z): r tree walks glued on one special edge.
inline FormalSeries phi_r_series(int r, int x_order, int z_order) {
  if (r < 2) throw Error("phi_r_series needs r >= 2");
  std::vector<std::string> vars;
  std::vector<int> orders;
  for (int i = 1; i <= r; ++i) {
    vars.push_back("x" + std::to_string(i));
    orders.push_back(x_order);
  }
  vars.push_back("z");
  orders.push_back(z_order);
  FormalSeries phi = phi_series(x_order, z_order);
  FormalSeries out = FormalSeries::constant(vars, orders, Rational(BigInt(1) << (r - 1)));
  for (int i = 0; i < r; ++i) {
    FormalSeries factor(vars, orders);
    for (const auto& [e, c] : phi.coefficients()) {
      std::vector<int> x(r + 1, 0);
      x[i] = e[0];
      x[r] = e[1];
      factor.set(x, c);
    }
    out = out * factor;
  }
  return out;
}

/// Coefficient of prod_i x_i^{k_i} z^{2j} in Phi_r (the highest-moment weight read off the series).
inline Rational phi_r_prediction(const TraceSignature& sig, int j) {
  if (!sig.all_even()) return 0;
  std::vector<int> exps = sig.powers;
  exps.push_back(2 * j);
  int x_order = *std::max_element(sig.powers.begin(), sig.powers.end());
  return phi_r_series(sig.traces(), x_order, 2 * j).coeff(exps);
}

/// Coefficient of n^{2-r-j} vt_{2j} in the normalized connected correlator: predicted vs exact.
inline LeadingTermReport leading_highest_moment(CorrelatorEngine& engine, const TraceSignature& sig, int j) {
  if (j < 2) throw Error("highest-moment terms need j >= 2");
  LeadingTermReport report;
  report.signature = sig;
  report.j = j;
  const int p = sig.traces() + j - 2;
  report.n_power = -p;
  report.predicted = Rational(highest_moment_prediction(sig, j));
  StandardizedExpansion e = normalize_and_expand(engine.exact_connected(sig), sig, p);
  report.observed = e.coefficient(p, MomentMonomial::power(j));
  report.match = report.predicted == report.observed;
  return report;
}

// ---------------------------------------------------------------------------
// R_j kernels

namespace detail {

/// U_0(t) .. U_count-1(t) by the three-term recurrence.
inline std::vector<double> chebyshev_u(double t, int count) {
  std::vector<double> u(std::max(count, 2));
  u[0] = 1.0;
  u[1] = 2.0 * t;
  for (int i = 2; i < count; ++i) u[i] = 2.0 * t * u[i - 1] - u[i - 2];
  return u;
}

inline void check_kernel_domain(double y) {
  if (!(std::abs(y) < 2.0)) throw DomainError("R_j(y) is defined for |y| < 2, got y = " + std::to_string(y));
}

}  // namespace detail

/// R_j(y) from U_i(cos t) = sin((i+1)t)/sin t with y = 2 cos t.
inline double rj_direct(int j, double y) {
  if (j < 1) throw Error("R_j needs j >= 1");
  detail::check_kernel_domain(y);
  const double theta = std::acos(y / 2.0);
  const double s = std::sin(theta);
  auto u = [&](int i) { return std::sin((i + 1) * theta) / s; };
  return (y * u(2 * j - 1) - 2.0 * u(2 * j - 2)) / (2.0 * std::numbers::pi * std::sqrt(4.0 - y * y));
}

/// R_j(y) by R_j = (y^2 - 2) R_{j-1} - R_{j-2}, seeded with R_1 and R_2.
inline double rj_eval(int j, double y) {
  if (j < 1) throw Error("R_j needs j >= 1");
  detail::check_kernel_domain(y);
  const double scale = 1.0 / (2.0 * std::numbers::pi * std::sqrt(4.0 - y * y));
  const double y2 = y * y;
  double prev = (y2 - 2.0) * scale;                    // R_1
  if (j == 1) return prev;
  double cur = (y2 * y2 - 4.0 * y2 + 2.0) * scale;     // R_2
  for (int i = 3; i <= j; ++i) {
    double next = (y2 - 2.0) * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// int_{-2}^{2} R_j(y) y^{2k} dy with y = 2 cos(theta); the integrand becomes a trigonometric
/// polynomial of degree 2(k+j), integrated exactly by a uniform rule with 4(k+j)+16 nodes.
inline double rj_moment(int j, int k) {
  if (j < 1 || k < 0) throw Error("rj_moment needs j >= 1 and k >= 0");
  const int nodes = 4 * (k + j) + 16;
  double sum = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / nodes;
    const double c = std::cos(theta);
    auto u = detail::chebyshev_u(c, 2 * j);
    const double y = 2.0 * c;
    sum += (y * u[2 * j - 1] - 2.0 * u[2 * j - 2]) * std::pow(y, 2 * k);
  }
  // (1/2pi) * int_0^pi = (1/2pi) * (1/2) * (2pi/nodes) * sum
  return sum / (2.0 * nodes);
}

/// Leading density difference between two ensembles first differing at v_{2j}.
/// One coordinate per trace in each point; r = 1 uses n^{1-j} R_j(y), r >= 2 the glued product
/// 2^{r-1} n^{2-r-j} sum_{j_1+..+j_r = j} prod R_{j_i}(y_i) with 1 <= j_i <= upper[i].
inline std::vector<double> delta_rho_leading(int j, const Rational& delta_v, const Rational& v2, double n,
                                             const std::vector<std::vector<double>>& points,
                                             std::vector<int> upper = {}) {
  if (j < 1) throw Error("delta_rho_leading needs j >= 1");
  if (v2 <= 0) throw Error("v2 must be positive");
  double ratio = to_double(delta_v) / std::pow(to_double(v2), j);
  std::vector<double> out;
  for (const auto& y : points) {
    const int r = static_cast<int>(y.size());
    if (r < 1) throw Error("each point needs at least one coordinate");
    for (double yi : y) detail::check_kernel_domain(yi);
    if (r == 1) {
      out.push_back(std::pow(n, 1 - j) * ratio * rj_eval(j, y[0]));
      continue;
    }
    std::vector<int> cap = upper.empty() ? std::vector<int>(r, j) : upper;
    if (static_cast<int>(cap.size()) != r) throw Error("one upper bound per coordinate is required");
    double sum = 0.0;
    std::function<void(int, int, double)> rec = [&](int i, int left, double product) {
      if (i == r - 1) {
        if (left >= 1 && left <= cap[i]) sum += product * rj_eval(left, y[i]);
        return;
      }
      for (int ji = 1; ji <= std::min(cap[i], left - (r - 1 - i)); ++ji) rec(i + 1, left - ji, product * rj_eval(ji, y[i]));
    };
    if (j >= r) rec(0, j, 1.0);
    out.push_back(std::pow(2.0, r - 1) * std::pow(n, 2 - r - j) * ratio * sum);
  }
  return out;
}

// ---------------------------------------------------------------------------
// One-point 1/n corrections

struct OnePointCorrections {
  FormalSeries s2;  // tree walks with one edge run four times
  FormalSeries s3;  // one diagonal self-loop
  FormalSeries s4;  // one p-gon loop, p >= 3
};

inline OnePointCorrections one_point_corrections(int order, const Rational& s2_over_v2, const Rational& v4_over_v2sq) {
  FormalSeries t = catalan_series(order);
  FormalSeries tail = t.euler(0) + t;  // x T' + T
  OnePointCorrections out;
  out.s2 = (t.pow(3) * tail).shifted(0, 4) * v4_over_v2sq;
  out.s3 = (t * tail).shifted(0, 2) * s2_over_v2;
  out.s4 = FormalSeries({"x"}, {order});
  for (int p = 3; 2 * p <= order; ++p) out.s4 += (t.pow(2 * p - 1) * tail).shifted(0, 2 * p) * Rational(p + 1);
  return out;
}

// ---------------------------------------------------------------------------
// Two-point function at leading order

/// C_2(x_1, x_2) = base + vt4 * v4_part; coefficients of <tr B^{m1} tr B^{m2}>_c at leading order.
struct TwoPointSeries {
  FormalSeries base;
  FormalSeries v4_part;

  FormalSeries at(const Rational& v4t) const { return base + v4_part * v4t; }
};

/// x1 x2 d1 d2 [ (vt4 - 1)/2 T1 T2 + sum_{r>=3} (2/r) (x1 T1 x2 T2)^r + (s2/v2) x1 T1 x2 T2 ].
inline TwoPointSeries two_point_series(int order, const Rational& s2_over_v2 = 0) {
  if (order < 2) throw Error("two_point_series needs order >= 2");
  std::vector<std::string> vars{"x1", "x2"};
  std::vector<int> orders{order, order};
  FormalSeries t = catalan_series(order);
  FormalSeries t1 = t.embedded(vars, orders, 0);
  FormalSeries t2 = t.embedded(vars, orders, 1);
  FormalSeries loop = t1.shifted(0, 1) * t2.shifted(1, 1);  // x1 T1 x2 T2
  FormalSeries trees = t1 * t2;
  FormalSeries base = trees * Rational(-1, 2) + loop * s2_over_v2;
  FormalSeries power = loop.pow(3);
  for (int r = 3; r <= order; ++r) {
    base += power * Rational(2, r);
    power = power * loop;
  }
  TwoPointSeries out;
  out.base = base.euler(0).euler(1);
  out.v4_part = (trees * Rational(1, 2)).euler(0).euler(1);
  return out;
}

/// Leading coefficient of (n v2)^{(m1+m2)/2} in <tr A^{m1} tr A^{m2}>_c, without the vt4 term:
/// -2 C(m1, m1/2-1) C(m2, m2/2-1) [m1 even] + sum_{r>=3, m1-r even} 2r C(m1, (m1-r)/2) C(m2, (m2-r)/2).
inline BigInt two_point_coefficient(int m1, int m2) {
  if ((m1 + m2) % 2) return 0;
  BigInt out = 0;
  if (m1 % 2 == 0) out -= 2 * binomial(m1, m1 / 2 - 1) * binomial(m2, m2 / 2 - 1);
  for (int r = 3; r <= std::min(m1, m2); ++r)
    if ((m1 - r) % 2 == 0) out += 2 * r * binomial(m1, (m1 - r) / 2) * binomial(m2, (m2 - r) / 2);
  return out;
}

/// Leading resolvent G(y) = T(1/y)/y for |y| > 2 (the branch with G ~ 1/y at infinity).
inline double resolvent(double y) {
  if (!(std::abs(y) > 2.0)) throw DomainError("G(y) is evaluated only off the cut, |y| > 2; got " + std::to_string(y));
  return 2.0 / (y + std::copysign(std::sqrt(y * y - 4.0), y));
}

inline double resolvent_derivative(double y) {
  double g = resolvent(y);
  return -g * g / (1.0 - g * g);
}

/// n^2 G_c(y1, y2) from the mixed derivative of
/// -2 log(1 - G1 G2) + (vt4 - 3)/2 G1^2 G2^2 - 2 G1 G2 + (s2/v2) G1 G2.
inline double two_point_gc(double y1, double y2, double v4t, double s2_over_v2 = 0.0) {
  double g1 = resolvent(y1), g2 = resolvent(y2);
  double d = resolvent_derivative(y1) * resolvent_derivative(y2);
  double u = 1.0 - g1 * g2;
  return d * (2.0 / (u * u) + 2.0 * (v4t - 3.0) * g1 * g2 + (s2_over_v2 - 2.0));
}

/// The same function in the difference-quotient form; coincides with two_point_gc at s2 = 2 v2.
inline double two_point_gc_kkp(double y1, double y2, double v4t) {
  double g1 = resolvent(y1), g2 = resolvent(y2);
  double w = (1.0 - g1 * g1) * (1.0 - g2 * g2);
  double q = (y1 == y2) ? resolvent_derivative(y1) : (g1 - g2) / (y1 - y2);
  return 2.0 / w * q * q + 2.0 * (v4t - 3.0) * g1 * g1 * g1 * g2 * g2 * g2 / w;
}

}  // namespace wigner
