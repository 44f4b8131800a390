#include <gtest/gtest.h>

#include <random>

#include "wigner/asymptotics.hpp"

using namespace wigner;

namespace {

/// Enumerated walks of length 2n on a tree with one edge run 2m times and every other edge twice.
/// For m = 1 every edge qualifies, so each tree walk counts once per edge (one marked edge).
long long special_edge_walks(int m, int n) {
  long long count = 0;
  for (const auto& w : enumerate_single(2 * n)) {
    auto pr = profile(w);
    if (pr.loops != 0) continue;
    if (m == 1) {
      if (pr.runs.size() == 1 && pr.runs.count(2)) count += pr.runs.at(2);
      continue;
    }
    bool ok = pr.runs.count(2 * m) && pr.runs.at(2 * m) == 1;
    for (auto [h, c] : pr.runs) ok &= h == 2 || h == 2 * m;
    if (ok) ++count;
  }
  return count;
}

}  // namespace

TEST(Catalan, Coefficients) {
  auto t = catalan_series(8);
  const std::vector<int> c{1, 1, 2, 5, 14};
  for (int m = 0; m <= 4; ++m) EXPECT_EQ(t.coeff(2 * m), c[m]);
  for (int e = 1; e <= 7; e += 2) EXPECT_EQ(t.coeff(e), 0);
}

TEST(Catalan, FunctionalEquation) {
  auto t = catalan_series(16);
  auto one = FormalSeries::constant({"x"}, {16}, 1);
  auto residual = one + (t * t).shifted(0, 2) - t;
  for (int e = 0; e <= 16; ++e) EXPECT_EQ(residual.coeff(e), 0) << e;
}

TEST(TPower, ClosedFormMatchesRepeatedProduct) {
  for (int s = 1; s <= 6; ++s)
    for (int order : {8, 12, 16}) EXPECT_TRUE(t_power_series(s, order).agrees_with(catalan_series(order).pow(s))) << s;
  EXPECT_EQ(t_power_series(2, 4).coeff(2), 2);
  EXPECT_EQ(t_power_series(3, 4).coeff(4), 9);
  EXPECT_EQ(catalan_series(4).pow(3).coeff(4), 9);
}

TEST(SpecialEdge, BinomialCoefficients) {
  auto f2 = special_edge_series(2, 8);
  EXPECT_EQ(f2.coeff(4), 1);
  EXPECT_EQ(f2.coeff(6), 6);
  EXPECT_EQ(f2.coeff(8), 28);
  EXPECT_EQ(special_edge_series(1, 2).coeff(2), 1);
  for (int m = 1; m <= 5; ++m) {
    auto f = special_edge_series(m, 16);
    EXPECT_TRUE(f.agrees_with(special_edge_series_from_trees(m, 16))) << m;
    for (int n = 1; n <= 8; ++n) EXPECT_EQ(f.coeff(2 * n), Rational(binomial(2 * n, n - m))) << m << "," << n;
  }
}

TEST(SpecialEdge, MatchesEnumeratedWalks) {
  for (int m = 1; m <= 3; ++m) {
    auto f = special_edge_series(m, 12);
    for (int n = m; n <= 6; ++n) EXPECT_EQ(f.coeff(2 * n), special_edge_walks(m, n)) << "m=" << m << " n=" << n;
  }
}

TEST(PhiR, Coefficients) {
  auto phi2 = phi_r_series(2, 4, 6);
  EXPECT_EQ(phi2.coeff({2, 2, 4}), 2);
  for (const auto& [e, c] : phi2.coefficients()) EXPECT_EQ(e[2] % 2, 0);
  auto phi3 = phi_r_series(3, 2, 6);
  EXPECT_EQ(phi3.coeff({2, 2, 2, 6}), 4);
}

TEST(PhiR, AgreesWithBinomialSum) {
  for (auto sig : std::vector<TraceSignature>{{4, 4}, {6, 4}, {4, 2}, {4, 4, 4}, {6, 4, 2}})
    for (int j = sig.traces(); j <= sig.total() / 2; ++j)
      EXPECT_EQ(phi_r_prediction(sig, j), Rational(highest_moment_prediction(sig, j))) << sig.to_string() << " j=" << j;
}

TEST(LeadingHighestMoment, Examples) {
  CorrelatorEngine engine;
  auto a = leading_highest_moment(engine, {4, 2}, 3);
  EXPECT_EQ(a.predicted, 2);
  EXPECT_TRUE(a.match);
  auto b = leading_highest_moment(engine, {4, 4}, 2);
  EXPECT_EQ(b.predicted, 32);
  EXPECT_TRUE(b.match);
  auto c = leading_highest_moment(engine, {3, 3}, 2);
  EXPECT_EQ(c.predicted, 0);
  EXPECT_TRUE(c.match);
}

TEST(Kernel, HandValues) {
  EXPECT_NEAR(rj_eval(1, 0.0), -1.0 / (2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(rj_eval(1, std::sqrt(2.0)), 0.0, 1e-15);
  EXPECT_THROW(rj_eval(1, 2.0), DomainError);
  EXPECT_THROW(rj_eval(2, -3.0), DomainError);
}

TEST(Kernel, RecursionMatchesDirect) {
  EXPECT_NEAR(rj_eval(4, 1.0), rj_direct(4, 1.0), 1e-12 * std::abs(rj_direct(4, 1.0)));
  for (int j = 1; j <= 8; ++j)
    for (double y = -1.95; y < 1.96; y += 0.15) {
      double d = rj_direct(j, y);
      EXPECT_NEAR(rj_eval(j, y), d, 1e-11 * std::max(1.0, std::abs(d))) << j << " " << y;
    }
}

TEST(Kernel, Moments) {
  EXPECT_NEAR(rj_moment(1, 1), 1.0, 1e-12);
  EXPECT_NEAR(rj_moment(3, 2), 0.0, 1e-12);
  EXPECT_NEAR(rj_moment(2, 5), 120.0, 1e-9);
  for (int j = 1; j <= 6; ++j)
    for (int k = 0; k <= 12; ++k) EXPECT_NEAR(rj_moment(j, k), to_double(Rational(binomial(2 * k, k - j))), 1e-8);
}

TEST(DeltaRho, Examples) {
  auto zero = delta_rho_leading(2, 0, 1, 100, {{0.3}, {-1.2}});
  for (double v : zero) EXPECT_EQ(v, 0.0);
  auto one = delta_rho_leading(2, 2, 1, 100, {{0.0}});
  EXPECT_NEAR(one[0], 0.01 * 2 * rj_direct(2, 0.0), 1e-15);
  auto two = delta_rho_leading(2, 2, 1, 10, {{0.5, -0.7}});
  EXPECT_NEAR(two[0], 2.0 * 1e-2 * 2 * rj_eval(1, 0.5) * rj_eval(1, -0.7), 1e-15);
  EXPECT_THROW(delta_rho_leading(2, 1, 1, 10, {{2.5}}), DomainError);
}

TEST(DeltaRho, MomentsReproduceDifference) {
  // int R_j y^{2k} = C(2k, k-j): the kernel's moments are the leading difference coefficients.
  CorrelatorEngine engine;
  auto gauss = EnsembleSpec::gaussian(), rad = EnsembleSpec::rademacher();
  for (int k = 2; k <= 5; ++k) {
    auto d = ensemble_difference(engine, {2 * k}, gauss, rad, 2);
    EXPECT_NEAR(to_double(d.leading->observed), 2.0 * rj_moment(2, k), 1e-8);
  }
}

TEST(OnePoint, Coefficients) {
  auto s = one_point_corrections(14, 1, 1);
  EXPECT_EQ(s.s4.coeff(8), 37);
  EXPECT_EQ(s.s4.coeff(10), 236);
  EXPECT_EQ(s.s3.coeff(2), 1);
}

TEST(OnePoint, AgainstExactTables) {
  CorrelatorEngine engine;
  auto s = one_point_corrections(14, 0, Rational(7, 3));
  for (int k = 3; k <= 7; ++k) {
    auto p = engine.exact_moment({2 * k});
    EXPECT_EQ(s.s4.coeff(2 * k), Rational(p.coefficient(k, MomentMonomial::power(1, k)))) << k;
  }
  for (int k = 2; k <= 7; ++k) EXPECT_EQ(s.s2.coeff(2 * k) * Rational(3, 7), Rational(binomial(2 * k, k - 2))) << k;
}

TEST(TwoPoint, ClosedCoefficient) {
  EXPECT_EQ(two_point_coefficient(3, 3), 6);
  EXPECT_EQ(two_point_coefficient(4, 4), -24);
  EXPECT_EQ(two_point_coefficient(3, 2), 0);
  auto c2 = two_point_series(8);
  EXPECT_EQ(c2.base.coeff({4, 4}), -24);
  EXPECT_EQ(c2.v4_part.coeff({4, 4}), 32);
  EXPECT_EQ(c2.base.coeff({3, 3}), 6);
}

TEST(TwoPoint, SeriesMatchesExactLeadingCoefficients) {
  CorrelatorEngine engine;
  auto c2 = two_point_series(11);
  for (int m1 = 1; m1 <= 11; ++m1)
    for (int m2 = 1; m1 + m2 <= 12; ++m2) {
      if ((m1 + m2) % 2) continue;
      TraceSignature sig{m1, m2};
      auto e = normalize_and_expand(engine.exact_connected(sig), sig, 2);
      EXPECT_EQ(e.coefficient(2, {}), c2.base.coeff({m1, m2})) << sig.to_string();
      EXPECT_EQ(e.coefficient(2, MomentMonomial::power(2)), c2.v4_part.coeff({m1, m2})) << sig.to_string();
      EXPECT_EQ(Rational(two_point_coefficient(m1, m2)), c2.base.coeff({m1, m2})) << sig.to_string();
    }
}

TEST(TwoPoint, ResolventBranch) {
  EXPECT_NEAR(resolvent(1e6), 1e-6, 1e-15);
  EXPECT_NEAR(resolvent(-3.0), (-3.0 + std::sqrt(5.0)) / 2.0, 1e-15);
  EXPECT_THROW(resolvent(1.5), DomainError);
  double y = 3.7, g = resolvent(y);
  EXPECT_NEAR(g * g - y * g + 1.0, 0.0, 1e-14);
}

TEST(TwoPoint, ClosedFormsAgreeAtSpecialDiagonal) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mag(2.1, 10.0), v4(0.5, 5.0);
  std::bernoulli_distribution sign;
  for (int i = 0; i < 100; ++i) {
    double y1 = mag(rng) * (sign(rng) ? 1 : -1), y2 = mag(rng) * (sign(rng) ? 1 : -1), v4t = v4(rng);
    double a = two_point_gc(y1, y2, v4t, 2.0), b = two_point_gc_kkp(y1, y2, v4t);
    EXPECT_NEAR(a, b, 1e-10 * std::max(1.0, std::abs(a)));
  }
}

TEST(TwoPoint, GaussianDropsFourthMomentTerm) {
  double base = two_point_gc(3.0, -5.0, 3.0, 0.0);
  double g1 = resolvent(3.0), g2 = resolvent(-5.0);
  double d = resolvent_derivative(3.0) * resolvent_derivative(-5.0);
  EXPECT_NEAR(base, d * (2.0 / ((1 - g1 * g2) * (1 - g1 * g2)) - 2.0), 1e-14);
}

TEST(TwoPoint, SeriesSumsToClosedForm) {
  // sum_{m1,m2} C2[m1,m2] / (y1^{m1+1} y2^{m2+1}) converges to n^2 G_c for large |y|.
  const double y1 = 15.0, y2 = -17.0, v4t = 1.7;
  auto c2 = two_point_series(20).at(Rational(17, 10));
  double sum = 0.0;
  for (const auto& [e, c] : c2.coefficients()) sum += to_double(c) / (std::pow(y1, e[0] + 1) * std::pow(y2, e[1] + 1));
  EXPECT_NEAR(sum, two_point_gc(y1, y2, v4t, 0.0), 1e-12);
}
