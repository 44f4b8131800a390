#include <gtest/gtest.h>

#include <filesystem>

#include "wigner/correlators.hpp"

using namespace wigner;

namespace {

CorrelatorPolynomial P(const std::string& text) { return CorrelatorPolynomial::parse(text); }

/// Exact expectation of prod_i tr A^{k_i} for an n x n zero-diagonal matrix whose off-diagonal entries
/// are uniform on `values`, by summing over every assignment (integer arithmetic, no walks involved).
Rational brute_force_expectation(const std::vector<int>& powers, int n, const std::vector<int>& values) {
  std::vector<std::pair<int, int>> slots;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) slots.emplace_back(i, j);
  const std::size_t m = values.size();
  std::vector<std::size_t> digit(slots.size(), 0);
  BigInt total = 0, count = 0;
  while (true) {
    std::vector<std::vector<BigInt>> a(n, std::vector<BigInt>(n, 0));
    for (std::size_t s = 0; s < slots.size(); ++s)
      a[slots[s].first][slots[s].second] = a[slots[s].second][slots[s].first] = values[digit[s]];
    BigInt product = 1;
    for (int k : powers) {
      auto p = a;
      for (int step = 1; step < k; ++step) {
        std::vector<std::vector<BigInt>> q(n, std::vector<BigInt>(n, 0));
        for (int i = 0; i < n; ++i)
          for (int l = 0; l < n; ++l)
            for (int j = 0; j < n; ++j) q[i][j] += p[i][l] * a[l][j];
        p = q;
      }
      BigInt tr = 0;
      for (int i = 0; i < n; ++i) tr += p[i][i];
      product *= tr;
    }
    total += product;
    count += 1;
    std::size_t s = 0;
    while (s < slots.size() && ++digit[s] == m) digit[s++] = 0;
    if (s == slots.size()) break;
  }
  return Rational(total) / Rational(count);
}

Rational discrete_moment(const std::vector<int>& values, int j) {
  BigInt sum = 0;
  for (int v : values) {
    BigInt p = 1;
    for (int i = 0; i < 2 * j; ++i) p *= v;
    sum += p;
  }
  return Rational(sum) / Rational(static_cast<long long>(values.size()));
}

}  // namespace

TEST(ExactMoment, Examples) {
  CorrelatorEngine engine;
  EXPECT_EQ(engine.exact_moment({4}), P("2N3 v2^2 + N2 v4"));
  EXPECT_TRUE(engine.exact_moment({3}).is_zero());
  EXPECT_EQ(engine.exact_moment({2, 2}), P("2N2 v4 + 4N3 v2^2 + N4 v2^2"));
  EXPECT_EQ(engine.exact_moment({4}).to_text(), "2*N3*v2^2 + N2*v4");
}

TEST(ExactConnected, Examples) {
  CorrelatorEngine engine;
  EXPECT_EQ(engine.exact_connected({2, 2}), P("2N2(v4 - v2^2)"));
  EXPECT_EQ(engine.exact_connected({2, 2, 2}), P("4 N2(v6 - 3 v4 v2 + 2 v2^3)"));
  EXPECT_EQ(engine.exact_connected({3, 3}), P("6N3 v2^3"));
}

TEST(ExactMoment, MatchesBruteForceExpectation) {
  // Entries uniform on {-2,-1,1,2}: v2 = 5/2, v4 = 17/2, v6 = 65/2, ...
  const std::vector<int> values{-2, -1, 1, 2};
  CorrelatorEngine engine;
  for (auto powers : std::vector<std::vector<int>>{{4}, {6}, {2, 2}, {3, 3}, {4, 2}, {2, 2, 2}, {3, 2, 1}}) {
    TraceSignature sig(powers);
    Rational expected = brute_force_expectation(powers, 4, values);
    Rational got = engine.exact_moment(sig).evaluate(4, [&](int j) { return discrete_moment(values, j); });
    EXPECT_EQ(got, expected) << sig.to_string();
  }
}

TEST(ExactMoment, RademacherAtThree) {
  // Every sign pattern at n = 3 gives tr A^4 = 18.
  EXPECT_EQ(brute_force_expectation({4}, 3, {-1, 1}), 18);
  EXPECT_EQ(exact_moment({4}).evaluate(3, [](int) { return Rational(1); }), 18);
}

TEST(ExactConnected, RoutesAgree) {
  CorrelatorEngine engine;
  for (auto sig : std::vector<TraceSignature>{{2, 2}, {4, 2}, {3, 3}, {2, 2, 2}, {4, 2, 2}, {3, 3, 2}, {2, 2, 2, 2}, {3, 2, 2, 1}})
    EXPECT_NO_THROW(engine.exact_connected(sig, ConnectedRoute::both)) << sig.to_string();
}

TEST(ExactConnected, PathCumulantsSumAndFactorize) {
  for (auto lengths : std::vector<std::vector<int>>{{2, 2, 2}, {3, 3, 2}, {4, 2}}) {
    CorrelatorPolynomial sum;
    for (const auto& p : enumerate_multi(lengths)) {
      auto c = path_cumulant(p);
      if (edge_connected_components(p).size() > 1) {
        EXPECT_TRUE(c.is_zero()) << p.to_string();
      }
      sum += c;
    }
    EXPECT_EQ(sum, exact_connected(TraceSignature(lengths))) << "lengths " << TraceSignature(lengths).to_string();
  }
}

TEST(ExactConnected, PermutationSymmetry) {
  CorrelatorEngine engine;
  EXPECT_EQ(engine.connected_by_partitions({2, 4, 2}), engine.connected_by_partitions({4, 2, 2}));
  EXPECT_EQ(engine.connected_by_paths({2, 3, 3}), engine.connected_by_paths({3, 3, 2}));
}

TEST(ExactConnected, MomentCumulantConsistency) {
  CorrelatorEngine engine;
  for (auto sig : std::vector<TraceSignature>{{4, 4}, {3, 3, 2}, {2, 2, 2, 2}})
    EXPECT_EQ(engine.moment_from_connected(sig), engine.exact_moment(sig)) << sig.to_string();
}

TEST(ExactMoment, CapAndThreads) {
  EXPECT_THROW(exact_moment({18}), DegreeTooLarge);
  CorrelatorOptions threaded;
  threaded.threads = 3;
  EXPECT_EQ(exact_moment({10}, threaded), exact_moment({10}));
  EXPECT_EQ(exact_connected({4, 3, 3}, threaded), exact_connected({4, 3, 3}));
}

TEST(ExactMoment, DiskCache) {
  auto dir = std::filesystem::temp_directory_path() / ("wigner-cache-test-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  CorrelatorOptions o;
  o.cache_dir = dir;
  CorrelatorPolynomial first;
  {
    CorrelatorEngine engine(o);
    first = engine.exact_connected({4, 2, 2});
    EXPECT_FALSE(engine.last_stats().from_cache);
  }
  {
    CorrelatorEngine engine(o);
    EXPECT_EQ(engine.exact_connected({2, 4, 2}), first);
    EXPECT_TRUE(engine.last_stats().from_cache);
  }
  std::filesystem::remove_all(dir);
}

TEST(NormalizeAndExpand, Examples) {
  CorrelatorEngine engine;
  auto single = normalize_and_expand(engine.exact_moment({4}), {4}, 3);
  EXPECT_EQ(single.leading_power(), 0);
  EXPECT_EQ(single.coefficient(0, {}), 2);
  auto pair = normalize_and_expand(engine.exact_connected({2, 2}), {2, 2}, 4);
  EXPECT_EQ(pair.leading_power(), 2);
  EXPECT_EQ(pair.coefficient(2, MomentMonomial::power(2)), 2);
  EXPECT_EQ(pair.coefficient(2, {}), -2);
}

TEST(NormalizeAndExpand, SingleTraceHighestMoments) {
  CorrelatorEngine engine;
  for (int k = 2; k <= 6; ++k) {
    auto e = normalize_and_expand(engine.exact_moment({2 * k}), {2 * k}, k);
    for (int j = 2; j <= k; ++j)
      EXPECT_EQ(e.coefficient(j - 1, MomentMonomial::power(j)), Rational(binomial(2 * k, k - j))) << k << "," << j;
  }
}

TEST(GCoefficient, TenthMomentPartition) {
  CorrelatorEngine engine;
  auto m10 = engine.exact_moment({10});
  EXPECT_EQ(highest_moment_part(m10, 1), P("(42 N6 + 236 N5 + 145 N4) v2^5"));
  EXPECT_EQ(highest_moment_part(m10, 5), P("N2 v10"));
  auto g5 = g_coefficient(engine, 5, 5, 0);
  EXPECT_EQ(g5.coefficient(0, MomentMonomial::power(5)), 1);
  auto g32 = g_coefficient(engine, 3, 2, 0);
  EXPECT_EQ(g32.coefficient(0, MomentMonomial::power(2)), 6);
  auto g51 = g_coefficient(engine, 5, 1, 0);
  EXPECT_EQ(g51.coefficient(0, {}), 42);
}

TEST(GCoefficient, FiniteN) {
  // g_5^{(10)} at n: n^3 N_2 v10 / ((n-1)^5 v2^5) = n^4 / (n-1)^4 * vt10.
  CorrelatorEngine engine;
  auto g = g_coefficient_at(engine, 5, 5, 11);
  EXPECT_EQ(g.at(MomentMonomial::power(5)), Rational(14641, 10000));
}

TEST(Correlators, HighestMomentExtraction) {
  CorrelatorEngine engine;
  for (int k = 2; k <= 7; ++k) {
    auto p = engine.exact_moment({2 * k});
    for (int m = 2; m <= k; ++m) {
      auto mono = MomentMonomial::power(m) * MomentMonomial::power(1, k - m);
      EXPECT_EQ(p.coefficient(k + 2 - m, mono), binomial(2 * k, k - m)) << "k=" << k << " m=" << m;
      for (const auto& [key, c] : p.terms())
        if (key.monomial.highest_index() == m) {
          EXPECT_LE(key.s, k + 2 - m);
        }
    }
  }
}

TEST(Correlators, MixedParitySuppression) {
  CorrelatorEngine engine;
  for (auto sig : std::vector<TraceSignature>{{3, 3}, {5, 3}, {5, 5}, {7, 3}, {7, 5}, {9, 3}, {5, 1}, {7, 1}}) {
    const int half = sig.total() / 2;
    const auto connected = engine.exact_connected(sig);
    for (const auto& [key, c] : connected.terms()) {
      int m = key.monomial.highest_index();
      if (m >= 2) {
        EXPECT_LT(key.s, half + 2 - m) << sig.to_string() << " " << key.monomial.to_string();
      }
    }
  }
}

TEST(EnsembleDifference, Examples) {
  CorrelatorEngine engine;
  auto gauss = EnsembleSpec::gaussian(), rad = EnsembleSpec::rademacher();
  auto d4 = ensemble_difference(engine, {4}, gauss, rad, 2, BigInt(10));
  ASSERT_TRUE(d4.leading);
  EXPECT_TRUE(d4.leading->match);
  EXPECT_EQ(d4.leading->predicted, 2);
  EXPECT_EQ(d4.leading->n_power, -1);
  EXPECT_EQ(*d4.exact_value, Rational(2, 9));
  auto d2 = ensemble_difference(engine, {2}, gauss, rad);
  EXPECT_TRUE(d2.series.empty());
  auto d22 = ensemble_difference(engine, {2, 2}, gauss, rad);
  EXPECT_EQ(d22.series.at(2), 4);
  EXPECT_TRUE(d22.leading->match);
}

TEST(EnsembleDifference, MomentOrderViolation) {
  CorrelatorEngine engine;
  auto gauss = EnsembleSpec::gaussian(), rad = EnsembleSpec::rademacher();
  EXPECT_THROW(ensemble_difference(engine, {6}, gauss, rad, 3), MomentOrderViolation);
  EXPECT_THROW(ensemble_difference(engine, {6}, rad, rad, 2), MomentOrderViolation);
  EXPECT_THROW(ensemble_difference(engine, {6}, EnsembleSpec::gaussian(2), rad), MomentOrderViolation);
  EXPECT_THROW(ensemble_difference(engine, {6}, gauss, rad, 1), MomentOrderViolation);
}

TEST(EnsembleDifference, SixthMomentOnly) {
  // Same v2, v4 and v8, different v6.
  CorrelatorEngine engine;
  auto a = EnsembleSpec::custom({1, 3, 15, 105}), b = EnsembleSpec::custom({1, 3, 20, 105});
  auto d = ensemble_difference(engine, {8}, a, b);
  ASSERT_EQ(d.j, 3);
  EXPECT_TRUE(d.leading->match);
  EXPECT_EQ(d.leading->predicted, Rational(binomial(8, 1)) * -5);
}

TEST(Ensembles, Presets) {
  EXPECT_EQ(EnsembleSpec::gaussian(2).moment(3), 120);
  EXPECT_EQ(EnsembleSpec::uniform(3).moment(1), 3);
  EXPECT_EQ(EnsembleSpec::two_point(2).moment(2), 16);
  EXPECT_EQ(EnsembleSpec::parse("custom:1,3").standardized(2), 3);
  EXPECT_THROW(EnsembleSpec::parse("cauchy"), ParseError);
  EXPECT_THROW(EnsembleSpec::parse("custom:0"), Error);
  auto j = nlohmann::json::parse(R"({"preset": "gaussian", "parameter": "1/2", "n": 9, "s2": 1})");
  auto e = EnsembleSpec::from_json(j);
  EXPECT_EQ(e.moment(2), Rational(3, 4));
  EXPECT_EQ(*e.n, 9);
  EXPECT_EQ(e.diagonal_second_moment, 1);
}

TEST(Signatures, ParseAndSort) {
  auto s = TraceSignature::parse("2,4,3");
  EXPECT_EQ(s.sorted().to_string(), "4,3,2");
  EXPECT_EQ(s.total(), 9);
  EXPECT_THROW(TraceSignature::parse(""), ParseError);
  EXPECT_THROW(TraceSignature::parse("2,0"), ParseError);
}

TEST(SetPartitions, BellNumbersAndWeights) {
  const std::vector<std::size_t> bell{1, 1, 2, 5, 15, 52, 203};
  for (int r = 1; r <= 6; ++r) EXPECT_EQ(set_partitions(r).size(), bell[r]);
  for (const auto& p : set_partitions(4)) {
    long long b = static_cast<long long>(p.blocks.size()), w = 1;
    for (long long i = 1; i < b; ++i) w *= -i;
    EXPECT_EQ(p.mobius, w);
  }
}
