// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "wigner/asymptotics.hpp"
#include "wigner/fixtures.hpp"
#include "wigner/montecarlo.hpp"

using namespace wigner;

namespace {

int failures = 0;

void report(int id, const std::string& what, const std::function<std::string()>& check) {
  std::string problem;
  try {
    problem = check();
  } catch (const std::exception& e) {
    problem = std::string("exception: ") + e.what();
  }
  if (problem.empty()) {
    std::printf("AC%d PASS %s\n", id, what.c_str());
  } else {
    ++failures;
    std::printf("AC%d FAIL %s -- %s\n", id, what.c_str(), problem.c_str());
  }
  std::fflush(stdout);
}

std::string check_table(CorrelatorEngine& engine, const std::string& file) {
  auto entries = load_fixture_file(std::filesystem::path(WIGNER_FIXTURE_DIR) / file);
  if (entries.empty()) return "no entries in " + file;
  for (const auto& e : entries) {
    auto r = check_fixture(engine, e);
    if (!r.pass) return r.entry.source + ": " + e.kind + " " + e.signature.to_string() + " computed " + r.computed.to_text();
  }
  return {};
}

std::vector<TraceSignature> fixture_signatures() {
  std::vector<TraceSignature> out;
  for (const auto& e : load_fixture_suite(WIGNER_FIXTURE_DIR)) out.push_back(e.signature);
  return out;
}

/// Integer partitions of `total` into non-increasing parts.
void partitions_of(int total, int largest, std::vector<int>& current, std::vector<TraceSignature>& out) {
  if (total == 0) {
    out.push_back(TraceSignature{current});
    return;
  }
  for (int part = std::min(total, largest); part >= 1; --part) {
    current.push_back(part);
    partitions_of(total - part, part, current, out);
    current.pop_back();
  }
}

/// Single closed walks of length 2n on a tree: every run equals 2 except one run of 2m.
/// For m = 1 each walk counts once per edge (the marked edge).
BigInt enumerated_special_edge_walks(int m, int n) {
  EnumerationOptions options;
  options.even_only = true;
  BigInt count = 0;
  for_each_path(std::vector<int>{2 * n}, options, [&](const PathCursor& c) {
    const auto& active = c.active_edges();
    const int edges = static_cast<int>(active.size());
    if (edges != c.vertex_count() - 1) return;
    int special = 0;
    for (int e : active) {
      int runs = c.run_count(e);
      if (runs == 2) continue;
      if (runs == 2 * m) {
        ++special;
        continue;
      }
      return;
    }
    if (m == 1)
      count += edges;
    else if (special == 1)
      count += 1;
  });
  return count;
}

}  // namespace

int main() {
  CorrelatorEngine engine;

  report(1, "one-point table reproduced exactly", [&] { return check_table(engine, "onept.txt"); });
  report(2, "two-point connected table reproduced exactly", [&] { return check_table(engine, "twopt.txt"); });
  report(3, "three-point connected table reproduced exactly", [&] { return check_table(engine, "threept.txt"); });

  report(4, "large-n limit of g_j^(k) is C(2k, k-j), Catalan for j = 1", [&]() -> std::string {
    for (int k = 1; k <= 7; ++k)
      for (int j = 1; j <= k; ++j) {
        auto g = g_coefficient(engine, k, j, 0);
        MomentMonomial m = j == 1 ? MomentMonomial{} : MomentMonomial::power(j);
        Rational expected = j == 1 ? Rational(binomial(2 * k, k) / (k + 1)) : Rational(binomial(2 * k, k - j));
        if (g.coefficient(0, m) != expected)
          return "k=" + std::to_string(k) + " j=" + std::to_string(j) + " got " + to_string(g.coefficient(0, m));
      }
    return {};
  });

  report(5, "R_j moments equal C(2k, k-j) for j <= 6, k <= 12", [&]() -> std::string {
    for (int j = 1; j <= 6; ++j)
      for (int k = 0; k <= 12; ++k) {
        double got = rj_moment(j, k), want = to_double(Rational(binomial(2 * k, k - j)));
        if (std::abs(got - want) > 1e-8) return "j=" + std::to_string(j) + " k=" + std::to_string(k);
      }
    return {};
  });

  report(6, "special-edge series match enumerated tree walks up to x^12", [&]() -> std::string {
    for (int m = 1; m <= 4; ++m) {
      auto f = special_edge_series(m, 12);
      for (int n = 1; n <= 6; ++n)
        if (f.coeff(2 * n) != Rational(enumerated_special_edge_walks(m, n)))
          return "m=" + std::to_string(m) + " n=" + std::to_string(n);
    }
    return {};
  });

  report(7, "two-point series matches exact n^-2 coefficients and the closed formula", [&]() -> std::string {
    auto c2 = two_point_series(11);
    for (int m1 = 1; m1 <= 11; ++m1)
      for (int m2 = 1; m1 + m2 <= 12; ++m2) {
        TraceSignature sig{m1, m2};
        auto e = normalize_and_expand(engine.exact_connected(sig), sig, 2);
        if (e.coefficient(2, {}) != c2.base.coeff({m1, m2}) ||
            e.coefficient(2, MomentMonomial::power(2)) != c2.v4_part.coeff({m1, m2}) ||
            Rational(two_point_coefficient(m1, m2)) != c2.base.coeff({m1, m2}))
          return "(" + sig.to_string() + ")";
        for (const auto& [p, poly] : e.terms())
          if (p < 2 && !poly.empty()) return "(" + sig.to_string() + ") has a term below n^-2";
      }
    return {};
  });

  report(8, "highest-moment coefficients match the binomial-sum prediction", [&]() -> std::string {
    int checked = 0;
    for (const auto& sig : fixture_signatures())
      for (int j = std::max(2, sig.traces()); j <= sig.total() / 2; ++j) {
        auto r = leading_highest_moment(engine, sig, j);
        if (!r.match)
          return "(" + sig.to_string() + ") j=" + std::to_string(j) + " predicted " + to_string(r.predicted) +
                 " observed " + to_string(r.observed);
        ++checked;
      }
    return checked ? std::string{} : "nothing checked";
  });

  report(9, "normalized connected correlators are O(n^{2-2r})", [&]() -> std::string {
    for (const auto& sig : fixture_signatures()) {
      const int r = sig.traces();
      auto e = normalize_and_expand(engine.exact_connected(sig), sig, 2 * r);
      auto lead = e.leading_power();
      if (lead && *lead < 2 * r - 2) return "(" + sig.to_string() + ") leads at n^-" + std::to_string(*lead);
    }
    return {};
  });

  report(10, "moments rebuild from connected parts for total degree <= 10", [&]() -> std::string {
    std::vector<TraceSignature> all;
    std::vector<int> current;
    for (int total = 1; total <= 10; ++total) partitions_of(total, total, current, all);
    for (const auto& sig : all)
      if (!(engine.moment_from_connected(sig) == engine.exact_moment(sig))) return "(" + sig.to_string() + ")";
    return {};
  });

  report(11, "subleading one-point series match the exact tables", [&]() -> std::string {
    const Rational v4t(7, 3);
    auto s = one_point_corrections(14, 0, v4t);
    for (int k = 3; k <= 7; ++k) {
      auto p = engine.exact_moment({2 * k});
      if (s.s4.coeff(2 * k) != Rational(p.coefficient(k, MomentMonomial::power(1, k))))
        return "S4 k=" + std::to_string(k);
    }
    for (int k = 2; k <= 7; ++k)
      if (s.s2.coeff(2 * k) != v4t * Rational(binomial(2 * k, k - 2))) return "S2 k=" + std::to_string(k);
    return {};
  });

  report(12, "gaussian minus rademacher leads with C(2k, k-2) * 2 at 1/n", [&]() -> std::string {
    auto g = EnsembleSpec::gaussian(), rad = EnsembleSpec::rademacher();
    for (int k : {2, 3}) {
      auto d = ensemble_difference(engine, {2 * k}, g, rad);
      if (!d.j || *d.j != 2) return "differing moment not detected for k=" + std::to_string(k);
      if (!d.leading || d.leading->n_power != -1 || !d.leading->match ||
          d.leading->observed != Rational(2 * binomial(2 * k, k - 2)))
        return "leading term for k=" + std::to_string(k);
      if (d.series.begin()->first != 1) return "difference starts below 1/n for k=" + std::to_string(k);
    }
    if (!ensemble_difference(engine, {2}, g, rad).series.empty()) return "(2) differs";
    return {};
  });

  report(13, "Monte Carlo estimates agree with exact values within 4 standard errors", [&]() -> std::string {
    std::ostringstream bad;
    for (auto e : {EnsembleSpec::rademacher(), EnsembleSpec::gaussian()}) {
      SamplerConfig cfg;
      cfg.n = 12;
      cfg.ensemble = e;
      cfg.samples = 100000;
      cfg.batch_count = 20;
      cfg.seed = 2024;
      std::vector<EstimateReport> rows = scorecard(engine, {{2}, {4}}, cfg, false);
      for (auto& row : scorecard(engine, {{2, 2}, {4, 2}}, cfg, true)) rows.push_back(row);
      for (const auto& row : rows)
        if (!row.z_score || std::abs(*row.z_score) > 4.0)
          bad << e.preset_name << " (" << row.signature.to_string() << ") z=" << (row.z_score ? *row.z_score : 0.0)
              << "; ";
    }
    return bad.str();
  });

  report(14, "resolvent closed forms agree at s^2 = 2 v2 on 100 random points", [&]() -> std::string {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mag(2.1, 10.0), v4(0.5, 5.0);
    std::bernoulli_distribution sign;
    for (int i = 0; i < 100; ++i) {
      double y1 = mag(rng) * (sign(rng) ? 1 : -1), y2 = mag(rng) * (sign(rng) ? 1 : -1), v4t = v4(rng);
      double a = two_point_gc(y1, y2, v4t, 2.0), b = two_point_gc_kkp(y1, y2, v4t);
      if (std::abs(a - b) > 1e-10 * std::max(1.0, std::abs(a)))
        return "y=(" + std::to_string(y1) + ", " + std::to_string(y2) + ")";
    }
    return {};
  });

  std::printf("%d of 14 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
