#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "wigner/correlators.hpp"
#include "wigner/ensemble.hpp"

namespace wigner {

/// Finite-n sampling setup. The entry law comes from an ensemble preset; a positive
/// diagonal_second_moment on the ensemble switches the diagonal to centred gaussians.
struct SamplerConfig {
  int n = 12;
  EnsembleSpec ensemble = EnsembleSpec::rademacher();
  long long samples = 100000;
  std::uint64_t seed = 1;
  int batch_count = 20;
  int threads = 1;

  void validate() const {
    ensemble.validate();
    if (n < 2) throw Error("sampling needs n >= 2");
    if (ensemble.law == EntryLaw::custom) throw Error("a custom moment list cannot be sampled; use a preset law");
    if (batch_count < 10) throw Error("batch_count must be >= 10");
    if (samples < batch_count) throw Error("samples must be >= batch_count");
    if (threads < 1) throw Error("threads must be >= 1");
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Sample number `index`: a generator keyed on (seed, index), so any sample can be redrawn alone.
inline Eigen::MatrixXd sample_matrix(const SamplerConfig& cfg, std::uint64_t index) {
  std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ detail::splitmix64(index)));
  const double p = to_double(cfg.ensemble.parameter);
  auto draw = [&]() -> double {
    switch (cfg.ensemble.law) {
      case EntryLaw::rademacher:
        return (rng() >> 63) ? 1.0 : -1.0;
      case EntryLaw::gaussian:
        return std::normal_distribution<double>(0.0, std::sqrt(p))(rng);
      case EntryLaw::uniform:
        return std::uniform_real_distribution<double>(-p, p)(rng);
      case EntryLaw::two_point:
        return (rng() >> 63) ? p : -p;
      case EntryLaw::custom:
        break;
    }
    throw Error("a custom moment list cannot be sampled");
  };
  const int n = cfg.n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) a(i, j) = a(j, i) = draw();
  if (cfg.ensemble.diagonal_second_moment > 0) {
    std::normal_distribution<double> diag(0.0, std::sqrt(to_double(cfg.ensemble.diagonal_second_moment)));
    for (int i = 0; i < n; ++i) a(i, i) = diag(rng);
  }
  return a;
}

/// tr A^1 .. tr A^max_power by explicit dense powers.
inline std::vector<double> trace_powers(const Eigen::MatrixXd& a, int max_power) {
  std::vector<double> out(max_power + 1, 0.0);
  out[0] = static_cast<double>(a.rows());
  Eigen::MatrixXd p = a;
  for (int k = 1; k <= max_power; ++k) {
    if (k > 1) p = p * a;
    out[k] = p.trace();
  }
  return out;
}

/// The same traces as sums of eigenvalue powers.
inline std::vector<double> trace_powers_from_eigenvalues(const Eigen::MatrixXd& a, int max_power) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  std::vector<double> out(max_power + 1, 0.0);
  for (int k = 0; k <= max_power; ++k) out[k] = lambda.array().pow(k).sum();
  return out;
}

struct EstimateReport {
  TraceSignature signature;
  bool connected = true;
  int n = 0;
  std::string distribution;
  long long samples = 0;
  double estimate = 0;
  double standard_error = 0;
  std::optional<Rational> exact_value;  // absent when the diagonal is random
  std::optional<double> z_score;
  bool flagged = false;  // |z| > 4
};

/// (estimate - exact) / se. A zero standard error is accepted only when the estimate is exact
/// (a deterministic statistic, e.g. tr A^4 for signs at n = 3), and then scores 0.
inline double z_score(double estimate, double standard_error, const Rational& exact) {
  const double x = to_double(exact);
  if (standard_error > 0) return (estimate - x) / standard_error;
  if (std::abs(estimate - x) <= 1e-9 * std::max(1.0, std::abs(x))) return 0.0;
  throw DegenerateVariance("batch variance is zero but the estimate " + std::to_string(estimate) +
                           " differs from the exact value " + to_string(exact));
}

/// Batch-means estimate of <prod tr A^{k_i}> (or its connected part) with a z-score against the
/// exact polynomial. A zero batch variance is accepted only when the estimate equals the exact value.
inline EstimateReport estimate(CorrelatorEngine& engine, const TraceSignature& sig, const SamplerConfig& cfg,
                               bool connected = true) {
  cfg.validate();
  if (sig.traces() < 1) throw Error("empty trace signature");
  const TraceSignature sorted = sig.sorted();  // fixed product order: trace order never changes the result
  const int r = sorted.traces();
  const int max_power = sorted.powers.front();
  const unsigned subsets = 1u << r;
  const auto partitions = set_partitions(r);
  // Joint cumulants of order >= 2 are shift invariant; centring each trace on its exact mean keeps
  // deterministic traces (tr A^2 for signs) exactly zero instead of leaving rounding noise.
  std::vector<double> centre(r, 0.0);
  if (connected && r >= 2 && cfg.ensemble.diagonal_second_moment == 0)
    for (int t = 0; t < r; ++t)
      centre[t] = to_double(engine.exact_moment(TraceSignature{sorted.powers[t]})
                                .evaluate(BigInt(cfg.n), [&](int j) { return cfg.ensemble.moment(j); }));

  std::vector<double> batch_value(cfg.batch_count, 0.0);
  auto run_batch = [&](int b) {
    const long long lo = cfg.samples * b / cfg.batch_count;
    const long long hi = cfg.samples * (b + 1) / cfg.batch_count;
    std::vector<double> sums(subsets, 0.0);
    for (long long i = lo; i < hi; ++i) {
      auto tr = trace_powers(sample_matrix(cfg, static_cast<std::uint64_t>(i)), max_power);
      for (unsigned mask = 1; mask < subsets; ++mask) {
        double prod = 1.0;
        for (int t = 0; t < r; ++t)
          if (mask & (1u << t)) prod *= tr[sorted.powers[t]] - centre[t];
        sums[mask] += prod;
      }
    }
    const double count = static_cast<double>(hi - lo);
    for (auto& s : sums) s /= count;
    if (!connected) {
      batch_value[b] = sums[subsets - 1];
      return;
    }
    double cumulant = 0.0;
    for (const auto& part : partitions) {
      double prod = static_cast<double>(part.mobius);
      for (unsigned block : part.blocks) prod *= sums[block];
      cumulant += prod;
    }
    batch_value[b] = cumulant;
  };

  const int workers = std::min(cfg.threads, cfg.batch_count);
  if (workers == 1) {
    for (int b = 0; b < cfg.batch_count; ++b) run_batch(b);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (int b = next++; b < cfg.batch_count; b = next++) run_batch(b);
      });
    for (auto& th : pool) th.join();
  }

  EstimateReport report;
  report.signature = sig;
  report.connected = connected;
  report.n = cfg.n;
  report.distribution = cfg.ensemble.preset_name;
  report.samples = cfg.samples;
  double mean = 0.0;
  for (double v : batch_value) mean += v;
  mean /= cfg.batch_count;
  double var = 0.0;
  for (double v : batch_value) var += (v - mean) * (v - mean);
  var /= (cfg.batch_count - 1);
  report.estimate = mean;
  report.standard_error = std::sqrt(var / cfg.batch_count);

  if (cfg.ensemble.diagonal_second_moment == 0) {
    CorrelatorPolynomial p = connected ? engine.exact_connected(sorted) : engine.exact_moment(sorted);
    Rational exact = p.evaluate(BigInt(cfg.n), [&](int j) { return cfg.ensemble.moment(j); });
    report.exact_value = exact;
    report.z_score = z_score(mean, report.standard_error, exact);
    report.flagged = std::abs(*report.z_score) > 4.0;
  }
  return report;
}

inline std::vector<EstimateReport> scorecard(CorrelatorEngine& engine, const std::vector<TraceSignature>& signatures,
                                             const SamplerConfig& cfg, bool connected = true) {
  std::vector<EstimateReport> out;
  for (const auto& sig : signatures) out.push_back(estimate(engine, sig, cfg, connected));
  return out;
}

inline json report_to_json(const EstimateReport& r) {
  json out = {{"signature", r.signature.powers},
              {"connected", r.connected},
              {"n", r.n},
              {"dist", r.distribution},
              {"samples", r.samples},
              {"estimate", r.estimate},
              {"se", r.standard_error},
              {"flagged", r.flagged}};
  out["exact"] = r.exact_value ? json(to_string(*r.exact_value)) : json(nullptr);
  out["z"] = r.z_score ? json(*r.z_score) : json(nullptr);
  return out;
}

inline std::string scorecard_csv(const std::vector<EstimateReport>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "signature,connected,n,dist,samples,estimate,se,exact,z\n";
  for (const auto& r : rows) {
    os << '"' << r.signature.to_string() << "\"," << (r.connected ? 1 : 0) << ',' << r.n << ',' << r.distribution << ','
       << r.samples << ',' << r.estimate << ',' << r.standard_error << ','
       << (r.exact_value ? to_string(*r.exact_value) : "") << ',';
    if (r.z_score) os << *r.z_score;
    os << '\n';
  }
  return os.str();
}

}  // namespace wigner
