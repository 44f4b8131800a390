#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "wigner/algebra.hpp"
#include "wigner/ensemble.hpp"
#include "wigner/json_io.hpp"
#include "wigner/walks.hpp"

namespace wigner {

inline constexpr const char* kCodeVersion = "1";
// Packed accumulation keys hold 4-bit exponents for v2..v28 and a 6-bit vertex count.
inline constexpr int kMaxPackedDegree = 28;

/// Powers (k_1, ..., k_r) of the traces in a correlator.
struct TraceSignature {
  std::vector<int> powers;

  TraceSignature() = default;
  TraceSignature(std::initializer_list<int> p) : powers(p) {}
  explicit TraceSignature(std::vector<int> p) : powers(std::move(p)) {}

  int traces() const { return static_cast<int>(powers.size()); }
  int total() const {
    int k = 0;
    for (int p : powers) k += p;
    return k;
  }
  bool all_even() const {
    for (int p : powers)
      if (p % 2) return false;
    return true;
  }

  /// Powers in descending order; correlators are symmetric, so this is the cache key.
  TraceSignature sorted() const {
    TraceSignature s = *this;
    std::sort(s.powers.rbegin(), s.powers.rend());
    return s;
  }

  TraceSignature subset(unsigned mask) const {
    TraceSignature s;
    for (int i = 0; i < traces(); ++i)
      if (mask & (1u << i)) s.powers.push_back(powers[i]);
    return s;
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < powers.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(powers[i]);
    }
    return out;
  }

  /// "4,2" or "(4, 2)".
  static TraceSignature parse(std::string text) {
    std::string cleaned;
    for (char c : text)
      if (c != '(' && c != ')' && c != ' ') cleaned += c;
    TraceSignature s;
    std::stringstream ss(cleaned);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty() || !std::all_of(item.begin(), item.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw ParseError("bad trace power '" + item + "' in signature '" + text + "'");
      int k = std::stoi(item);
      if (k < 1) throw ParseError("trace powers must be >= 1");
      s.powers.push_back(k);
    }
    if (s.powers.empty()) throw ParseError("empty signature");
    return s;
  }

  friend bool operator==(const TraceSignature&, const TraceSignature&) = default;
  friend auto operator<=>(const TraceSignature&, const TraceSignature&) = default;
};

// ---------------------------------------------------------------------------
// Set partitions and Moebius weights

struct SetPartition {
  std::vector<unsigned> blocks;  // bitmasks over {0..r-1}
  long long mobius = 1;          // (-1)^{b-1} (b-1)!
};

inline std::vector<SetPartition> set_partitions(int r) {
  std::vector<SetPartition> out;
  if (r <= 0) return out;
  std::vector<int> label(r, 0);
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (i == r) {
      SetPartition p;
      p.blocks.assign(used, 0u);
      for (int t = 0; t < r; ++t) p.blocks[label[t]] |= 1u << t;
      long long mu = 1;
      for (int b = 1; b < used; ++b) mu *= -b;
      p.mobius = mu;
      out.push_back(std::move(p));
      return;
    }
    for (int b = 0; b <= used; ++b) {
      label[i] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  label[0] = 0;
  rec(1, 1);
  return out;
}

// ---------------------------------------------------------------------------
// Path accumulation

namespace detail {

inline std::uint64_t pack_run(int h) { return std::uint64_t{1} << (4 * (h / 2 - 1)); }

inline CorrelatorPolynomial unpack_counts(const std::unordered_map<std::uint64_t, long long>& counts) {
  CorrelatorPolynomial p;
  for (auto [key, count] : counts) {
    if (count == 0) continue;
    int vertices = static_cast<int>(key >> 56);
    MomentMonomial m;
    for (int j = 1; j <= kMaxPackedDegree / 2; ++j) {
      int e = static_cast<int>((key >> (4 * (j - 1))) & 0xF);
      if (e) m.multiply_by(j, e);
    }
    p.add_term(vertices, m, BigInt(count));
  }
  return p;
}

/// Sums N_V * prod_e v_{h_e} over paths (all run counts even, guaranteed by the pruned search).
struct MomentAccumulator {
  std::unordered_map<std::uint64_t, long long> counts;
  std::uint64_t paths = 0;

  void operator()(const PathCursor& c) {
    std::uint64_t key = static_cast<std::uint64_t>(c.vertex_count()) << 56;
    for (int id : c.active_edges()) {
      int h = c.run_count(id);
      if (h & 1) return;
      key += pack_run(h);
    }
    ++counts[key];
    ++paths;
  }

  void merge(const MomentAccumulator& o) {
    for (auto [k, v] : o.counts) counts[k] += v;
    paths += o.paths;
  }
};

/// Per-path cumulant of the walk products, restricted to edge-connected paths.
struct ConnectedAccumulator {
  explicit ConnectedAccumulator(int traces) : r(traces), partitions(set_partitions(traces)) {}

  int r;
  std::vector<SetPartition> partitions;
  std::unordered_map<std::uint64_t, long long> counts;
  std::uint64_t paths = 0;
  std::vector<int> local;
  std::vector<int> per_trace;
  std::vector<std::uint64_t> subset_key;
  std::vector<char> subset_zero;

  void operator()(const PathCursor& c) {
    const auto& active = c.active_edges();
    const int edges = static_cast<int>(active.size());
    if (local.size() < static_cast<std::size_t>(c.stride() * c.stride())) local.assign(c.stride() * c.stride(), -1);
    for (int e = 0; e < edges; ++e) local[active[e]] = e;
    per_trace.assign(static_cast<std::size_t>(edges) * r, 0);
    for (int i = 0; i < r; ++i) {
      const auto& w = c.walks()[i];
      for (std::size_t t = 0; t + 1 < w.size(); ++t) ++per_trace[local[c.edge_id(w[t], w[t + 1])] * r + i];
    }
    for (int e = 0; e < edges; ++e) local[active[e]] = -1;

    // Edge connectivity of the traces: paths splitting into edge-disjoint groups factorize to zero.
    unsigned reached = 1u;
    bool grew = true;
    while (grew) {
      grew = false;
      for (int e = 0; e < edges; ++e) {
        unsigned touch = 0;
        for (int i = 0; i < r; ++i)
          if (per_trace[e * r + i]) touch |= 1u << i;
        if ((touch & reached) && (touch & ~reached)) {
          reached |= touch;
          grew = true;
        }
      }
    }
    if (reached != (1u << r) - 1) return;

    const unsigned subsets = 1u << r;
    subset_key.assign(subsets, 0);
    subset_zero.assign(subsets, 0);
    for (unsigned mask = 1; mask < subsets; ++mask) {
      std::uint64_t key = 0;
      for (int e = 0; e < edges && !subset_zero[mask]; ++e) {
        int h = 0;
        for (int i = 0; i < r; ++i)
          if (mask & (1u << i)) h += per_trace[e * r + i];
        if (h & 1) subset_zero[mask] = 1;
        else if (h) key += pack_run(h);
      }
      subset_key[mask] = key;
    }
    const std::uint64_t base = static_cast<std::uint64_t>(c.vertex_count()) << 56;
    for (const auto& p : partitions) {
      std::uint64_t key = base;
      bool zero = false;
      for (unsigned b : p.blocks) {
        if (subset_zero[b]) {
          zero = true;
          break;
        }
        key += subset_key[b];
      }
      if (!zero) counts[key] += p.mobius;
    }
    ++paths;
  }

  void merge(const ConnectedAccumulator& o) {
    for (auto [k, v] : o.counts) counts[k] += v;
    paths += o.paths;
  }
};

/// Runs the pruned enumeration, split over `threads` workers by first-walk prefix.
/// Each worker owns an accumulator; they are merged in worker order, so the result is deterministic.
template <class Accumulator, class Make>
Accumulator accumulate_paths(const std::vector<int>& lengths, EnumerationOptions options, int threads, Make make) {
  if (threads <= 1) {
    Accumulator acc = make();
    for_each_path(lengths, options, acc);
    return acc;
  }
  auto prefixes = enumeration_prefixes(lengths, std::min(3, lengths.front() - 1));
  std::vector<Accumulator> partial;
  for (int t = 0; t < threads; ++t) partial.push_back(make());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = next++; i < prefixes.size(); i = next++) {
        PathEnumerator<Accumulator> e(lengths, options, partial[t]);
        e.run_from(prefixes[i]);
      }
    });
  }
  for (auto& th : pool) th.join();
  Accumulator out = make();
  for (const auto& p : partial) out.merge(p);
  return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

/// On-disk memo of exact results, content-addressed by (kind, sorted signature, cap, code version).
class CorrelatorCache {
 public:
  explicit CorrelatorCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::optional<std::pair<CorrelatorPolynomial, std::uint64_t>> load(const std::string& key) const {
    std::ifstream in(file_for(key));
    if (!in) return std::nullopt;
    try {
      json j = json::parse(in);
      if (j.at("key").get<std::string>() != key) return std::nullopt;
      return std::make_pair(terms_from_json(j.at("terms")), j.value("path_count", std::uint64_t{0}));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void store(const std::string& key, const CorrelatorPolynomial& p, std::uint64_t path_count) const {
    std::filesystem::create_directories(dir_);
    auto target = file_for(key);
    auto tmp = target;
    tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
      std::ofstream out(tmp);
      out << json{{"key", key}, {"path_count", path_count}, {"terms", terms_to_json(p)}}.dump();
    }
    std::filesystem::rename(tmp, target);
  }

  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path file_for(const std::string& key) const {
    std::ostringstream name;
    name << std::hex << detail::fnv1a(key) << ".json";
    return dir_ / name.str();
  }
  std::filesystem::path dir_;
};

struct CorrelatorOptions {
  int cap = kDefaultEnumerationCap;
  int threads = 1;
  std::optional<std::filesystem::path> cache_dir;
};

enum class ConnectedRoute { paths, partitions, both };

struct CorrelatorStats {
  std::uint64_t path_count = 0;
  double wall_seconds = 0;
  bool from_cache = false;
};

/// Exact finite-n correlators from walk enumeration, memoized per sorted signature.
class CorrelatorEngine {
 public:
  explicit CorrelatorEngine(CorrelatorOptions options = {}) : options_(std::move(options)) {
    if (options_.cache_dir) cache_.emplace(*options_.cache_dir);
  }

  const CorrelatorOptions& options() const { return options_; }
  const CorrelatorStats& last_stats() const { return stats_; }

  /// <prod_i tr A^{k_i}> as an integer combination of N_s times moment monomials.
  CorrelatorPolynomial exact_moment(const TraceSignature& sig) {
    check(sig);
    return memoized("moment", sig.sorted(), [&](const TraceSignature& s, std::uint64_t& paths) {
      auto acc = detail::accumulate_paths<detail::MomentAccumulator>(
          s.powers, enumeration(), options_.threads, [] { return detail::MomentAccumulator{}; });
      paths = acc.paths;
      return detail::unpack_counts(acc.counts);
    });
  }

  /// Connected correlator (joint cumulant of the traces).
  CorrelatorPolynomial exact_connected(const TraceSignature& sig, ConnectedRoute route = ConnectedRoute::paths) {
    check(sig);
    if (sig.traces() == 1) return exact_moment(sig);
    switch (route) {
      case ConnectedRoute::paths:
        return connected_by_paths(sig);
      case ConnectedRoute::partitions:
        return connected_by_partitions(sig);
      case ConnectedRoute::both: {
        CorrelatorPolynomial a = connected_by_paths(sig);
        CorrelatorStats kept = stats_;
        CorrelatorPolynomial b = connected_by_partitions(sig);
        stats_ = kept;
        if (!(a == b))
          throw InconsistentRoutes("connected correlator for (" + sig.to_string() + ") differs between routes: " +
                                   a.to_text() + " vs " + b.to_text());
        return a;
      }
    }
    return {};
  }

  /// Direct sum over edge-connected paths of N_V times the cumulant of the walk products.
  CorrelatorPolynomial connected_by_paths(const TraceSignature& sig) {
    check(sig);
    if (sig.traces() == 1) return exact_moment(sig);
    // tr A vanishes identically (no diagonal), and a joint cumulant with a constant entry is zero.
    if (std::find(sig.powers.begin(), sig.powers.end(), 1) != sig.powers.end()) return {};
    if (sig.traces() > 8) throw Error("per-path cumulants support at most 8 traces");
    return memoized("connected", sig.sorted(), [&](const TraceSignature& s, std::uint64_t& paths) {
      const int r = s.traces();
      auto acc = detail::accumulate_paths<detail::ConnectedAccumulator>(
          s.powers, enumeration(), options_.threads, [r] { return detail::ConnectedAccumulator(r); });
      paths = acc.paths;
      return detail::unpack_counts(acc.counts);
    });
  }

  /// Moebius inversion over set partitions of the trace positions applied to exact moments.
  CorrelatorPolynomial connected_by_partitions(const TraceSignature& sig) {
    check(sig);
    auto start = std::chrono::steady_clock::now();
    CorrelatorPolynomial out;
    for (const auto& p : set_partitions(sig.traces())) {
      CorrelatorPolynomial product = CorrelatorPolynomial::constant(1);
      for (unsigned b : p.blocks) {
        product = product * exact_moment(sig.subset(b));
        if (product.is_zero()) break;
      }
      out += product * BigInt(p.mobius);
    }
    stats_ = {0, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), false};
    return out;
  }

  /// Rebuilds the moment as the sum over set partitions of products of connected parts.
  CorrelatorPolynomial moment_from_connected(const TraceSignature& sig) {
    CorrelatorPolynomial out;
    for (const auto& p : set_partitions(sig.traces())) {
      CorrelatorPolynomial product = CorrelatorPolynomial::constant(1);
      for (unsigned b : p.blocks) {
        product = product * exact_connected(sig.subset(b));
        if (product.is_zero()) break;
      }
      out += product;
    }
    return out;
  }

 private:
  EnumerationOptions enumeration() const {
    EnumerationOptions e;
    e.cap = options_.cap;
    e.even_only = true;
    return e;
  }

  void check(const TraceSignature& sig) const {
    if (sig.powers.empty()) throw Error("empty signature");
    for (int k : sig.powers)
      if (k < 1) throw Error("trace powers must be >= 1");
    if (sig.total() > options_.cap) throw DegreeTooLarge(sig.total(), options_.cap);
    if (sig.total() > kMaxPackedDegree) throw DegreeTooLarge(sig.total(), kMaxPackedDegree);
  }

  template <class Compute>
  CorrelatorPolynomial memoized(const std::string& kind, const TraceSignature& sorted, Compute compute) {
    const std::string key = kind + ":" + sorted.to_string() + ":cap" + std::to_string(options_.cap) + ":v" + kCodeVersion;
    {
      std::lock_guard lock(mutex_);
      if (auto it = memo_.find(key); it != memo_.end()) {
        stats_ = {it->second.second, 0.0, true};
        return it->second.first;
      }
    }
    if (cache_) {
      if (auto hit = cache_->load(key)) {
        std::lock_guard lock(mutex_);
        memo_[key] = *hit;
        stats_ = {hit->second, 0.0, true};
        return hit->first;
      }
    }
    auto start = std::chrono::steady_clock::now();
    std::uint64_t paths = 0;
    CorrelatorPolynomial p = compute(sorted, paths);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cache_) cache_->store(key, p, paths);
    std::lock_guard lock(mutex_);
    memo_[key] = {p, paths};
    stats_ = {paths, seconds, false};
    return p;
  }

  CorrelatorOptions options_;
  std::optional<CorrelatorCache> cache_;
  std::map<std::string, std::pair<CorrelatorPolynomial, std::uint64_t>> memo_;
  CorrelatorStats stats_;
  std::mutex mutex_;
};

inline CorrelatorPolynomial exact_moment(const TraceSignature& sig, CorrelatorOptions options = {}) {
  return CorrelatorEngine(std::move(options)).exact_moment(sig);
}

inline CorrelatorPolynomial exact_connected(const TraceSignature& sig, CorrelatorOptions options = {},
                                            ConnectedRoute route = ConnectedRoute::paths) {
  return CorrelatorEngine(std::move(options)).exact_connected(sig, route);
}

/// Value of the polynomial at the ensemble's n and moments. MissingMoment when a needed v_2j is absent.
inline Rational poly_evaluate(const CorrelatorPolynomial& p, const EnsembleSpec& e) {
  if (!e.n) throw Error("evaluation needs a numeric n");
  return p.evaluate(*e.n, [&](int j) { return e.moment(j); });
}

/// N_V times the joint cumulant of the walk products of a single path (unpruned, any path).
inline CorrelatorPolynomial path_cumulant(const Path& path) {
  const int r = static_cast<int>(path.trace_count());
  std::vector<std::map<Edge, int>> runs(r);
  for (int i = 0; i < r; ++i)
    for (auto [a, b] : path.walks()[i].steps()) ++runs[i][make_edge(a, b)];
  auto block_moment = [&](unsigned mask) -> std::optional<MomentMonomial> {
    std::map<Edge, int> total;
    for (int i = 0; i < r; ++i)
      if (mask & (1u << i))
        for (auto [e, h] : runs[i]) total[e] += h;
    MomentMonomial m;
    for (auto [e, h] : total) {
      if (h % 2) return std::nullopt;
      m.multiply_by(h / 2);
    }
    return m;
  };
  CorrelatorPolynomial out;
  const int vertices = path.vertex_count();
  for (const auto& p : set_partitions(r)) {
    MomentMonomial m;
    bool zero = false;
    for (unsigned b : p.blocks) {
      auto bm = block_moment(b);
      if (!bm) {
        zero = true;
        break;
      }
      m = m * *bm;
    }
    if (!zero) out.add_term(vertices, m, BigInt(p.mobius));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization and 1/n expansion

/// Expands n^{-r} ((n-1) v2)^{-k/2} * p in powers of 1/n up to `order`, writing v_{2j} = vt_{2j} v2^j.
inline StandardizedExpansion normalize_and_expand(const CorrelatorPolynomial& p, const TraceSignature& sig, int order) {
  StandardizedExpansion out(order);
  if (p.is_zero()) return out;
  const int k = sig.total();
  if (k % 2) throw Error("nonzero correlator with odd total degree " + std::to_string(k));
  const int half = k / 2;
  for (const auto& [key, c] : p.terms()) {
    if (key.monomial.degree() != half)
      throw Error("monomial " + key.monomial.to_string() + " does not have moment degree " + std::to_string(half));
    auto [lowest, coeffs] = falling_factorial_ratio_series(key.s, sig.traces(), half, order);
    MomentMonomial standardized = key.monomial.without(1);
    for (std::size_t i = 0; i < coeffs.size(); ++i) out.add(lowest + static_cast<int>(i), standardized, coeffs[i] * c);
  }
  return out;
}

/// F_j^{(2k)}: the terms of <tr A^{2k}> whose highest moment is v_{2j}.
inline CorrelatorPolynomial highest_moment_part(const CorrelatorPolynomial& moment, int j) {
  CorrelatorPolynomial out;
  for (const auto& [key, c] : moment.terms())
    if (key.monomial.highest_index() == j) out.add_term(key.s, key.monomial, c);
  return out;
}

/// g_j^{(2k)} = n^{j-2} F_j^{(2k)} / ((n-1)^k v2^k), expanded in 1/n; the power-0 part is its n -> oo limit.
inline StandardizedExpansion g_coefficient(CorrelatorEngine& engine, int k, int j, int order) {
  if (k < 1 || j < 1 || j > k) throw Error("g coefficient needs 1 <= j <= k");
  CorrelatorPolynomial f = highest_moment_part(engine.exact_moment(TraceSignature{2 * k}), j);
  StandardizedExpansion out(order);
  for (const auto& [key, c] : f.terms()) {
    auto [lowest, coeffs] = falling_factorial_ratio_series(key.s, 2 - j, k, order);
    MomentMonomial standardized = key.monomial.without(1);
    for (std::size_t i = 0; i < coeffs.size(); ++i) out.add(lowest + static_cast<int>(i), standardized, coeffs[i] * c);
  }
  return out;
}

/// g_j^{(2k)} at integer n, as a polynomial in the standardized moments.
inline StandardizedExpansion::Polynomial g_coefficient_at(CorrelatorEngine& engine, int k, int j, const BigInt& n) {
  if (n < 2) throw Error("g coefficient needs n >= 2");
  CorrelatorPolynomial f = highest_moment_part(engine.exact_moment(TraceSignature{2 * k}), j);
  Rational scale = 1;
  for (int i = 0; i < k; ++i) scale /= Rational(n - 1);
  if (j >= 2)
    for (int i = 0; i < j - 2; ++i) scale *= Rational(n);
  else
    scale /= Rational(n);
  StandardizedExpansion::Polynomial out;
  for (const auto& [key, c] : f.terms()) {
    Rational v = Rational(c * ff_evaluate(key.s, n)) * scale;
    if (v == 0) continue;
    out[key.monomial.without(1)] += v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Highest-moment leading terms and ensemble differences

/// 2^{r-1} sum_{j_1+..+j_r = j, j_i >= 1} prod_i C(k_i, k_i/2 - j_i) for all k_i even; 0 otherwise.
/// This is the coefficient of n^{2-r-j} vt_{2j} in the normalized connected correlator.
inline BigInt highest_moment_prediction(const TraceSignature& sig, int j) {
  if (!sig.all_even()) return 0;
  const int r = sig.traces();
  BigInt sum = 0;
  std::vector<int> parts(r, 1);
  std::function<void(int, int, BigInt)> rec = [&](int i, int left, BigInt product) {
    if (i == r - 1) {
      if (left >= 1) sum += product * binomial(sig.powers[i], sig.powers[i] / 2 - left);
      return;
    }
    for (int ji = 1; ji <= left - (r - 1 - i); ++ji)
      rec(i + 1, left - ji, product * binomial(sig.powers[i], sig.powers[i] / 2 - ji));
  };
  if (j >= r) rec(0, j, BigInt(1));
  BigInt pow2 = 1;
  for (int i = 1; i < r; ++i) pow2 *= 2;
  return pow2 * sum;
}

struct LeadingTermReport {
  TraceSignature signature;
  int j = 0;
  int n_power = 0;  // exponent of n (negative)
  Rational predicted;
  Rational observed;
  bool match = false;
};

struct DifferenceReport {
  TraceSignature signature;
  std::optional<int> j;                 // first moment index where the ensembles differ
  std::map<int, Rational> series;       // power of 1/n -> coefficient of the difference
  std::optional<BigInt> n;              // where the exact difference was evaluated
  std::optional<Rational> exact_value;  // difference of the normalized connected correlators at n
  std::optional<LeadingTermReport> leading;
};

namespace detail {

inline std::optional<int> first_differing_moment(const EnsembleSpec& a, const EnsembleSpec& b, int limit) {
  for (int m = 1; m <= limit; ++m) {
    Rational va, vb;
    try {
      va = a.moment(m);
      vb = b.moment(m);
    } catch (const MissingMoment&) {
      return std::nullopt;
    }
    if (va != vb) return m;
  }
  return std::nullopt;
}

}  // namespace detail

/// Normalized connected correlator of the first ensemble minus the second.
inline DifferenceReport ensemble_difference(CorrelatorEngine& engine, const TraceSignature& sig, const EnsembleSpec& e1,
                                            const EnsembleSpec& e2, std::optional<int> j = std::nullopt,
                                            std::optional<BigInt> n = std::nullopt) {
  e1.validate();
  e2.validate();
  DifferenceReport report;
  report.signature = sig;
  const int r = sig.traces();
  const int half = sig.total() / 2;
  if (j) {
    if (*j < 2) throw MomentOrderViolation("the differing moment index must be >= 2");
    for (int m = 1; m < *j; ++m)
      if (e1.moment(m) != e2.moment(m))
        throw MomentOrderViolation("ensembles differ at v" + std::to_string(2 * m) + ", below v" +
                                   std::to_string(2 * *j));
    if (e1.moment(*j) == e2.moment(*j))
      throw MomentOrderViolation("ensembles share v" + std::to_string(2 * *j));
  } else {
    j = detail::first_differing_moment(e1, e2, std::max(half, 1) + 1);
    if (j && *j == 1) throw MomentOrderViolation("ensembles must share v2");
  }
  report.j = j;

  CorrelatorPolynomial p = engine.exact_connected(sig);
  const int lead = j ? r + *j - 2 : 0;
  const int order = std::max(lead, 2 * r - 2) + 2;
  StandardizedExpansion expansion = normalize_and_expand(p, sig, order);
  auto s1 = expansion.evaluate([&](int m) { return e1.standardized(m); });
  auto s2 = expansion.evaluate([&](int m) { return e2.standardized(m); });
  for (auto& [pw, c] : s1) report.series[pw] += c;
  for (auto& [pw, c] : s2) report.series[pw] -= c;
  std::erase_if(report.series, [](const auto& kv) { return kv.second == 0; });

  if (!n) n = e1.n ? e1.n : e2.n;
  if (n) {
    report.n = n;
    if (*n < 2) throw Error("exact difference needs n >= 2");
    Rational den = 1;
    for (int i = 0; i < r; ++i) den *= Rational(*n);
    Rational base = Rational(*n - 1) * e1.variance();
    for (int i = 0; i < half; ++i) den *= base;
    Rational diff = p.evaluate(*n, [&](int m) { return e1.moment(m); }) - p.evaluate(*n, [&](int m) { return e2.moment(m); });
    report.exact_value = sig.total() % 2 ? Rational(0) : diff / den;
  }

  if (j) {
    LeadingTermReport lt;
    lt.signature = sig;
    lt.j = *j;
    lt.n_power = -lead;
    lt.predicted = Rational(highest_moment_prediction(sig, *j)) * (e1.standardized(*j) - e2.standardized(*j));
    auto it = report.series.find(lead);
    lt.observed = it == report.series.end() ? Rational(0) : it->second;
    lt.match = lt.predicted == lt.observed;
    report.leading = lt;
  }
  return report;
}

inline json report_to_json(const LeadingTermReport& r) {
  return {{"signature", r.signature.powers}, {"j", r.j},
          {"n_power", r.n_power},            {"predicted", to_string(r.predicted)},
          {"observed", to_string(r.observed)}, {"match", r.match}};
}

inline json report_to_json(const DifferenceReport& d) {
  json series = json::object();
  for (const auto& [p, c] : d.series) series[std::to_string(-p)] = to_string(c);
  json out = {{"signature", d.signature.powers}, {"series_by_n_power", series}};
  out["j"] = d.j ? json(*d.j) : json(nullptr);
  if (d.n) out["n"] = detail::integer_to_json(*d.n);
  if (d.exact_value) out["exact_difference"] = to_string(*d.exact_value);
  if (d.leading) out["leading"] = report_to_json(*d.leading);
  return out;
}

}  // namespace wigner
