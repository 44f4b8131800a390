#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "wigner/asymptotics.hpp"
#include "wigner/fixtures.hpp"
#include "wigner/json_io.hpp"
#include "wigner/montecarlo.hpp"

#ifndef WIGNER_FIXTURE_DIR
#define WIGNER_FIXTURE_DIR "fixtures/appendix_e"
#endif

namespace wigner::cli {

enum ExitCode { kOk = 0, kValidationFailure = 1, kUsageError = 2 };

struct UsageError : Error {
  using Error::Error;
};

struct GlobalOptions {
  std::string format = "text";
  int threads = 1;
  std::string cache_dir;
  int max_degree = kDefaultEnumerationCap;
  bool allow_large = false;
};

namespace detail {

inline CorrelatorOptions engine_options(const GlobalOptions& g) {
  if (g.max_degree > kDefaultEnumerationCap && !g.allow_large)
    throw UsageError("--max-degree above " + std::to_string(kDefaultEnumerationCap) +
                     " needs --allow-large to acknowledge the enumeration cost");
  CorrelatorOptions o;
  o.cap = g.max_degree;
  o.threads = g.threads;
  std::string dir = g.cache_dir;
  if (dir.empty())
    if (const char* env = std::getenv("WIGNER_CACHE_DIR")) dir = env;
  if (!dir.empty()) o.cache_dir = dir;
  return o;
}

inline std::string csv_quote(const std::string& s) { return '"' + s + '"'; }

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(15);
  os << v;
  return os.str();
}

inline std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError("not a number: '" + item + "'");
    }
  }
  return out;
}

/// "n <= total degree": the falling-factorial form still evaluates, but the walk count behind it
/// was argued only for n beyond the degree.
inline json evaluation_metadata(const TraceSignature& sig, const BigInt& n) {
  return {{"n", wigner::detail::integer_to_json(n)}, {"extrapolated per representation", n <= sig.total()}};
}

}  // namespace detail

/// Parses argv, dispatches to one operation, writes the report to `out` and diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Exact and asymptotic trace correlators of Wigner random matrices", "wigner"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  GlobalOptions g;
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"text", "json", "csv"}));
  app.add_option("--threads", g.threads, "Worker cap")->check(CLI::PositiveNumber);
  app.add_option("--cache-dir", g.cache_dir, "Disk cache for correlators (default: $WIGNER_CACHE_DIR)");
  app.add_option("--max-degree", g.max_degree, "Enumeration cap on the total degree");
  app.add_flag("--allow-large", g.allow_large, "Acknowledge enumeration beyond the default cap");

  // exact / connected -------------------------------------------------------
  std::string sig_text, ensemble_text, n_text, route_text = "paths";
  auto add_eval = [&](CLI::App* sub) {
    sub->add_option("--sig", sig_text, "Trace powers k1,k2,...")->required();
    sub->add_option("--ensemble", ensemble_text, "Preset (gaussian:2, custom:1,3,...) or JSON file");
    sub->add_option("--n", n_text, "Matrix order for a numeric value");
  };
  auto* exact = app.add_subcommand("exact", "Exact <prod tr A^k_i> as a polynomial in N_s and v_2j");
  add_eval(exact);
  auto* connected = app.add_subcommand("connected", "Exact connected correlator");
  add_eval(connected);
  connected->add_option("--route", route_text, "paths | partitions | both")
      ->check(CLI::IsMember({"paths", "partitions", "both"}));

  // expand ------------------------------------------------------------------
  int order = 4;
  auto* expand = app.add_subcommand("expand", "1/n expansion of the normalized connected correlator");
  expand->add_option("--sig", sig_text)->required();
  expand->add_option("--order", order, "Highest power of 1/n kept");

  // diff --------------------------------------------------------------------
  std::string other_text;
  std::optional<int> diff_j;
  auto* diff = app.add_subcommand("diff", "Difference of normalized connected correlators of two ensembles");
  diff->add_option("--sig", sig_text)->required();
  diff->add_option("--ensemble", ensemble_text)->required();
  diff->add_option("--against", other_text, "Second ensemble")->required();
  diff->add_option("--j", diff_j, "Index of the first differing moment v_2j");
  diff->add_option("--n", n_text);

  // series ------------------------------------------------------------------
  std::string kind = "catalan", v4t_text = "1", s2_text = "0";
  int s_power = 1, m_edge = 1, r_traces = 2, z_order = 4;
  auto* series = app.add_subcommand("series", "Generating-function series");
  series->add_option("--kind", kind, "catalan | tpow | special | phi | s2 | s3 | s4 | twopoint")
      ->check(CLI::IsMember({"catalan", "tpow", "special", "phi", "s2", "s3", "s4", "twopoint"}));
  series->add_option("--order", order);
  series->add_option("--s", s_power, "Power of T for tpow");
  series->add_option("--m", m_edge, "Special-edge half multiplicity");
  series->add_option("--r", r_traces, "Number of glued walks for phi");
  series->add_option("--z-order", z_order, "Order in z for phi");
  series->add_option("--v4t", v4t_text, "Standardized fourth moment v4/v2^2");
  series->add_option("--s2", s2_text, "Diagonal variance over v2");

  // rj ----------------------------------------------------------------------
  int rj_j = 1;
  std::optional<int> rj_k;
  std::string y_text;
  auto* rj = app.add_subcommand("rj", "R_j kernel: values at --y or the moment integral at --k");
  rj->add_option("--j", rj_j)->required();
  rj->add_option("--k", rj_k, "Moment y^{2k}");
  rj->add_option("--y", y_text, "Comma-separated points in (-2, 2)");

  // twopoint ----------------------------------------------------------------
  std::optional<int> m1, m2;
  std::optional<double> y1, y2;
  auto* twopoint = app.add_subcommand("twopoint", "Leading two-point coefficients or resolvent correlator");
  twopoint->add_option("--m1", m1);
  twopoint->add_option("--m2", m2);
  twopoint->add_option("--y1", y1);
  twopoint->add_option("--y2", y2);
  twopoint->add_option("--v4t", v4t_text);
  twopoint->add_option("--s2", s2_text);

  // mc ----------------------------------------------------------------------
  std::vector<std::string> mc_sigs;
  long long samples = 100000;
  std::uint64_t seed = 1;
  int batches = 20, mc_n = 12;
  bool raw = false;
  auto* mc = app.add_subcommand("mc", "Monte Carlo estimates scored against the exact polynomials");
  mc->add_option("--sig", mc_sigs, "Signature (repeatable)")->required();
  mc->add_option("--ensemble", ensemble_text);
  mc->add_option("--n", mc_n);
  mc->add_option("--samples", samples);
  mc->add_option("--seed", seed);
  mc->add_option("--batches", batches);
  mc->add_flag("--moment", raw, "Estimate the full moment instead of the connected part");

  // fixtures ----------------------------------------------------------------
  std::string suite = "appendix-e", fixture_dir = WIGNER_FIXTURE_DIR;
  auto* fixtures = app.add_subcommand("fixtures", "Recompute the golden correlator tables");
  fixtures->add_option("--suite", suite)->check(CLI::IsMember({"appendix-e"}));
  fixtures->add_option("--dir", fixture_dir, "Directory of *.txt tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  }

  const bool as_json = g.format == "json", as_csv = g.format == "csv";
  try {
    CorrelatorEngine engine(detail::engine_options(g));
    auto ensemble_or = [&](const EnsembleSpec& fallback) {
      return ensemble_text.empty() ? fallback : EnsembleSpec::resolve(ensemble_text);
    };

    if (exact->parsed() || connected->parsed()) {
      TraceSignature sig = TraceSignature::parse(sig_text);
      const bool is_moment = exact->parsed();
      ConnectedRoute route = route_text == "both"         ? ConnectedRoute::both
                             : route_text == "partitions" ? ConnectedRoute::partitions
                                                          : ConnectedRoute::paths;
      CorrelatorPolynomial p = is_moment ? engine.exact_moment(sig) : engine.exact_connected(sig, route);
      std::optional<Rational> value;
      std::optional<BigInt> n;
      if (!n_text.empty() || !ensemble_text.empty()) {
        EnsembleSpec e = ensemble_or(EnsembleSpec::rademacher());
        if (!n_text.empty()) e.n = BigInt(n_text);
        if (!e.n) throw UsageError("a numeric value needs --n (or an ensemble file with \"n\")");
        if (*e.n < 1) throw UsageError("--n must be >= 1");
        n = e.n;
        value = p.evaluate(*n, [&](int j) { return e.moment(j); });
      }
      if (as_json) {
        const auto& stats = engine.last_stats();
        json j = {{"signature", sig.powers},
                  {"representation", "exact"},
                  {"kind", is_moment ? "moment" : "connected"},
                  {"text", p.to_text()},
                  {"terms", terms_to_json(p)},
                  {"metadata",
                   {{"path_count", stats.path_count}, {"wall_time", stats.wall_seconds}, {"from_cache", stats.from_cache}}}};
        if (value) {
          j["value"] = to_string(*value);
          j["metadata"].update(detail::evaluation_metadata(sig, *n));
        }
        out << j.dump(2) << "\n";
      } else if (as_csv) {
        out << "s,monomial,coeff\n";
        for (const auto& [k, c] : p.terms()) out << k.s << ',' << k.monomial.to_string() << ',' << c << '\n';
      } else {
        out << p.to_text() << "\n";
        if (value) {
          out << "value at n=" << *n << ": " << to_string(*value);
          if (*n <= sig.total()) out << "  (extrapolated per representation)";
          out << "\n";
        }
      }
      return kOk;
    }

    if (expand->parsed()) {
      TraceSignature sig = TraceSignature::parse(sig_text);
      StandardizedExpansion e = normalize_and_expand(engine.exact_connected(sig), sig, order);
      if (as_json) {
        json j = expansion_to_json(e);
        j["signature"] = sig.powers;
        out << j.dump(2) << "\n";
      } else if (as_csv) {
        out << "inverse_n_power,monomial,coeff\n";
        for (const auto& [p, poly] : e.terms())
          for (const auto& [m, c] : poly) out << p << ',' << m.to_string("vt") << ',' << to_string(c) << '\n';
      } else {
        out << e.to_text() << "\n";
      }
      return kOk;
    }

    if (diff->parsed()) {
      TraceSignature sig = TraceSignature::parse(sig_text);
      EnsembleSpec a = EnsembleSpec::resolve(ensemble_text), b = EnsembleSpec::resolve(other_text);
      std::optional<BigInt> n;
      if (!n_text.empty()) n = BigInt(n_text);
      DifferenceReport d = ensemble_difference(engine, sig, a, b, diff_j, n);
      if (as_json) {
        out << report_to_json(d).dump(2) << "\n";
      } else if (as_csv) {
        out << "n_power,coeff\n";
        for (const auto& [p, c] : d.series) out << -p << ',' << to_string(c) << '\n';
      } else {
        if (d.series.empty()) out << "difference: 0\n";
        for (const auto& [p, c] : d.series) out << "n^-" << p << ": " << to_string(c) << "\n";
        if (d.exact_value) out << "exact difference at n=" << *d.n << ": " << to_string(*d.exact_value) << "\n";
        if (d.leading)
          out << "leading n^" << d.leading->n_power << ": predicted " << to_string(d.leading->predicted) << ", observed "
              << to_string(d.leading->observed) << (d.leading->match ? " (match)" : " (MISMATCH)") << "\n";
      }
      return d.leading && !d.leading->match ? kValidationFailure : kOk;
    }

    if (series->parsed()) {
      Rational v4t = parse_rational(v4t_text), s2 = parse_rational(s2_text);
      FormalSeries s;
      if (kind == "catalan") s = catalan_series(order);
      else if (kind == "tpow") s = t_power_series(s_power, order);
      else if (kind == "special") s = special_edge_series(m_edge, order);
      else if (kind == "phi") s = r_traces == 1 ? phi_series(order, z_order) : phi_r_series(r_traces, order, z_order);
      else if (kind == "s2") s = one_point_corrections(order, s2, v4t).s2;
      else if (kind == "s3") s = one_point_corrections(order, s2, v4t).s3;
      else if (kind == "s4") s = one_point_corrections(order, s2, v4t).s4;
      else s = two_point_series(order, s2).at(v4t);
      if (as_json) {
        out << series_to_json(s).dump(2) << "\n";
      } else if (as_csv) {
        for (const auto& v : s.variables()) out << v << ',';
        out << "coeff\n";
        for (const auto& [e, c] : s.coefficients()) {
          for (int x : e) out << x << ',';
          out << to_string(c) << '\n';
        }
      } else {
        out << s.to_text() << "\n";
      }
      return kOk;
    }

    if (rj->parsed()) {
      if (rj_k.has_value() == !y_text.empty()) throw UsageError("rj needs exactly one of --k or --y");
      if (rj_k) {
        double v = rj_moment(rj_j, *rj_k);
        if (as_json)
          out << json{{"j", rj_j}, {"k", *rj_k}, {"moment", v}, {"expected", binomial(2 * *rj_k, *rj_k - rj_j).str()}}.dump(2)
              << "\n";
        else if (as_csv)
          out << "j,k,moment\n" << rj_j << ',' << *rj_k << ',' << detail::format_double(v) << "\n";
        else
          out << detail::format_double(v) << "\n";
        return kOk;
      }
      auto ys = detail::parse_reals(y_text);
      json rows = json::array();
      if (as_csv) out << "y,R_" << rj_j << "\n";
      for (double y : ys) {
        double v = rj_eval(rj_j, y);
        if (as_json) rows.push_back({{"y", y}, {"value", v}});
        else if (as_csv) out << detail::format_double(y) << ',' << detail::format_double(v) << "\n";
        else out << "R_" << rj_j << "(" << detail::format_double(y) << ") = " << detail::format_double(v) << "\n";
      }
      if (as_json) out << json{{"j", rj_j}, {"points", rows}}.dump(2) << "\n";
      return kOk;
    }

    if (twopoint->parsed()) {
      const bool coeff_mode = m1 || m2, eval_mode = y1 || y2;
      if (coeff_mode == eval_mode || (coeff_mode && !(m1 && m2)) || (eval_mode && !(y1 && y2)))
        throw UsageError("twopoint needs either --m1 and --m2, or --y1 and --y2");
      if (coeff_mode) {
        if (*m1 < 1 || *m2 < 1) throw UsageError("--m1 and --m2 must be positive");
        BigInt closed = two_point_coefficient(*m1, *m2);
        TwoPointSeries c2 = two_point_series(std::max({*m1, *m2, 2}));
        Rational base = c2.base.coeff({*m1, *m2}), v4 = c2.v4_part.coeff({*m1, *m2});
        if (as_json)
          out << json{{"m1", *m1}, {"m2", *m2}, {"closed", closed.str()}, {"series_base", to_string(base)},
                      {"series_v4t", to_string(v4)}}
                     .dump(2)
              << "\n";
        else if (as_csv)
          out << "m1,m2,closed,series_base,series_v4t\n"
              << *m1 << ',' << *m2 << ',' << closed << ',' << to_string(base) << ',' << to_string(v4) << "\n";
        else
          out << "closed: " << closed << "\nseries: " << to_string(base) << " + " << to_string(v4) << "*vt4\n";
        return Rational(closed) == base ? kOk : kValidationFailure;
      }
      double v4t = to_double(parse_rational(v4t_text)), s2 = to_double(parse_rational(s2_text));
      double a = two_point_gc(*y1, *y2, v4t, s2), b = two_point_gc_kkp(*y1, *y2, v4t);
      if (as_json)
        out << json{{"y1", *y1}, {"y2", *y2}, {"gc", a}, {"gc_difference_quotient", b}}.dump(2) << "\n";
      else if (as_csv)
        out << "y1,y2,gc,gc_difference_quotient\n"
            << detail::format_double(*y1) << ',' << detail::format_double(*y2) << ',' << detail::format_double(a) << ','
            << detail::format_double(b) << "\n";
      else
        out << "n^2 G_c = " << detail::format_double(a) << "\ndifference-quotient form (s2 = 2 v2): "
            << detail::format_double(b) << "\n";
      return kOk;
    }

    if (mc->parsed()) {
      SamplerConfig cfg;
      cfg.n = mc_n;
      cfg.ensemble = ensemble_or(EnsembleSpec::rademacher());
      cfg.samples = samples;
      cfg.seed = seed;
      cfg.batch_count = batches;
      cfg.threads = g.threads;
      std::vector<TraceSignature> sigs;
      for (const auto& s : mc_sigs) sigs.push_back(TraceSignature::parse(s));
      auto rows = scorecard(engine, sigs, cfg, !raw);
      bool flagged = false;
      for (const auto& r : rows) flagged |= r.flagged;
      if (as_json) {
        json arr = json::array();
        for (const auto& r : rows) arr.push_back(report_to_json(r));
        out << json{{"seed", seed}, {"batches", batches}, {"rows", arr}}.dump(2) << "\n";
      } else if (as_csv) {
        out << scorecard_csv(rows);
      } else {
        for (const auto& r : rows) {
          out << (r.connected ? "connected " : "moment ") << r.signature.to_string() << ": " << detail::format_double(r.estimate)
              << " +- " << detail::format_double(r.standard_error);
          if (r.exact_value) out << "  exact " << to_string(*r.exact_value) << "  z " << detail::format_double(*r.z_score);
          if (r.flagged) out << "  FLAGGED";
          out << "\n";
        }
      }
      return flagged ? kValidationFailure : kOk;
    }

    if (fixtures->parsed()) {
      auto entries = load_fixture_suite(fixture_dir);
      bool all = true;
      json arr = json::array();
      if (as_csv) out << "result,kind,signature,paths,seconds\n";
      for (const auto& e : entries) {
        FixtureResult r = check_fixture(engine, e);
        all &= r.pass;
        if (as_json) {
          arr.push_back({{"kind", e.kind}, {"signature", e.signature.powers}, {"pass", r.pass}, {"source", e.source},
                         {"path_count", r.path_count}});
        } else if (as_csv) {
          out << (r.pass ? "PASS" : "FAIL") << ',' << e.kind << ',' << detail::csv_quote(e.signature.to_string()) << ','
              << r.path_count << ',' << r.seconds << "\n";
        } else {
          out << (r.pass ? "PASS " : "FAIL ") << e.kind << ' ' << e.signature.to_string() << "\n";
          if (!r.pass) out << "  expected: " << e.expected.to_text() << "\n  computed: " << r.computed.to_text() << "\n";
        }
      }
      if (as_json) out << json{{"suite", suite}, {"pass", all}, {"entries", arr}}.dump(2) << "\n";
      return all ? kOk : kValidationFailure;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DegreeTooLarge& e) {
    err << "usage error: " << e.what() << " (raise --max-degree with --allow-large)\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  }
  return kUsageError;
}

}  // namespace wigner::cli
