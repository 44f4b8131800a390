#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wigner/correlators.hpp"

namespace wigner {

/// One golden table line: `moment 4 = 2N3 v2^2 + N2 v4` or `connected 4,2 = ...`.
struct FixtureEntry {
  std::string kind;  // "moment" or "connected"
  TraceSignature signature;
  CorrelatorPolynomial expected;
  std::string source;  // file:line
};

struct FixtureResult {
  FixtureEntry entry;
  CorrelatorPolynomial computed;
  bool pass = false;
  std::uint64_t path_count = 0;
  double seconds = 0;
};

inline FixtureEntry parse_fixture_line(const std::string& line, const std::string& source = "") {
  auto eq = line.find(" = ");
  auto sp = line.find(' ');
  if (eq == std::string::npos || sp == std::string::npos || sp >= eq) throw ParseError("bad fixture line: " + line);
  FixtureEntry e;
  e.kind = line.substr(0, sp);
  if (e.kind != "moment" && e.kind != "connected") throw ParseError("unknown fixture kind '" + e.kind + "'");
  e.signature = TraceSignature::parse(line.substr(sp + 1, eq - sp - 1));
  e.expected = CorrelatorPolynomial::parse(line.substr(eq + 3));
  e.source = source;
  return e;
}

inline std::vector<FixtureEntry> load_fixture_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open fixture file '" + file.string() + "'");
  std::vector<FixtureEntry> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_fixture_line(line, file.filename().string() + ":" + std::to_string(number)));
  }
  return out;
}

/// All *.txt tables in a directory, in file-name order.
inline std::vector<FixtureEntry> load_fixture_suite(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("fixture directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> files;
  for (const auto& f : std::filesystem::directory_iterator(dir))
    if (f.path().extension() == ".txt") files.push_back(f.path());
  std::sort(files.begin(), files.end());
  std::vector<FixtureEntry> out;
  for (const auto& f : files) {
    auto part = load_fixture_file(f);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

/// Term-by-term comparison against freshly computed correlators.
inline FixtureResult check_fixture(CorrelatorEngine& engine, const FixtureEntry& e) {
  FixtureResult r;
  r.entry = e;
  auto t0 = std::chrono::steady_clock::now();
  r.computed = e.kind == "moment" ? engine.exact_moment(e.signature) : engine.exact_connected(e.signature);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.path_count = engine.last_stats().path_count;
  r.pass = r.computed == e.expected;
  return r;
}

}  // namespace wigner
