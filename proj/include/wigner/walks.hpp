#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wigner/errors.hpp"

namespace wigner {

inline constexpr int kDefaultEnumerationCap = 16;

/// Closed walk over reduced indices, stored as its vertex sequence v_0 .. v_k with v_k == v_0.
/// Step t is the oriented edge (v_t, v_{t+1}).
class Walk {
 public:
  Walk() = default;
  explicit Walk(std::vector<int> vertices) : vertices_(std::move(vertices)) {}

  /// Builds a walk from oriented steps; consecutive steps must chain.
  static Walk from_steps(const std::vector<std::pair<int, int>>& steps) {
    std::vector<int> v;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      if (t == 0) v.push_back(steps[t].first);
      else if (steps[t].first != v.back()) throw Error("steps are not consecutive");
      v.push_back(steps[t].second);
    }
    return Walk(std::move(v));
  }

  const std::vector<int>& vertices() const { return vertices_; }
  int length() const { return vertices_.empty() ? 0 : static_cast<int>(vertices_.size()) - 1; }
  int start() const { return vertices_.front(); }

  std::vector<std::pair<int, int>> steps() const {
    std::vector<std::pair<int, int>> out;
    for (std::size_t t = 0; t + 1 < vertices_.size(); ++t) out.emplace_back(vertices_[t], vertices_[t + 1]);
    return out;
  }

  bool closed() const { return !vertices_.empty() && vertices_.front() == vertices_.back(); }

  /// "e01 e12 e21 e10"; indices above 9 are written as e{10,11}.
  std::string to_string() const {
    std::string out;
    for (auto [a, b] : steps()) {
      if (!out.empty()) out += ' ';
      if (a < 10 && b < 10) out += "e" + std::to_string(a) + std::to_string(b);
      else out += "e{" + std::to_string(a) + "," + std::to_string(b) + "}";
    }
    return out;
  }

  static Walk parse(const std::string& text) {
    std::istringstream is(text);
    std::string token;
    std::vector<std::pair<int, int>> steps;
    while (is >> token) {
      if (token.size() < 3 || token[0] != 'e') throw ParseError("bad step '" + token + "'");
      if (token[1] == '{') {
        auto comma = token.find(',');
        auto close = token.find('}');
        if (comma == std::string::npos || close == std::string::npos) throw ParseError("bad step '" + token + "'");
        steps.emplace_back(std::stoi(token.substr(2, comma - 2)), std::stoi(token.substr(comma + 1, close - comma - 1)));
      } else {
        if (token.size() != 3 || !std::isdigit(static_cast<unsigned char>(token[1])) ||
            !std::isdigit(static_cast<unsigned char>(token[2])))
          throw ParseError("bad step '" + token + "'");
        steps.emplace_back(token[1] - '0', token[2] - '0');
      }
    }
    if (steps.empty()) throw ParseError("empty walk");
    for (std::size_t t = 1; t < steps.size(); ++t)
      if (steps[t].first != steps[t - 1].second) throw ParseError("steps are not consecutive in '" + text + "'");
    return from_steps(steps);
  }

  friend bool operator==(const Walk&, const Walk&) = default;
  friend auto operator<=>(const Walk&, const Walk&) = default;

 private:
  std::vector<int> vertices_;
};

/// r walks sharing one reduced-index space; trace positions are meaningful.
class Path {
 public:
  Path() = default;
  explicit Path(std::vector<Walk> walks) : walks_(std::move(walks)) {}

  const std::vector<Walk>& walks() const { return walks_; }
  std::size_t trace_count() const { return walks_.size(); }

  std::vector<int> lengths() const {
    std::vector<int> out;
    for (const auto& w : walks_) out.push_back(w.length());
    return out;
  }

  int total_steps() const {
    int k = 0;
    for (const auto& w : walks_) k += w.length();
    return k;
  }

  int vertex_count() const {
    int top = -1;
    for (const auto& w : walks_)
      for (int v : w.vertices()) top = std::max(top, v);
    return top + 1;
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < walks_.size(); ++i) {
      if (i) out += "; ";
      out += walks_[i].to_string();
    }
    return out;
  }

  static Path parse(const std::string& text) {
    std::vector<Walk> walks;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto semi = text.find(';', pos);
      std::string part = text.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos);
      walks.push_back(Walk::parse(part));
      if (semi == std::string::npos) break;
      pos = semi + 1;
    }
    return Path(std::move(walks));
  }

  /// True when the walks are closed, chained, free of self-steps and labelled by first appearance.
  bool is_canonical() const {
    int top = -1;
    for (const auto& w : walks_) {
      if (w.length() < 1 || !w.closed()) return false;
      for (std::size_t t = 0; t < w.vertices().size(); ++t) {
        int v = w.vertices()[t];
        if (v > top + 1 || v < 0) return false;
        top = std::max(top, v);
        if (t > 0 && v == w.vertices()[t - 1]) return false;
      }
    }
    return !walks_.empty() && walks_.front().start() == 0;
  }

  /// Relabels vertices by order of first appearance.
  Path canonicalized() const {
    std::map<int, int> relabel;
    std::vector<Walk> out;
    for (const auto& w : walks_) {
      std::vector<int> v;
      for (int x : w.vertices()) {
        auto [it, inserted] = relabel.try_emplace(x, static_cast<int>(relabel.size()));
        v.push_back(it->second);
      }
      out.emplace_back(std::move(v));
    }
    return Path(std::move(out));
  }

  friend bool operator==(const Path&, const Path&) = default;
  friend auto operator<=>(const Path&, const Path&) = default;

 private:
  std::vector<Walk> walks_;
};

using Edge = std::pair<int, int>;  // unordered, stored with first < second

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// Bookkeeping of the graph a path runs on.
struct PathProfile {
  int vertices = 0;
  int edges = 0;
  int loops = 0;       // cycle rank E - V + components
  int components = 0;  // connected components of the union graph
  std::map<Edge, int> edge_multiplicities;
  std::map<int, int> runs;  // h -> number of edges run h times
};

inline PathProfile profile(const Path& p) {
  PathProfile out;
  out.vertices = p.vertex_count();
  for (const auto& w : p.walks())
    for (auto [a, b] : w.steps()) ++out.edge_multiplicities[make_edge(a, b)];
  out.edges = static_cast<int>(out.edge_multiplicities.size());
  for (const auto& [e, h] : out.edge_multiplicities) ++out.runs[h];

  std::vector<int> parent(out.vertices);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  int components = out.vertices;
  for (const auto& [e, h] : out.edge_multiplicities) {
    int a = find(e.first), b = find(e.second);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  out.components = components;
  out.loops = out.edges - out.vertices + out.components;
  return out;
}

inline PathProfile profile(const Walk& w) { return profile(Path({w})); }

/// Finest partition of trace positions (0-based) such that walks in different blocks share no edge.
/// Shared vertices alone do not connect walks. Blocks are ordered by their smallest member.
inline std::vector<std::vector<int>> edge_connected_components(const Path& p) {
  const int r = static_cast<int>(p.trace_count());
  std::vector<int> parent(r);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  std::map<Edge, int> first_owner;
  for (int i = 0; i < r; ++i) {
    for (auto [a, b] : p.walks()[i].steps()) {
      auto [it, inserted] = first_owner.try_emplace(make_edge(a, b), i);
      if (!inserted) {
        int x = find(it->second), y = find(i);
        if (x != y) parent[std::max(x, y)] = std::min(x, y);
      }
    }
  }
  std::map<int, std::vector<int>> blocks;
  for (int i = 0; i < r; ++i) blocks[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : blocks) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration

struct EnumerationOptions {
  int cap = kDefaultEnumerationCap;
  // Skip branches that cannot end with every edge run an even number of times.
  // Such paths vanish for a symmetric entry law; the unpruned stream is model independent.
  bool even_only = false;
};

/// Live view of the enumerator at the moment a complete path is reached.
class PathCursor {
 public:
  const std::vector<std::vector<int>>& walks() const { return walks_; }
  int vertex_count() const { return max_label_ + 1; }
  /// Edge ids with a nonzero run count; id = a * stride + b for a < b.
  const std::vector<int>& active_edges() const { return active_; }
  int run_count(int edge_id) const { return counts_[edge_id]; }
  int stride() const { return stride_; }
  int edge_id(int a, int b) const { return a < b ? a * stride_ + b : b * stride_ + a; }

  Path to_path() const {
    std::vector<Walk> w;
    for (const auto& v : walks_) w.emplace_back(v);
    return Path(std::move(w));
  }

 private:
  template <class Visitor>
  friend class PathEnumerator;

  std::vector<std::vector<int>> walks_;
  std::vector<int> counts_;
  std::vector<int> active_;
  int max_label_ = 0;
  int odd_edges_ = 0;
  int stride_ = 0;
};

/// Depth-first generator of every path for trace lengths (k_1..k_r). Children are visited in a fixed
/// order: existing indices ascending, then the new index (one above the current maximum).
template <class Visitor>
class PathEnumerator {
 public:
  PathEnumerator(std::vector<int> lengths, EnumerationOptions options, Visitor& visit)
      : lengths_(std::move(lengths)), options_(options), visit_(visit) {
    if (lengths_.empty()) throw Error("at least one trace is required");
    total_ = 0;
    for (int k : lengths_) {
      if (k < 1) throw Error("trace lengths must be >= 1");
      total_ += k;
    }
    if (total_ > options_.cap) throw DegreeTooLarge(total_, options_.cap);
    cur_.stride_ = total_ + 1;
    cur_.counts_.assign(cur_.stride_ * cur_.stride_, 0);
    cur_.walks_.assign(lengths_.size(), {});
  }

  void run() {
    cur_.walks_[0] = {0};
    cur_.max_label_ = 0;
    remaining_ = total_;
    step(0, 0);
  }

  /// Replays a canonical prefix (complete earlier walks plus a partial current walk) and
  /// explores only its subtree. Used to split work across threads.
  void run_from(const std::vector<std::vector<int>>& prefix) {
    cur_.walks_.assign(lengths_.size(), {});
    std::fill(cur_.counts_.begin(), cur_.counts_.end(), 0);
    cur_.active_.clear();
    cur_.odd_edges_ = 0;
    cur_.max_label_ = 0;
    remaining_ = total_;
    for (std::size_t t = 0; t < prefix.size(); ++t) {
      cur_.walks_[t] = {prefix[t].front()};
      cur_.max_label_ = std::max(cur_.max_label_, prefix[t].front());
      for (std::size_t i = 1; i < prefix[t].size(); ++i) push_vertex(static_cast<int>(t), prefix[t][i]);
    }
    int trace = static_cast<int>(prefix.size()) - 1;
    step(trace, static_cast<int>(cur_.walks_[trace].size()) - 1);
  }

 private:
  void push_vertex(int trace, int w) {
    auto& walk = cur_.walks_[trace];
    int id = cur_.edge_id(walk.back(), w);
    int& c = cur_.counts_[id];
    if (c == 0) cur_.active_.push_back(id);
    ++c;
    cur_.odd_edges_ += (c & 1) ? 1 : -1;
    cur_.max_label_ = std::max(cur_.max_label_, w);
    walk.push_back(w);
    --remaining_;
  }

  void pop_vertex(int trace, int previous_max) {
    auto& walk = cur_.walks_[trace];
    int w = walk.back();
    walk.pop_back();
    int id = cur_.edge_id(walk.back(), w);
    int& c = cur_.counts_[id];
    cur_.odd_edges_ += (c & 1) ? -1 : 1;
    --c;
    if (c == 0) cur_.active_.pop_back();
    cur_.max_label_ = previous_max;
    ++remaining_;
  }

  bool viable() const { return !options_.even_only || cur_.odd_edges_ <= remaining_; }

  void step(int trace, int position) {
    const int k = lengths_[trace];
    if (position == k) {
      if (trace + 1 == static_cast<int>(lengths_.size())) {
        visit_(static_cast<const PathCursor&>(cur_));
        return;
      }
      const int previous_max = cur_.max_label_;
      for (int start = 0; start <= previous_max + 1; ++start) {
        cur_.walks_[trace + 1] = {start};
        cur_.max_label_ = std::max(previous_max, start);
        step(trace + 1, 0);
        cur_.max_label_ = previous_max;
      }
      cur_.walks_[trace + 1].clear();
      return;
    }
    const auto& walk = cur_.walks_[trace];
    const int here = walk.back();
    const int origin = walk.front();
    const int previous_max = cur_.max_label_;
    if (position == k - 1) {
      if (origin == here) return;
      push_vertex(trace, origin);
      if (viable()) step(trace, position + 1);
      pop_vertex(trace, previous_max);
      return;
    }
    for (int w = 0; w <= previous_max + 1; ++w) {
      if (w == here) continue;
      push_vertex(trace, w);
      if (viable()) step(trace, position + 1);
      pop_vertex(trace, previous_max);
    }
  }

  std::vector<int> lengths_;
  EnumerationOptions options_;
  Visitor& visit_;
  PathCursor cur_;
  int total_ = 0;
  int remaining_ = 0;
};

/// Calls visit(const PathCursor&) for every path with the given trace lengths.
template <class Visitor>
void for_each_path(const std::vector<int>& lengths, EnumerationOptions options, Visitor&& visit) {
  PathEnumerator<std::remove_reference_t<Visitor>> e(lengths, options, visit);
  e.run();
}

/// Partial first walks of `depth` steps (restricted growth, no self-steps); the subtrees below them
/// partition the search, so they can be consumed by independent workers.
inline std::vector<std::vector<std::vector<int>>> enumeration_prefixes(const std::vector<int>& lengths, int depth) {
  std::vector<std::vector<std::vector<int>>> out;
  depth = std::clamp(depth, 0, lengths.front() - 1);
  std::vector<int> seq{0};
  std::function<void(int)> rec = [&](int max_label) {
    if (static_cast<int>(seq.size()) - 1 == depth) {
      out.push_back({seq});
      return;
    }
    for (int w = 0; w <= max_label + 1; ++w) {
      if (w == seq.back()) continue;
      seq.push_back(w);
      rec(std::max(max_label, w));
      seq.pop_back();
    }
  };
  rec(0);
  return out;
}

/// Materializes every path; guarded against runaway memory by `max_paths`.
inline std::vector<Path> enumerate_multi(const std::vector<int>& lengths, EnumerationOptions options = {},
                                         std::size_t max_paths = 20'000'000) {
  std::vector<Path> out;
  for_each_path(lengths, options, [&](const PathCursor& c) {
    if (out.size() >= max_paths)
      throw Error("path enumeration exceeded the memory guard of " + std::to_string(max_paths) + " paths");
    out.push_back(c.to_path());
  });
  return out;
}

inline std::vector<Walk> enumerate_single(int k, EnumerationOptions options = {}) {
  std::vector<Walk> out;
  for (auto& p : enumerate_multi({k}, options)) out.push_back(p.walks().front());
  return out;
}

}  // namespace wigner
