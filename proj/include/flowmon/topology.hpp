#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "flowmon/core.hpp"
#include "flowmon/rng.hpp"

namespace flowmon {

/// Undirected, connected switch graph. Switch ids are 0..switch_count()-1.
/// Construction validates the edge list and rejects disconnected graphs,
/// so holding a Topology means holding a usable one.
class Topology {
public:
  Topology(int switch_count, std::vector<std::pair<int, int>> edge_list)
      : n_(switch_count) {
    if (n_ < 1) throw Error("topology: switch count must be >= 1");
    adj_.resize(static_cast<std::size_t>(n_));
    for (auto& [u, v] : edge_list) {
      if (u > v) std::swap(u, v);
      if (u < 0 || v >= n_) throw Error("topology: edge endpoint out of range");
      if (u == v) throw Error("topology: self-loop on switch " + std::to_string(u));
    }
    std::sort(edge_list.begin(), edge_list.end());
    if (std::adjacent_find(edge_list.begin(), edge_list.end()) != edge_list.end())
      throw Error("topology: duplicate edge");
    edges_ = std::move(edge_list);
    for (const auto& [u, v] : edges_) {
      adj_[static_cast<std::size_t>(u)].push_back(v);
      adj_[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());
    if (!connected()) throw Error("topology: graph is not connected");
  }

  int switch_count() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  const std::vector<int>& neighbors(int v) const {
    check_switch(v);
    return adj_[static_cast<std::size_t>(v)];
  }

  bool has_edge(int u, int v) const {
    check_switch(u);
    check_switch(v);
    const auto& nbrs = adj_[static_cast<std::size_t>(u)];
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
  }

  void check_switch(int v) const {
    if (v < 0 || v >= n_)
      throw Error("topology: switch id " + std::to_string(v) + " out of range");
  }

private:
  bool connected() const {
    if (n_ <= 1) return true;
    std::vector<char> seen(static_cast<std::size_t>(n_), 0);
    std::queue<int> work;
    work.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!work.empty()) {
      const int u = work.front();
      work.pop();
      for (int w : adj_[static_cast<std::size_t>(u)]) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          ++reached;
          work.push(w);
        }
      }
    }
    return reached == n_;
  }

  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adj_;
};

namespace detail {

inline bool edges_connected(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [u, v] : edges) {
    adj[static_cast<std::size_t>(u)].push_back(v);
    adj[static_cast<std::size_t>(v)].push_back(u);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<int> work;
  work.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!work.empty()) {
    const int u = work.front();
    work.pop();
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++reached;
        work.push(w);
      }
    }
  }
  return reached == n;
}

}  // namespace detail

/// G(n, p) random graph. Pairs are flipped in a fixed (i, j) order so a seed
/// pins the exact graph. Disconnected draws are retried with a seed derived
/// from (seed, attempt); after 100 attempts we give up rather than loop forever.
inline Topology gen_erdos_renyi(int n, double p, std::uint64_t seed) {
  if (n < 2) throw Error("gen_erdos_renyi: need at least 2 switches");
  if (!(p > 0.0) || p > 1.0) throw Error("gen_erdos_renyi: p must be in (0, 1]");
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng_unit(rng) < p) edges.emplace_back(i, j);
    if (detail::edges_connected(n, edges)) return Topology(n, std::move(edges));
  }
  throw Error("gen_erdos_renyi: no connected graph after 100 attempts (p too small?)");
}

/// Waxman random graph: switches get positions in the unit square and each
/// pair is linked with probability alpha * exp(-d / (beta * d_max)). A
/// disconnected draw is not retried; instead the closest pair of switches
/// spanning two components is linked until one component remains, which keeps
/// the result deterministic for a given seed.
inline Topology gen_waxman(int n, double alpha, double beta, std::uint64_t seed) {
  if (n < 2) throw Error("gen_waxman: need at least 2 switches");
  if (!(alpha > 0.0) || alpha > 1.0) throw Error("gen_waxman: alpha must be in (0, 1]");
  if (!(beta > 0.0) || beta > 1.0) throw Error("gen_waxman: beta must be in (0, 1]");

  Rng rng(derive_seed(seed, 0));
  std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] = rng_unit(rng);
    y[static_cast<std::size_t>(i)] = rng_unit(rng);
  }
  auto dist = [&](int a, int b) {
    const double dx = x[static_cast<std::size_t>(a)] - x[static_cast<std::size_t>(b)];
    const double dy = y[static_cast<std::size_t>(a)] - y[static_cast<std::size_t>(b)];
    return std::sqrt(dx * dx + dy * dy);
  };

  double d_max = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d_max = std::max(d_max, dist(i, j));
  if (d_max <= 0.0) d_max = 1.0;  // all points coincide; degenerate but legal

  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng_unit(rng) < alpha * std::exp(-dist(i, j) / (beta * d_max)))
        edges.emplace_back(i, j);

  // Union-find over components, then stitch with minimum-distance cross links.
  std::vector<int> parent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (const auto& [u, v] : edges) parent[static_cast<std::size_t>(find(u))] = find(v);

  for (;;) {
    int best_u = -1, best_v = -1;
    double best_d = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (find(i) == find(j)) continue;
        const double d = dist(i, j);
        if (best_u < 0 || d < best_d) {  // ties resolved by the (i, j) scan order
          best_u = i;
          best_v = j;
          best_d = d;
        }
      }
    if (best_u < 0) break;
    edges.emplace_back(best_u, best_v);
    parent[static_cast<std::size_t>(find(best_u))] = find(best_v);
  }
  return Topology(n, std::move(edges));
}

/// Parses the plain edge-list format:
///   n=<switch count>
///   u v        (one edge per line)
/// '#' starts a comment; blank lines are skipped. Errors carry line numbers.
inline Topology load_topology(std::istream& in) {
  std::string line;
  int line_no = 0;
  int n = -1;
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    if (n < 0) {
      std::string head;
      if (!(fields >> head)) continue;  // leading blank/comment lines
      std::string trailing;
      if (head.rfind("n=", 0) != 0 || fields >> trailing)
        throw Error("edge list line " + std::to_string(line_no) + ": expected 'n=<count>'");
      try {
        n = std::stoi(head.substr(2));
      } catch (const std::exception&) {
        throw Error("edge list line " + std::to_string(line_no) + ": bad switch count");
      }
      if (n < 1)
        throw Error("edge list line " + std::to_string(line_no) + ": switch count must be >= 1");
      continue;
    }
    int u = 0, v = 0;
    if (!(fields >> u)) continue;  // blank or comment-only line
    std::string trailing;
    if (!(fields >> v) || fields >> trailing)
      throw Error("edge list line " + std::to_string(line_no) + ": expected 'u v'");
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw Error("edge list line " + std::to_string(line_no) + ": switch id out of range");
    if (u == v)
      throw Error("edge list line " + std::to_string(line_no) + ": self-loop");
    edges.emplace_back(u, v);
  }
  if (n < 0) throw Error("edge list: missing 'n=<count>' header");
  auto canon = edges;
  for (auto& [u, v] : canon)
    if (u > v) std::swap(u, v);
  std::sort(canon.begin(), canon.end());
  if (std::adjacent_find(canon.begin(), canon.end()) != canon.end())
    throw Error("edge list: duplicate edge");
  if (!detail::edges_connected(n, edges))
    throw Error("edge list: graph is not connected");
  return Topology(n, std::move(edges));
}

inline Topology load_topology(const std::string& text) {
  std::istringstream in(text);
  return load_topology(in);
}

/// Writes a topology back out in the edge-list format load_topology reads.
inline std::string to_edge_list(const Topology& t) {
  std::ostringstream out;
  out << "n=" << t.switch_count() << "\n";
  for (const auto& [u, v] : t.edges()) out << u << " " << v << "\n";
  return out.str();
}

/// BFS shortest path from src to dst, inclusive of both endpoints.
/// Among equal-length paths the result is the one found by expanding
/// neighbors in ascending id order, so it is unique and deterministic.
inline std::vector<int> shortest_path(const Topology& t, int src, int dst) {
  t.check_switch(src);
  t.check_switch(dst);
  if (src == dst) return {src};
  std::vector<int> parent(static_cast<std::size_t>(t.switch_count()), -1);
  std::queue<int> work;
  parent[static_cast<std::size_t>(src)] = src;
  work.push(src);
  while (!work.empty()) {
    const int u = work.front();
    work.pop();
    for (int w : t.neighbors(u)) {
      if (parent[static_cast<std::size_t>(w)] >= 0) continue;
      parent[static_cast<std::size_t>(w)] = u;
      if (w == dst) {
        std::vector<int> path{dst};
        for (int at = dst; at != src; at = parent[static_cast<std::size_t>(at)])
          path.push_back(parent[static_cast<std::size_t>(at)]);
        std::reverse(path.begin(), path.end());
        return path;
      }
      work.push(w);
    }
  }
  throw Error("shortest_path: no path (topology should be connected)");
}

/// Control-channel hop counts from an attachment switch: the attachment
/// switch itself costs one hop and each link after that adds one, i.e.
/// hops(v) = bfs_distance(attach, v) + 1.
inline std::vector<int> hop_counts(const Topology& t, int attach) {
  t.check_switch(attach);
  std::vector<int> dist(static_cast<std::size_t>(t.switch_count()), -1);
  std::queue<int> work;
  dist[static_cast<std::size_t>(attach)] = 0;
  work.push(attach);
  while (!work.empty()) {
    const int u = work.front();
    work.pop();
    for (int w : t.neighbors(u)) {
      if (dist[static_cast<std::size_t>(w)] >= 0) continue;
      dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
      work.push(w);
    }
  }
  std::vector<int> hops(static_cast<std::size_t>(t.switch_count()));
  for (std::size_t v = 0; v < hops.size(); ++v) hops[v] = dist[v] + 1;
  return hops;
}

}  // namespace flowmon
