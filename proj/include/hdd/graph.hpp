#pragma once

#include <cstdint>
#include <fstream>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hdd/errors.hpp"

namespace hdd {

struct WeightedGraph {
  struct Edge {
    int u = 0;
    int v = 0;
    double w = 1.0;
  };

  int n_nodes = 0;
  std::vector<Edge> edges;
  std::vector<std::string> node_names;  // empty when nodes are anonymous

  std::string name_of(int i) const {
    if (i >= 0 && i < static_cast<int>(node_names.size())) return node_names[i];
    return std::to_string(i);
  }
};

inline void validate_graph(const WeightedGraph& g) {
  if (g.n_nodes <= 0) throw DataError("graph has no nodes");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(g.edges.size() * 2);
  for (const auto& e : g.edges) {
    if (e.u < 0 || e.u >= g.n_nodes || e.v < 0 || e.v >= g.n_nodes)
      throw DataError("edge index out of range: " + std::to_string(e.u) + " " +
                      std::to_string(e.v));
    if (e.u == e.v)
      throw DataError("self-loop on node " + g.name_of(e.u));
    if (!(e.w > 0.0))
      throw DataError("non-positive weight on edge " + g.name_of(e.u) + " " +
                      g.name_of(e.v));
    std::uint64_t lo = static_cast<std::uint32_t>(std::min(e.u, e.v));
    std::uint64_t hi = static_cast<std::uint32_t>(std::max(e.u, e.v));
    if (!seen.insert((hi << 32) | lo).second)
      throw DataError("duplicate edge " + g.name_of(e.u) + " " + g.name_of(e.v));
  }
}

inline std::vector<std::vector<std::pair<int, double>>> adjacency_list(
    const WeightedGraph& g) {
  std::vector<std::vector<std::pair<int, double>>> adj(g.n_nodes);
  for (const auto& e : g.edges) {
    adj[e.u].emplace_back(e.v, e.w);
    adj[e.v].emplace_back(e.u, e.w);
  }
  return adj;
}

// Throws DataError naming one node from each side of the cut when the graph
// is disconnected.
inline void require_connected(const WeightedGraph& g) {
  if (g.n_nodes == 0) throw DataError("graph has no nodes");
  auto adj = adjacency_list(g);
  std::vector<char> visited(g.n_nodes, 0);
  std::queue<int> q;
  q.push(0);
  visited[0] = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (auto [v, w] : adj[u]) {
      if (!visited[v]) {
        visited[v] = 1;
        q.push(v);
      }
    }
  }
  for (int i = 0; i < g.n_nodes; ++i) {
    if (!visited[i])
      throw DataError("graph is disconnected: no path between nodes " +
                      g.name_of(0) + " and " + g.name_of(i));
  }
}

// Edge-list text format: UTF-8, '#' comment lines, whitespace-separated
// "u v" or "u v w" tokens. Node tokens are arbitrary strings mapped to dense
// indices in first-seen order. With weighted=false any weight column is
// ignored and all weights are 1.
inline WeightedGraph read_edge_list(const std::string& path, bool weighted = true) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list: " + path);
  WeightedGraph g;
  std::unordered_map<std::string, int> index;
  auto intern = [&](const std::string& tok) {
    auto it = index.find(tok);
    if (it != index.end()) return it->second;
    int id = g.n_nodes++;
    index.emplace(tok, id);
    g.node_names.push_back(tok);
    return id;
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    size_t first = sv.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || sv[first] == '#') continue;
    std::istringstream ls(line);
    std::string a, b, c, extra;
    ls >> a >> b;
    if (a.empty() || b.empty())
      throw DataError("malformed edge at line " + std::to_string(lineno) +
                      ": expected 'u v' or 'u v w'");
    double w = 1.0;
    if (ls >> c) {
      if (ls >> extra)
        throw DataError("malformed edge at line " + std::to_string(lineno) +
                        ": too many tokens");
      if (weighted) {
        size_t pos = 0;
        try {
          w = std::stod(c, &pos);
        } catch (const std::exception&) {
          pos = 0;
        }
        if (pos != c.size())
          throw DataError("malformed weight '" + c + "' at line " +
                          std::to_string(lineno));
      }
    }
    int u = intern(a);
    int v = intern(b);
    if (u == v)
      throw DataError("self-loop '" + a + "' at line " + std::to_string(lineno));
    if (!(w > 0.0))
      throw DataError("non-positive weight at line " + std::to_string(lineno));
    g.edges.push_back({u, v, w});
  }
  if (g.n_nodes == 0) throw DataError("edge list is empty: " + path);
  validate_graph(g);
  return g;
}

inline void write_edge_list(const std::string& path, const WeightedGraph& g) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write edge list: " + path);
  char buf[64];
  for (const auto& e : g.edges) {
    out << g.name_of(e.u) << ' ' << g.name_of(e.v);
    if (e.w != 1.0) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.w);
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace hdd
