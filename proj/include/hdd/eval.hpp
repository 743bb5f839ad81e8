#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "hdd/distance_matrix.hpp"
#include "hdd/errors.hpp"
#include "hdd/graph.hpp"
#include "hdd/ingest.hpp"

namespace hdd {

struct EvalReport {
  double map_score = 0.0;
  double avg_distortion = 0.0;
  bool has_gromov_delta = false;
  double gromov_delta = 0.0;
  bool has_accuracy = false;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  std::vector<std::pair<std::string, std::string>> parameters;
};

struct SplitSpec {
  double train_fraction = 0.8;
  int repetitions = 10;
  std::uint32_t seed = 1234;
};

inline DistanceMatrix shortest_paths(const WeightedGraph& g) {
  validate_graph(g);
  require_connected(g);
  int n = g.n_nodes;
  auto adj = adjacency_list(g);
  bool uniform = true;
  for (const auto& e : g.edges)
    if (e.w != g.edges.front().w) {
      uniform = false;
      break;
    }
  Eigen::MatrixXd d(n, n);
  if (uniform && !g.edges.empty()) {
    double w = g.edges.front().w;
    std::vector<int> hops(n);
    for (int src = 0; src < n; ++src) {
      std::fill(hops.begin(), hops.end(), -1);
      std::queue<int> q;
      q.push(src);
      hops[src] = 0;
      while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (auto [v, ew] : adj[u])
          if (hops[v] < 0) {
            hops[v] = hops[u] + 1;
            q.push(v);
          }
      }
      for (int j = 0; j < n; ++j) d(src, j) = hops[j] * w;
    }
  } else {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n);
    for (int src = 0; src < n; ++src) {
      std::fill(dist.begin(), dist.end(), inf);
      dist[src] = 0.0;
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
      pq.emplace(0.0, src);
      while (!pq.empty()) {
        auto [du, u] = pq.top();
        pq.pop();
        if (du > dist[u]) continue;
        for (auto [v, w] : adj[u]) {
          double nd = du + w;
          if (nd < dist[v]) {
            dist[v] = nd;
            pq.emplace(nd, v);
          }
        }
      }
      for (int j = 0; j < n; ++j) d(src, j) = dist[j];
    }
  }
  // per-source sums can differ in the last ulp between directions on weighted
  // graphs; the row of the smaller index is canonical
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) d(j, i) = d(i, j);
  }
  DistanceMatrix dm{n, std::move(d)};
  validate_distance_matrix(dm);
  return dm;
}

// For each node and each graph neighbor, the ball holds every other node at
// embedded distance <= that neighbor's (ties included, the center excluded);
// precision is averaged per node, then over nodes.
inline double mean_average_precision(const WeightedGraph& g,
                                     const DistanceMatrix& d_emb) {
  validate_graph(g);
  if (d_emb.n != g.n_nodes)
    throw DataError("distance matrix size " + std::to_string(d_emb.n) +
                    " does not match graph with " + std::to_string(g.n_nodes) +
                    " nodes");
  int n = g.n_nodes;
  auto adj = adjacency_list(g);
  std::vector<char> is_neighbor(n, 0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& nbrs = adj[i];
    if (nbrs.empty())
      throw DataError("isolated node " + g.name_of(i) + " has no neighbors");
    for (auto [v, w] : nbrs) is_neighbor[v] = 1;
    double acc = 0.0;
    for (auto [j, w] : nbrs) {
      double thr = d_emb.d(i, j);
      int ball = 0, hits = 0;
      for (int y = 0; y < n; ++y) {
        if (y == i) continue;
        if (d_emb.d(i, y) <= thr) {
          ++ball;
          hits += is_neighbor[y];
        }
      }
      acc += static_cast<double>(hits) / ball;
    }
    for (auto [v, w] : nbrs) is_neighbor[v] = 0;
    total += acc / static_cast<double>(nbrs.size());
  }
  return total / n;
}

inline double average_distortion(const DistanceMatrix& d_emb,
                                 const DistanceMatrix& d_true) {
  if (d_emb.n != d_true.n)
    throw DataError("distance matrices differ in size");
  int n = d_emb.n;
  if (n < 2) throw DataError("distortion needs at least 2 points");
  double total = 0.0;
  std::int64_t pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double t = d_true.d(i, j);
      if (!(t > 0.0))
        throw DataError("zero true distance between " + std::to_string(i) +
                        " and " + std::to_string(j));
      total += std::abs(d_emb.d(i, j) - t) / t;
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

// Four-point condition: for each quadruple the two largest of the three
// matching sums differ by at most 2*delta. O(n^4), guarded.
inline double gromov_delta(const DistanceMatrix& dm, bool allow_large = false) {
  int n = dm.n;
  if (n < 4) return 0.0;
  if (n > 500 && !allow_large)
    throw DataError("gromov_delta is O(n^4); n = " + std::to_string(n) +
                    " exceeds the 500-node guard (pass the override to force)");
  double delta = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
          double s1 = dm.d(i, j) + dm.d(k, l);
          double s2 = dm.d(i, k) + dm.d(j, l);
          double s3 = dm.d(i, l) + dm.d(j, k);
          double hi = std::max(s1, std::max(s2, s3));
          double lo = std::min(s1, std::min(s2, s3));
          double mid = s1 + s2 + s3 - hi - lo;
          delta = std::max(delta, (hi - mid) / 2.0);
        }
  return delta;
}

// Nearest-medoid classification over a precomputed distance matrix: per
// repetition a plain uniform split, class representative = training point
// minimizing the summed distance to its own class (first index on ties),
// prediction ties resolve to the lower class index (first-seen label order).
inline std::pair<double, double> medoid_classify(const DistanceMatrix& dm,
                                                 const LabelVector& lv,
                                                 const SplitSpec& split = {}) {
  int n = dm.n;
  if (static_cast<int>(lv.labels.size()) != n)
    throw DataError("label count " + std::to_string(lv.labels.size()) +
                    " does not match matrix size " + std::to_string(n));
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
    throw DataError("train fraction must lie in (0, 1)");
  if (split.repetitions < 1) throw DataError("repetitions must be >= 1");
  std::unordered_map<std::string, int> class_of;
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i)
    y[i] = class_of.emplace(lv.labels[i], static_cast<int>(class_of.size()))
               .first->second;
  int n_classes = static_cast<int>(class_of.size());
  if (n_classes < 2) throw DataError("classification needs at least 2 classes");
  int n_train = static_cast<int>(std::llround(split.train_fraction * n));
  n_train = std::max(1, std::min(n - 1, n_train));

  std::mt19937 rng(split.seed);
  std::vector<int> order(n);
  std::vector<int> medoid(n_classes);
  std::vector<char> present(n_classes);
  std::vector<double> accs;
  accs.reserve(split.repetitions);
  for (int rep = 0; rep < split.repetitions; ++rep) {
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::fill(present.begin(), present.end(), 0);
      for (int t = 0; t < n_train; ++t) present[y[order[t]]] = 1;
      ok = std::all_of(present.begin(), present.end(), [](char c) { return c; });
    }
    if (!ok)
      throw DataError("could not draw a split covering every class after 10 "
                      "attempts (repetition " + std::to_string(rep) + ")");
    std::fill(medoid.begin(), medoid.end(), -1);
    std::vector<double> best(n_classes,
                             std::numeric_limits<double>::infinity());
    // iterate training points in index order so ties pick the first index
    std::vector<char> in_train(n, 0);
    for (int t = 0; t < n_train; ++t) in_train[order[t]] = 1;
    for (int i = 0; i < n; ++i) {
      if (!in_train[i]) continue;
      double cost = 0.0;
      for (int j = 0; j < n; ++j)
        if (in_train[j] && y[j] == y[i]) cost += dm.d(i, j);
      if (cost < best[y[i]]) {
        best[y[i]] = cost;
        medoid[y[i]] = i;
      }
    }
    int correct = 0, tested = 0;
    for (int i = 0; i < n; ++i) {
      if (in_train[i]) continue;
      int pred = 0;
      double bd = dm.d(i, medoid[0]);
      for (int c = 1; c < n_classes; ++c) {
        double dc = dm.d(i, medoid[c]);
        if (dc < bd) {
          bd = dc;
          pred = c;
        }
      }
      correct += pred == y[i];
      ++tested;
    }
    accs.push_back(static_cast<double>(correct) / tested);
  }
  double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / accs.size();
  double var = 0.0;
  for (double a : accs) var += (a - mean) * (a - mean);
  var /= accs.size();
  return {mean, std::sqrt(var)};
}

inline WeightedGraph balanced_tree(int branching, int depth) {
  if (depth < 0) throw DataError("tree depth must be nonnegative");
  if (branching < 1 || (branching < 2 && depth > 0))
    throw DataError("branching must be >= 2 (or depth 0)");
  std::uint64_t n = 1, level = 1;
  for (int d = 0; d < depth; ++d) {
    level *= static_cast<std::uint64_t>(branching);
    n += level;
    if (n > 5'000'000) throw DataError("balanced tree would exceed 5e6 nodes");
  }
  WeightedGraph g;
  g.n_nodes = static_cast<int>(n);
  g.edges.reserve(n - 1);
  for (std::uint64_t child = 1; child < n; ++child)
    g.edges.push_back({static_cast<int>((child - 1) / branching),
                       static_cast<int>(child), 1.0});
  return g;
}

inline std::string eval_report_to_json(const EvalReport& r) {
  char buf[32];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  std::string s = "{\n";
  s += "  \"map_score\": " + num(r.map_score) + ",\n";
  s += "  \"avg_distortion\": " + num(r.avg_distortion);
  if (r.has_gromov_delta)
    s += ",\n  \"gromov_delta\": " + num(r.gromov_delta);
  if (r.has_accuracy) {
    s += ",\n  \"accuracy_mean\": " + num(r.accuracy_mean);
    s += ",\n  \"accuracy_std\": " + num(r.accuracy_std);
  }
  s += ",\n  \"parameters\": {";
  for (size_t i = 0; i < r.parameters.size(); ++i) {
    if (i) s += ", ";
    s += "\"" + r.parameters[i].first + "\": \"" + r.parameters[i].second + "\"";
  }
  s += "}\n}\n";
  return s;
}

}  // namespace hdd
