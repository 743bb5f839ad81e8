#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hdd/diffusion.hpp"
#include "hdd/distance_matrix.hpp"
#include "hdd/errors.hpp"
#include "hdd/parallel.hpp"

namespace hdd {

struct HalfSpacePoint {
  Eigen::VectorXd horizontal;
  double height = 0.0;
};

// Geodesic distance in the Poincare half-space: the height coordinate is the
// last axis, so the numerator norm runs over [horizontal; height] jointly.
// std::asinh is log1p-based and stable for the near-zero arguments produced
// by fine scales.
inline double half_space_distance(const HalfSpacePoint& a,
                                  const HalfSpacePoint& b) {
  if (!(a.height > 0.0) || !(b.height > 0.0))
    throw DataError("half-space height must be positive");
  if (a.horizontal.size() != b.horizontal.size())
    throw DataError("half-space points have different dimensions");
  double sq = (a.horizontal - b.horizontal).squaredNorm();
  double dh = a.height - b.height;
  sq += dh * dh;
  return 2.0 * std::asinh(std::sqrt(sq) / (2.0 * std::sqrt(a.height * b.height)));
}

// Multi-scale embedding into the product of half-spaces: point (i, k) is
// [psi_i^k ; 2^(k*alpha - 2)]. The psi blocks are shared per scale; point()
// materializes a single coordinate vector on demand.
struct HdeEmbedding {
  int n = 0;
  int K = 0;
  double alpha = 0.5;
  std::vector<double> heights;
  std::vector<Eigen::MatrixXd> psi;

  HalfSpacePoint point(int i, int k) const {
    if (i < 0 || i >= n || k < 0 || k > K)
      throw DataError("embedding point index out of range");
    return {psi[k].row(i).transpose(), heights[k]};
  }

  int flat_dimension() const { return (n + 1) * (K + 1); }
};

inline HdeEmbedding embed(const MultiScaleDensities& ms, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DataError("alpha must lie in the open interval (0, 1)");
  HdeEmbedding e;
  e.n = ms.n;
  e.K = ms.max_scale;
  e.alpha = alpha;
  e.heights.resize(e.K + 1);
  for (int k = 0; k <= e.K; ++k) e.heights[k] = std::exp2(k * alpha - 2.0);
  e.psi = ms.psi;
  return e;
}

namespace detail {

using RowMajorXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One scale's contribution to every upper-triangle pair, added in place:
//   acc(i,j) += 2*asinh(|psi_i - psi_j| / (2*height))      (term)
// or the squared term, or the raw squared norm, depending on mode. The
// accumulation order over scales is the caller's loop, so results are
// identical for any thread count. Returns the largest term this scale
// produced (used by the auto-stop rule).
enum class ScaleMode { hdd_term, squared_term, squared_norm };

inline double accumulate_scale(Eigen::MatrixXd& acc, const Eigen::MatrixXd& psi_k,
                               double height, ScaleMode mode, int threads) {
  const int n = static_cast<int>(psi_k.rows());
  RowMajorXd rows = psi_k;  // contiguous rows for the pair sweep
  const int nt = std::max(1, std::min(threads, n));
  std::vector<double> block_max(static_cast<size_t>(nt), 0.0);
  // rows are interleaved across threads (row i has n-i-1 pairs, so contiguous
  // blocks would be badly skewed); every (i, j) is written by exactly one
  // thread, keeping results independent of nt
  auto sweep = [&](int tid) {
    double local_max = 0.0;
    for (int i = tid; i < n; i += nt) {
      const double* ri = rows.row(i).data();
      for (int j = i + 1; j < n; ++j) {
        const double* rj = rows.row(j).data();
        double sq = 0.0;
        for (int c = 0; c < n; ++c) {
          double diff = ri[c] - rj[c];
          sq += diff * diff;
        }
        double value;
        if (mode == ScaleMode::squared_norm) {
          value = sq;
        } else {
          double term = 2.0 * std::asinh(std::sqrt(sq) / (2.0 * height));
          value = mode == ScaleMode::hdd_term ? term : term * term;
          if (term > local_max) local_max = term;
        }
        acc(i, j) += value;
      }
    }
    block_max[static_cast<size_t>(tid)] = local_max;
  };
  if (nt == 1) {
    sweep(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) pool.emplace_back(sweep, t);
    for (auto& th : pool) th.join();
  }
  double worst = 0.0;
  for (double v : block_max) worst = std::max(worst, v);
  return worst;
}

}  // namespace detail

// Scalar loop in the same coordinate order and division form as
// accumulate_scale, so hdd_pair and hdd_matrix agree bit-exactly.
inline double hdd_pair(const HdeEmbedding& e, int i, int j) {
  if (i < 0 || i >= e.n || j < 0 || j >= e.n)
    throw DataError("hdd_pair index out of range");
  double total = 0.0;
  for (int k = 0; k <= e.K; ++k) {
    const auto& m = e.psi[k];
    double sq = 0.0;
    for (int c = 0; c < e.n; ++c) {
      double diff = m(i, c) - m(j, c);
      sq += diff * diff;
    }
    total += 2.0 * std::asinh(std::sqrt(sq) / (2.0 * e.heights[k]));
  }
  return total;
}

inline DistanceMatrix hdd_matrix(const HdeEmbedding& e,
                                 int threads = default_threads()) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(e.n, e.n);
  for (int k = 0; k <= e.K; ++k)
    detail::accumulate_scale(acc, e.psi[k], e.heights[k],
                             detail::ScaleMode::hdd_term, threads);
  return mirror_upper(std::move(acc));
}

// Streams the scales instead of materializing MultiScaleDensities: only one
// phi/psi pair is alive at a time, which keeps the pipeline inside the
// 8(K+1)n^2-byte density budget. Accumulation order matches hdd_matrix, so
// both routes produce byte-identical matrices. With auto_stop the sweep ends
// once a scale's largest pair term falls below 1e-6; reached_K reports the
// last scale actually applied.
inline DistanceMatrix hdd_matrix_streaming(const SpectralForm& s, int K,
                                           double alpha,
                                           int threads = default_threads(),
                                           bool auto_stop = false,
                                           int* reached_K = nullptr) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DataError("alpha must lie in the open interval (0, 1)");
  if (K < 0) throw DataError("max scale K must be nonnegative");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(s.n, s.n);
  int last = 0;
  for (int k = 0; k <= K; ++k) {
    Eigen::MatrixXd psi_k = fractional_power(s, std::exp2(-k)).cwiseSqrt();
    double height = std::exp2(k * alpha - 2.0);
    double worst = detail::accumulate_scale(acc, psi_k, height,
                                            detail::ScaleMode::hdd_term, threads);
    last = k;
    if (auto_stop && worst < 1e-6) break;
  }
  if (reached_K) *reached_K = last;
  return mirror_upper(std::move(acc));
}

enum class VariantKind { hdd, l2_product, single_scale, euclidean };

// Ablation distances. l2_product sums the squared factor distances and
// keeps that sum as is, with no outer square root; single_scale is one
// summand of the HDD sum; euclidean flattens zeta_K and takes the plain
// l2 norm (equal heights per scale cancel).
inline DistanceMatrix variant_distance(const MultiScaleDensities& ms,
                                       const HdeEmbedding& e, VariantKind kind,
                                       int scale_k = -1,
                                       int threads = default_threads()) {
  if (ms.n != e.n || ms.max_scale != e.K)
    throw DataError("densities and embedding disagree on size");
  if (kind == VariantKind::hdd) return hdd_matrix(e, threads);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(e.n, e.n);
  if (kind == VariantKind::single_scale) {
    if (scale_k < 0 || scale_k > e.K)
      throw DataError("single_scale index must lie in [0, K]");
    detail::accumulate_scale(acc, e.psi[scale_k], e.heights[scale_k],
                             detail::ScaleMode::hdd_term, threads);
    return mirror_upper(std::move(acc));
  }
  if (kind == VariantKind::l2_product) {
    for (int k = 0; k <= e.K; ++k)
      detail::accumulate_scale(acc, e.psi[k], e.heights[k],
                               detail::ScaleMode::squared_term, threads);
    return mirror_upper(std::move(acc));
  }
  for (int k = 0; k <= e.K; ++k)
    detail::accumulate_scale(acc, e.psi[k], e.heights[k],
                             detail::ScaleMode::squared_norm, threads);
  for (int i = 0; i < e.n; ++i)
    for (int j = i + 1; j < e.n; ++j) acc(i, j) = std::sqrt(acc(i, j));
  return mirror_upper(std::move(acc));
}

inline constexpr char kEmbeddingMagic[8] = {'H', 'D', 'D', 'E', 'M', 'B', '0', '1'};

// Per-scale psi blocks plus a JSON sidecar (path + ".json") recording n, K,
// alpha and the factor heights.
inline void write_embedding(const std::string& path, const HdeEmbedding& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embedding: " + path);
  out.write(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  std::uint64_t n = static_cast<std::uint64_t>(e.n);
  std::uint64_t k = static_cast<std::uint64_t>(e.K);
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&k), sizeof(k));
  out.write(reinterpret_cast<const char*>(&e.alpha), sizeof(e.alpha));
  std::vector<double> row(e.n);
  for (const auto& m : e.psi) {
    for (int i = 0; i < e.n; ++i) {
      for (int j = 0; j < e.n; ++j) row[j] = m(i, j);
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(sizeof(double) * row.size()));
    }
  }
  if (!out) throw DataError("write failed: " + path);

  std::ofstream side(path + ".json");
  if (!side) throw DataError("cannot write embedding sidecar: " + path + ".json");
  char buf[32];
  side << "{\n  \"n\": " << e.n << ",\n  \"K\": " << e.K << ",\n  \"alpha\": ";
  std::snprintf(buf, sizeof(buf), "%.17g", e.alpha);
  side << buf << ",\n  \"heights\": [";
  for (int i = 0; i <= e.K; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.heights[i]);
    side << (i ? ", " : "") << buf;
  }
  side << "]\n}\n";
  if (!side) throw DataError("write failed: " + path + ".json");
}

inline HdeEmbedding read_embedding(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding: " + path);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kEmbeddingMagic, sizeof(magic)) != 0)
    throw DataError("bad magic in embedding file: " + path);
  std::uint64_t n = 0, k = 0;
  double alpha = 0.0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&k), sizeof(k));
  in.read(reinterpret_cast<char*>(&alpha), sizeof(alpha));
  if (!in || n == 0 || n > (1u << 20) || k > 64 || !(alpha > 0.0 && alpha < 1.0))
    throw DataError("bad header in embedding file: " + path);
  HdeEmbedding e;
  e.n = static_cast<int>(n);
  e.K = static_cast<int>(k);
  e.alpha = alpha;
  e.heights.resize(e.K + 1);
  for (int s = 0; s <= e.K; ++s) e.heights[s] = std::exp2(s * alpha - 2.0);
  std::vector<double> row(e.n);
  for (int s = 0; s <= e.K; ++s) {
    Eigen::MatrixXd m(e.n, e.n);
    for (int i = 0; i < e.n; ++i) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * row.size()));
      if (!in) throw DataError("truncated embedding file: " + path);
      for (int j = 0; j < e.n; ++j) m(i, j) = row[j];
    }
    e.psi.push_back(std::move(m));
  }
  return e;
}

}  // namespace hdd
