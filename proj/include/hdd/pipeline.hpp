#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hdd/diffusion.hpp"
#include "hdd/errors.hpp"
#include "hdd/eval.hpp"
#include "hdd/hde.hpp"
#include "hdd/ingest.hpp"
#include "hdd/kernel.hpp"
#include "hdd/parallel.hpp"

namespace hdd {

enum class InputKind { graph, features, distance };

struct PipelineConfig {
  InputKind input = InputKind::graph;
  std::string graph_path;
  std::string features_path;
  std::string distance_path;
  bool features_has_header = false;
  Metric metric = Metric::cosine;
  CosineForm cosine_form = CosineForm::one_minus_cos;
  double epsilon_c = 1.0;
  LaplacianKind laplacian = LaplacianKind::unnormalized;
  double alpha = 0.5;
  int K = -1;  // -1 selects the size-based default
  bool auto_stop = false;
  VariantKind variant = VariantKind::hdd;
  int single_scale_k = 0;
  std::uint32_t seed = 1234;
  int threads = default_threads();
};

inline int default_max_scale(int n) { return n <= 600 ? 3 : 10; }

namespace detail {

// Reraises module errors with the failing stage named, preserving the type.
template <typename Fn>
auto stage(const char* name, std::vector<std::pair<std::string, double>>& timings,
           Fn&& fn) {
  auto t0 = std::chrono::steady_clock::now();
  auto done = [&] {
    auto t1 = std::chrono::steady_clock::now();
    timings.emplace_back(
        name, std::chrono::duration<double, std::milli>(t1 - t0).count());
  };
  try {
    auto result = fn();
    done();
    return result;
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

}  // namespace detail

struct PipelineResult {
  DistanceMatrix distances;
  int n = 0;
  int K_used = 0;
  std::vector<std::string> node_names;
  std::vector<std::pair<std::string, double>> timings_ms;
};

// ingest -> kernel -> diffusion -> hde. The hdd variant streams one scale at
// a time; the ablation variants materialize the dense densities.
inline PipelineResult run_distance_pipeline(const PipelineConfig& cfg) {
  PipelineResult out;
  auto& timings = out.timings_ms;

  DiffusionOperator op;
  if (cfg.input == InputKind::graph) {
    WeightedGraph g = detail::stage("ingest", timings, [&] {
      return read_edge_list(cfg.graph_path);
    });
    out.node_names = g.node_names;
    op = detail::stage("kernel", timings, [&] {
      return heat_kernel_operator(graph_laplacian(g, cfg.laplacian));
    });
  } else {
    DistanceMatrix ambient;
    if (cfg.input == InputKind::features) {
      FeatureMatrix fm = detail::stage("ingest", timings, [&] {
        return read_feature_matrix(cfg.features_path, cfg.features_has_header);
      });
      ambient = detail::stage("ingest", timings, [&] {
        return pairwise_distances(fm, cfg.metric, cfg.cosine_form);
      });
    } else {
      ambient = detail::stage("ingest", timings, [&] {
        return read_distance_auto(cfg.distance_path);
      });
    }
    op = detail::stage("kernel", timings, [&] {
      double eps = epsilon_median(ambient, cfg.epsilon_c);
      return normalize_twice(gaussian_affinity(ambient, eps));
    });
  }

  out.n = op.n;
  int K = cfg.K >= 0 ? cfg.K : default_max_scale(op.n);
  SpectralForm sform = detail::stage("diffusion", timings, [&] {
    return spectral_decompose(op);
  });

  if (cfg.variant == VariantKind::hdd) {
    out.distances = detail::stage("hde", timings, [&] {
      return hdd_matrix_streaming(sform, K, cfg.alpha, cfg.threads,
                                  cfg.auto_stop, &out.K_used);
    });
  } else {
    MultiScaleDensities ms = detail::stage("diffusion", timings, [&] {
      return multiscale_densities(sform, K);
    });
    out.distances = detail::stage("hde", timings, [&] {
      HdeEmbedding e = embed(ms, cfg.alpha);
      return variant_distance(ms, e, cfg.variant, cfg.single_scale_k,
                              cfg.threads);
    });
    out.K_used = K;
  }
  return out;
}

struct EmbeddingResult {
  HdeEmbedding embedding;
  MultiScaleDensities densities;
  std::vector<std::string> node_names;
  std::vector<std::pair<std::string, double>> timings_ms;
};

inline EmbeddingResult run_embed_pipeline(const PipelineConfig& cfg) {
  EmbeddingResult out;
  auto& timings = out.timings_ms;
  DiffusionOperator op;
  if (cfg.input == InputKind::graph) {
    WeightedGraph g = detail::stage("ingest", timings, [&] {
      return read_edge_list(cfg.graph_path);
    });
    out.node_names = g.node_names;
    op = detail::stage("kernel", timings, [&] {
      return heat_kernel_operator(graph_laplacian(g, cfg.laplacian));
    });
  } else {
    DistanceMatrix ambient;
    if (cfg.input == InputKind::features) {
      FeatureMatrix fm = detail::stage("ingest", timings, [&] {
        return read_feature_matrix(cfg.features_path, cfg.features_has_header);
      });
      ambient = detail::stage("ingest", timings, [&] {
        return pairwise_distances(fm, cfg.metric, cfg.cosine_form);
      });
    } else {
      ambient = detail::stage("ingest", timings, [&] {
        return read_distance_auto(cfg.distance_path);
      });
    }
    op = detail::stage("kernel", timings, [&] {
      double eps = epsilon_median(ambient, cfg.epsilon_c);
      return normalize_twice(gaussian_affinity(ambient, eps));
    });
  }
  int K = cfg.K >= 0 ? cfg.K : default_max_scale(op.n);
  SpectralForm sform = detail::stage("diffusion", timings, [&] {
    return spectral_decompose(op);
  });
  out.densities = detail::stage("diffusion", timings, [&] {
    return multiscale_densities(sform, K);
  });
  out.embedding = detail::stage("hde", timings, [&] {
    return embed(out.densities, cfg.alpha);
  });
  return out;
}

inline std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input for digest: " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace hdd
