// Command-line surface for the hyperbolic diffusion distance pipeline.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hdd/pipeline.hpp"

namespace {

using nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CommonFlags {
  std::string graph_path;
  std::string features_path;
  std::string distance_path;
  bool has_header = false;
  std::string metric = "cosine";
  std::string cosine_form = "one-minus-cos";
  double epsilon_c = 1.0;
  std::string laplacian = "unnormalized";
  double alpha = 0.5;
  int K = -1;
  bool auto_stop = false;
  std::string variant = "hdd";
  int scale = 0;
  unsigned seed = 1234;
  int threads = hdd::default_threads();
  std::string config_path;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--graph", f.graph_path, "edge-list input");
  cmd->add_option("--features", f.features_path, "feature CSV input");
  cmd->add_option("--distance-in", f.distance_path,
                  "precomputed distance matrix input (CSV or binary)");
  cmd->add_flag("--has-header", f.has_header, "feature CSV has a header row");
  cmd->add_option("--metric", f.metric, "ambient metric: cosine|euclidean")
      ->check(CLI::IsMember({"cosine", "euclidean"}));
  cmd->add_option("--cosine-form", f.cosine_form,
                  "cosine distance form: one-minus-cos|arccos")
      ->check(CLI::IsMember({"one-minus-cos", "arccos"}));
  cmd->add_option("--epsilon-c", f.epsilon_c,
                  "multiplier on the median of squared distances");
  cmd->add_option("--laplacian", f.laplacian,
                  "laplacian kind: unnormalized|symmetric-normalized")
      ->check(CLI::IsMember({"unnormalized", "symmetric-normalized"}));
  cmd->add_option("--alpha", f.alpha, "scale exponent in (0,1), default 0.5");
  cmd->add_option("--K", f.K, "largest dyadic scale (default: 3 if n<=600 else 10)");
  cmd->add_flag("--auto-stop", f.auto_stop,
                "stop scales early once the largest term falls below 1e-6");
  cmd->add_option("--variant", f.variant,
                  "distance variant: hdd|l2_product|single_scale|euclidean")
      ->check(CLI::IsMember({"hdd", "l2_product", "single_scale", "euclidean"}));
  cmd->add_option("--scale", f.scale, "scale index for single_scale");
  cmd->add_option("--seed", f.seed, "random seed recorded in the manifest");
  cmd->add_option("--threads", f.threads, "parallelism degree");
  cmd->add_option("--config", f.config_path,
                  "JSON config file; explicit flags override it");
}

// Fills flags the user did not pass from a JSON config file. A manifest file
// works too: its "parameters" object is used.
void apply_config(CLI::App* cmd, CommonFlags& f) {
  if (f.config_path.empty()) return;
  std::ifstream in(f.config_path);
  if (!in) throw hdd::DataError("cannot open config: " + f.config_path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw hdd::DataError("config parse failure: " + std::string(e.what()));
  }
  if (j.contains("parameters")) j = j["parameters"];
  auto unset = [&](const char* flag) {
    auto* opt = cmd->get_option(flag);
    return opt->count() == 0;
  };
  auto pull = [&](const char* flag, const char* key, auto& target) {
    if (j.contains(key) && unset(flag)) target = j[key].get<std::decay_t<decltype(target)>>();
  };
  pull("--graph", "graph", f.graph_path);
  pull("--features", "features", f.features_path);
  pull("--distance-in", "distance_in", f.distance_path);
  pull("--has-header", "has_header", f.has_header);
  pull("--metric", "metric", f.metric);
  pull("--cosine-form", "cosine_form", f.cosine_form);
  pull("--epsilon-c", "epsilon_c", f.epsilon_c);
  pull("--laplacian", "laplacian", f.laplacian);
  pull("--alpha", "alpha", f.alpha);
  pull("--K", "K", f.K);
  pull("--auto-stop", "auto_stop", f.auto_stop);
  pull("--variant", "variant", f.variant);
  pull("--scale", "scale", f.scale);
  pull("--seed", "seed", f.seed);
  pull("--threads", "threads", f.threads);
}

hdd::PipelineConfig to_pipeline_config(const CommonFlags& f) {
  hdd::PipelineConfig cfg;
  int inputs = !f.graph_path.empty() + !f.features_path.empty() +
               !f.distance_path.empty();
  if (inputs != 1)
    throw CLI::ValidationError(
        "exactly one of --graph, --features, --distance-in is required");
  if (!f.graph_path.empty()) {
    cfg.input = hdd::InputKind::graph;
    cfg.graph_path = f.graph_path;
  } else if (!f.features_path.empty()) {
    cfg.input = hdd::InputKind::features;
    cfg.features_path = f.features_path;
  } else {
    cfg.input = hdd::InputKind::distance;
    cfg.distance_path = f.distance_path;
  }
  if (!(f.alpha > 0.0 && f.alpha < 1.0))
    throw CLI::ValidationError("--alpha must lie in the open interval (0, 1)");
  if (f.threads < 1) throw CLI::ValidationError("--threads must be >= 1");
  cfg.features_has_header = f.has_header;
  cfg.metric = f.metric == "cosine" ? hdd::Metric::cosine : hdd::Metric::euclidean;
  cfg.cosine_form = f.cosine_form == "arccos" ? hdd::CosineForm::arccos
                                              : hdd::CosineForm::one_minus_cos;
  cfg.epsilon_c = f.epsilon_c;
  cfg.laplacian = f.laplacian == "unnormalized"
                      ? hdd::LaplacianKind::unnormalized
                      : hdd::LaplacianKind::symmetric_normalized;
  cfg.alpha = f.alpha;
  cfg.K = f.K;
  cfg.auto_stop = f.auto_stop;
  if (f.variant == "hdd") cfg.variant = hdd::VariantKind::hdd;
  else if (f.variant == "l2_product") cfg.variant = hdd::VariantKind::l2_product;
  else if (f.variant == "single_scale") cfg.variant = hdd::VariantKind::single_scale;
  else cfg.variant = hdd::VariantKind::euclidean;
  cfg.single_scale_k = f.scale;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  return cfg;
}

ordered_json parameters_json(const CommonFlags& f, int K_used) {
  ordered_json p;
  if (!f.graph_path.empty()) p["graph"] = f.graph_path;
  if (!f.features_path.empty()) p["features"] = f.features_path;
  if (!f.distance_path.empty()) p["distance_in"] = f.distance_path;
  p["has_header"] = f.has_header;
  p["metric"] = f.metric;
  p["cosine_form"] = f.cosine_form;
  p["epsilon_c"] = f.epsilon_c;
  p["laplacian"] = f.laplacian;
  p["alpha"] = f.alpha;
  p["K"] = f.K;
  p["K_used"] = K_used;
  p["auto_stop"] = f.auto_stop;
  p["variant"] = f.variant;
  p["scale"] = f.scale;
  p["seed"] = f.seed;
  p["threads"] = f.threads;
  return p;
}

ordered_json inputs_json(const CommonFlags& f) {
  ordered_json in = ordered_json::object();
  for (const std::string& p :
       {f.graph_path, f.features_path, f.distance_path})
    if (!p.empty()) in[p] = hex64(hdd::fnv1a_file(p));
  return in;
}

ordered_json timings_json(const std::vector<std::pair<std::string, double>>& t) {
  ordered_json out = ordered_json::object();
  for (const auto& [name, ms] : t) {
    double prev = out.contains(name) ? out[name].get<double>() : 0.0;
    out[name] = prev + ms;
  }
  return out;
}

void write_manifest(const std::string& path, const std::string& command,
                    const CommonFlags& f, int K_used,
                    const std::vector<std::pair<std::string, double>>& timings,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::string>& node_names) {
  ordered_json m;
  m["command"] = command;
  m["parameters"] = parameters_json(f, K_used);
  m["inputs"] = inputs_json(f);
  m["timings_ms"] = timings_json(timings);
  m["outputs"] = outputs;
  if (!node_names.empty()) m["node_names"] = node_names;
  std::ofstream out(path);
  if (!out) throw hdd::DataError("cannot write manifest: " + path);
  out << m.dump(2) << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"hyperbolic diffusion embedding and distance pipeline"};
  app.require_subcommand(1);

  auto* dist_cmd = app.add_subcommand("distance",
                                      "compute a pairwise distance matrix");
  CommonFlags df;
  add_common(dist_cmd, df);
  std::string dist_out, dist_format = "csv", dist_manifest;
  dist_cmd->add_option("--out,-o", dist_out, "output distance matrix")->required();
  dist_cmd->add_option("--format", dist_format, "output format: csv|binary")
      ->check(CLI::IsMember({"csv", "binary"}));
  dist_cmd->add_option("--manifest", dist_manifest,
                       "manifest path (default: <out>.manifest.json)");

  auto* embed_cmd = app.add_subcommand("embed",
                                       "write the multi-scale embedding");
  CommonFlags ef;
  add_common(embed_cmd, ef);
  std::string embed_out, embed_densities, embed_manifest;
  embed_cmd->add_option("--out,-o", embed_out, "output embedding file")->required();
  embed_cmd->add_option("--densities-out", embed_densities,
                        "also dump the propagated densities");
  embed_cmd->add_option("--manifest", embed_manifest,
                        "manifest path (default: <out>.manifest.json)");

  auto* eval_cmd = app.add_subcommand("eval", "score a distance matrix");
  std::string eval_demb, eval_graph, eval_out;
  bool eval_gromov = false, eval_gromov_force = false;
  eval_cmd->add_option("--d-emb", eval_demb, "embedded distance matrix")->required();
  eval_cmd->add_option("--graph", eval_graph, "ground-truth graph")->required();
  eval_cmd->add_flag("--gromov", eval_gromov, "also report gromov_delta (O(n^4))");
  eval_cmd->add_flag("--gromov-force", eval_gromov_force,
                     "lift the 500-node gromov_delta guard");
  eval_cmd->add_option("--out,-o", eval_out, "report path (default: stdout)");

  auto* cls_cmd = app.add_subcommand("classify",
                                     "nearest-medoid classification");
  std::string cls_dist, cls_labels, cls_out;
  double cls_frac = 0.8;
  int cls_reps = 10;
  unsigned cls_seed = 1234;
  cls_cmd->add_option("--distance", cls_dist, "distance matrix")->required();
  cls_cmd->add_option("--labels", cls_labels, "single-column label CSV")->required();
  cls_cmd->add_option("--train-fraction", cls_frac, "training fraction (0,1)");
  cls_cmd->add_option("--reps", cls_reps, "number of random splits");
  cls_cmd->add_option("--seed", cls_seed, "split RNG seed");
  cls_cmd->add_option("--out,-o", cls_out, "report path (default: stdout)");

  auto* synth_cmd = app.add_subcommand("synth-tree",
                                       "generate a balanced tree edge list");
  int synth_b = 2, synth_d = 4;
  std::string synth_out;
  synth_cmd->add_option("--branching,-b", synth_b, "children per node")->required();
  synth_cmd->add_option("--depth,-d", synth_d, "tree depth")->required();
  synth_cmd->add_option("--out,-o", synth_out, "output edge list")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (dist_cmd->parsed()) {
    apply_config(dist_cmd, df);
    hdd::PipelineConfig cfg = to_pipeline_config(df);
    hdd::PipelineResult res = hdd::run_distance_pipeline(cfg);
    if (dist_format == "csv")
      hdd::write_distance_csv(dist_out, res.distances);
    else
      hdd::write_distance_binary(dist_out, res.distances);
    std::string manifest =
        dist_manifest.empty() ? dist_out + ".manifest.json" : dist_manifest;
    write_manifest(manifest, "distance", df, res.K_used, res.timings_ms,
                   {dist_out}, res.node_names);
    return 0;
  }

  if (embed_cmd->parsed()) {
    apply_config(embed_cmd, ef);
    hdd::PipelineConfig cfg = to_pipeline_config(ef);
    hdd::EmbeddingResult res = hdd::run_embed_pipeline(cfg);
    hdd::write_embedding(embed_out, res.embedding);
    std::vector<std::string> outputs = {embed_out, embed_out + ".json"};
    if (!embed_densities.empty()) {
      hdd::write_densities(embed_densities, res.densities);
      outputs.push_back(embed_densities);
    }
    std::string manifest =
        embed_manifest.empty() ? embed_out + ".manifest.json" : embed_manifest;
    write_manifest(manifest, "embed", ef, res.embedding.K, res.timings_ms,
                   outputs, res.node_names);
    return 0;
  }

  if (eval_cmd->parsed()) {
    hdd::WeightedGraph g = hdd::read_edge_list(eval_graph);
    hdd::DistanceMatrix demb = hdd::read_distance_auto(eval_demb);
    hdd::DistanceMatrix dtrue = hdd::shortest_paths(g);
    hdd::EvalReport report;
    report.map_score = hdd::mean_average_precision(g, demb);
    report.avg_distortion = hdd::average_distortion(demb, dtrue);
    if (eval_gromov) {
      report.has_gromov_delta = true;
      report.gromov_delta = hdd::gromov_delta(demb, eval_gromov_force);
    }
    report.parameters = {{"d_emb", eval_demb}, {"graph", eval_graph}};
    std::string json = hdd::eval_report_to_json(report);
    if (eval_out.empty()) {
      std::cout << json;
    } else {
      std::ofstream out(eval_out);
      if (!out) throw hdd::DataError("cannot write report: " + eval_out);
      out << json;
    }
    return 0;
  }

  if (cls_cmd->parsed()) {
    hdd::DistanceMatrix dm = hdd::read_distance_auto(cls_dist);
    hdd::LabelVector lv = hdd::read_labels(cls_labels);
    hdd::require_classifiable(lv);
    hdd::SplitSpec split;
    split.train_fraction = cls_frac;
    split.repetitions = cls_reps;
    split.seed = cls_seed;
    auto [mean, sd] = hdd::medoid_classify(dm, lv, split);
    ordered_json j;
    j["accuracy_mean"] = mean;
    j["accuracy_std"] = sd;
    j["parameters"] = {{"distance", cls_dist},
                       {"labels", cls_labels},
                       {"train_fraction", cls_frac},
                       {"repetitions", cls_reps},
                       {"seed", cls_seed}};
    std::string text = j.dump(2) + "\n";
    if (cls_out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(cls_out);
      if (!out) throw hdd::DataError("cannot write report: " + cls_out);
      out << text;
    }
    return 0;
  }

  // synth-tree
  hdd::WeightedGraph g = hdd::balanced_tree(synth_b, synth_d);
  hdd::write_edge_list(synth_out, g);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const hdd::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const hdd::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
