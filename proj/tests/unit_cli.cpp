#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <sys/wait.h>

#include "json.hpp"

#include "hdd/diffusion.hpp"
#include "hdd/distance_matrix.hpp"
#include "hdd/graph.hpp"
#include "hdd/hde.hpp"
#include "hdd/ingest.hpp"
#include "tmpfile.hpp"

using Catch::Matchers::ContainsSubstring;
using testutil::TempFile;
using testutil::tmp_path;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  std::string so = tmp_path("cli_stdout");
  std::string se = tmp_path("cli_stderr");
  std::string cmd =
      std::string(HDD_CLI_PATH) + " " + args + " >" + so + " 2>" + se;
  int raw = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = testutil::slurp(so);
  r.err = testutil::slurp(se);
  std::remove(so.c_str());
  std::remove(se.c_str());
  return r;
}

std::string make_tree(int branching, int depth) {
  std::string path = tmp_path("tree_edges");
  CliResult r = run_cli("synth-tree -b " + std::to_string(branching) + " -d " +
                        std::to_string(depth) + " -o " + path);
  REQUIRE(r.code == 0);
  return path;
}

}  // namespace

TEST_CASE("synth-tree writes a readable balanced tree") {
  std::string path = make_tree(2, 3);
  hdd::WeightedGraph g = hdd::read_edge_list(path);
  REQUIRE(g.n_nodes == 15);
  REQUIRE(g.edges.size() == 14);
  hdd::validate_graph(g);
  hdd::require_connected(g);
  std::remove(path.c_str());
}

TEST_CASE("distance then eval on a binary tree") {
  std::string tree = make_tree(2, 4);
  std::string dm_path = tmp_path("dm") + ".csv";
  CliResult dist = run_cli("distance --graph " + tree + " --K 3 --out " + dm_path);
  REQUIRE(dist.code == 0);

  nlohmann::json manifest =
      nlohmann::json::parse(testutil::slurp(dm_path + ".manifest.json"));
  REQUIRE(manifest["command"] == "distance");
  REQUIRE(manifest["parameters"]["K_used"] == 3);
  REQUIRE(manifest["parameters"]["alpha"] == 0.5);
  REQUIRE(manifest["parameters"]["variant"] == "hdd");
  std::string digest = manifest["inputs"][tree];
  REQUIRE(digest.size() == 16);
  REQUIRE(manifest["outputs"] == nlohmann::json::array({dm_path}));
  for (const char* stage : {"ingest", "kernel", "diffusion", "hde"})
    REQUIRE(manifest["timings_ms"].contains(stage));

  std::string report_path = tmp_path("report") + ".json";
  CliResult ev = run_cli("eval --d-emb " + dm_path + " --graph " + tree +
                         " --gromov --out " + report_path);
  REQUIRE(ev.code == 0);
  nlohmann::json report = nlohmann::json::parse(testutil::slurp(report_path));
  REQUIRE(report["map_score"] == 1.0);
  REQUIRE(report.contains("gromov_delta"));
  REQUIRE(report["avg_distortion"].get<double>() > 0.0);

  std::remove(tree.c_str());
  std::remove(dm_path.c_str());
  std::remove((dm_path + ".manifest.json").c_str());
  std::remove(report_path.c_str());
}

TEST_CASE("csv and binary outputs hold the same matrix") {
  std::string tree = make_tree(2, 3);
  std::string csv = tmp_path("dm_csv") + ".csv";
  std::string bin = tmp_path("dm_bin") + ".bin";
  REQUIRE(run_cli("distance --graph " + tree + " --K 2 --out " + csv).code == 0);
  REQUIRE(run_cli("distance --graph " + tree + " --K 2 --format binary --out " +
                  bin).code == 0);
  hdd::DistanceMatrix a = hdd::read_distance_auto(csv);
  hdd::DistanceMatrix b = hdd::read_distance_auto(bin);
  REQUIRE((a.d - b.d).cwiseAbs().maxCoeff() == 0.0);
  for (const std::string& p : {tree, csv, bin, csv + ".manifest.json",
                               bin + ".manifest.json"})
    std::remove(p.c_str());
}

TEST_CASE("repeated runs and different thread counts are byte-identical") {
  std::string tree = make_tree(3, 2);
  std::string first = tmp_path("dm_a") + ".csv";
  std::string second = tmp_path("dm_b") + ".csv";
  std::string third = tmp_path("dm_c") + ".csv";
  REQUIRE(run_cli("distance --graph " + tree + " --K 3 --threads 1 --out " +
                  first).code == 0);
  REQUIRE(run_cli("distance --graph " + tree + " --K 3 --threads 1 --out " +
                  second).code == 0);
  REQUIRE(run_cli("distance --graph " + tree + " --K 3 --threads 3 --out " +
                  third).code == 0);
  std::string bytes = testutil::slurp(first);
  REQUIRE(bytes == testutil::slurp(second));
  REQUIRE(bytes == testutil::slurp(third));
  for (const std::string& p :
       {tree, first, second, third, first + ".manifest.json",
        second + ".manifest.json", third + ".manifest.json"})
    std::remove(p.c_str());
}

TEST_CASE("feature and ambient-distance inputs agree through the kernel") {
  // ten points on the unit circle; %.17g round trips doubles exactly, so the
  // feature route and the precomputed-distance route see identical ambients
  char buf[80];
  std::string csv;
  const double pi = std::acos(-1.0);
  for (int i = 0; i < 10; ++i) {
    double t = 2.0 * pi * i / 10;
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", std::cos(t), std::sin(t));
    csv += buf;
  }
  TempFile feats("circle_feats", csv);

  hdd::FeatureMatrix fm = hdd::read_feature_matrix(feats.path, false);
  hdd::DistanceMatrix ambient =
      hdd::pairwise_distances(fm, hdd::Metric::euclidean);
  std::string amb_path = tmp_path("ambient") + ".csv";
  hdd::write_distance_csv(amb_path, ambient);

  std::string from_feats = tmp_path("dm_feats") + ".csv";
  std::string from_amb = tmp_path("dm_amb") + ".csv";
  CliResult rf = run_cli("distance --features " + feats.path +
                         " --metric euclidean --epsilon-c 2.0 --out " +
                         from_feats);
  REQUIRE(rf.code == 0);
  REQUIRE(run_cli("distance --distance-in " + amb_path +
                  " --epsilon-c 2.0 --out " + from_amb).code == 0);

  std::string bytes = testutil::slurp(from_feats);
  REQUIRE(bytes == testutil::slurp(from_amb));

  // and both equal the library route on the same ambient matrix
  hdd::SpectralForm s = hdd::spectral_decompose(hdd::normalize_twice(
      hdd::gaussian_affinity(ambient, hdd::epsilon_median(ambient, 2.0))));
  hdd::DistanceMatrix want = hdd::hdd_matrix_streaming(s, 3, 0.5);
  hdd::DistanceMatrix got = hdd::read_distance_auto(from_feats);
  REQUIRE((got.d - want.d).cwiseAbs().maxCoeff() == 0.0);

  nlohmann::json manifest =
      nlohmann::json::parse(testutil::slurp(from_feats + ".manifest.json"));
  REQUIRE(manifest["parameters"]["metric"] == "euclidean");
  REQUIRE(manifest["parameters"]["epsilon_c"] == 2.0);
  REQUIRE(manifest["parameters"]["K_used"] == 3);

  for (const std::string& p :
       {amb_path, from_feats, from_amb, from_feats + ".manifest.json",
        from_amb + ".manifest.json"})
    std::remove(p.c_str());
}

TEST_CASE("embed writes the embedding, sidecar and densities") {
  std::string tree = make_tree(2, 3);
  std::string emb = tmp_path("emb") + ".bin";
  std::string dens = tmp_path("dens") + ".bin";
  CliResult r = run_cli("embed --graph " + tree + " --K 2 --out " + emb +
                        " --densities-out " + dens);
  REQUIRE(r.code == 0);

  hdd::HdeEmbedding e = hdd::read_embedding(emb);
  REQUIRE(e.n == 15);
  REQUIRE(e.K == 2);
  hdd::MultiScaleDensities ms = hdd::read_densities(dens);
  REQUIRE(ms.n == 15);
  REQUIRE(ms.max_scale == 2);

  nlohmann::json manifest =
      nlohmann::json::parse(testutil::slurp(emb + ".manifest.json"));
  REQUIRE(manifest["command"] == "embed");
  REQUIRE(manifest["outputs"].size() == 3);

  for (const std::string& p :
       {tree, emb, emb + ".json", emb + ".manifest.json", dens})
    std::remove(p.c_str());
}

TEST_CASE("config file fills unset flags and explicit flags win") {
  std::string tree = make_tree(2, 3);
  TempFile cfg("config", "{\"alpha\": 0.25, \"K\": 2}\n");
  std::string out1 = tmp_path("dm_cfg1") + ".csv";
  std::string out2 = tmp_path("dm_cfg2") + ".csv";

  REQUIRE(run_cli("distance --graph " + tree + " --config " + cfg.path +
                  " --out " + out1).code == 0);
  nlohmann::json m1 =
      nlohmann::json::parse(testutil::slurp(out1 + ".manifest.json"));
  REQUIRE(m1["parameters"]["alpha"] == 0.25);
  REQUIRE(m1["parameters"]["K_used"] == 2);

  REQUIRE(run_cli("distance --graph " + tree + " --config " + cfg.path +
                  " --alpha 0.75 --out " + out2).code == 0);
  nlohmann::json m2 =
      nlohmann::json::parse(testutil::slurp(out2 + ".manifest.json"));
  REQUIRE(m2["parameters"]["alpha"] == 0.75);

  for (const std::string& p : {tree, out1, out2, out1 + ".manifest.json",
                               out2 + ".manifest.json"})
    std::remove(p.c_str());
}

TEST_CASE("usage problems exit with code 1") {
  std::string tree = make_tree(2, 2);
  TempFile feats("feats", "1,2\n3,4\n5,6\n");
  REQUIRE(run_cli("").code == 1);
  REQUIRE(run_cli("distance --graph " + tree).code == 1);
  REQUIRE(run_cli("distance --graph " + tree + " --no-such-flag --out x").code == 1);
  REQUIRE(run_cli("distance --graph " + tree + " --variant bogus --out x").code == 1);
  REQUIRE(run_cli("distance --graph " + tree + " --alpha 1.5 --out x").code == 1);
  REQUIRE(run_cli("distance --graph " + tree + " --features " + feats.path +
                  " --out x").code == 1);
  REQUIRE(run_cli("distance --out x").code == 1);
  std::remove(tree.c_str());
}

TEST_CASE("help exits with code 0") {
  REQUIRE(run_cli("--help").code == 0);
  CliResult sub = run_cli("distance --help");
  REQUIRE(sub.code == 0);
  REQUIRE_THAT(sub.out, ContainsSubstring("--variant"));
}

TEST_CASE("data problems exit with code 2 and name the stage") {
  CliResult missing = run_cli("distance --graph /nonexistent/g.edges --out x");
  REQUIRE(missing.code == 2);
  REQUIRE_THAT(missing.err, ContainsSubstring("ingest"));

  TempFile bad("edges_bad", "a b\nb c notaweight\n");
  CliResult malformed = run_cli("distance --graph " + bad.path + " --out x");
  REQUIRE(malformed.code == 2);
  REQUIRE_THAT(malformed.err, ContainsSubstring("data error"));

  std::string tree = make_tree(2, 3);
  std::string dm_path = tmp_path("dm_small") + ".csv";
  REQUIRE(run_cli("distance --graph " + tree + " --K 1 --out " + dm_path).code == 0);
  std::string other = make_tree(2, 4);
  CliResult mismatched = run_cli("eval --d-emb " + dm_path + " --graph " + other);
  REQUIRE(mismatched.code == 2);

  for (const std::string& p : {tree, other, dm_path, dm_path + ".manifest.json"})
    std::remove(p.c_str());
}

TEST_CASE("out-of-range single scale exits with code 2") {
  std::string tree = make_tree(2, 3);
  CliResult r = run_cli("distance --graph " + tree +
                        " --variant single_scale --scale 99 --K 2 --out x");
  REQUIRE(r.code == 2);
  REQUIRE_THAT(r.err, ContainsSubstring("hde"));
  std::remove(tree.c_str());
}

TEST_CASE("numerical failures exit with code 3 and name the stage") {
  // a star is not regular, so exp(-L_sym) is not row-stochastic
  std::string star = make_tree(3, 1);
  CliResult r = run_cli("distance --graph " + star +
                        " --laplacian symmetric-normalized --out x");
  REQUIRE(r.code == 3);
  REQUIRE_THAT(r.err, ContainsSubstring("kernel"));
  REQUIRE_THAT(r.err, ContainsSubstring("numerical error"));
  std::remove(star.c_str());
}

TEST_CASE("classify reports clean-cluster accuracy") {
  int n = 8;
  hdd::DistanceMatrix dm{n, Eigen::MatrixXd::Zero(n, n)};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      bool same = (i < 4) == (j < 4);
      dm.d(i, j) = dm.d(j, i) = same ? 1.0 : 10.0;
    }
  TempFile dist("cls_dm");
  hdd::write_distance_csv(dist.path, dm);
  TempFile labels("cls_labels", "a\na\na\na\nb\nb\nb\nb\n");

  std::string report_path = tmp_path("cls_report") + ".json";
  CliResult r = run_cli("classify --distance " + dist.path + " --labels " +
                        labels.path + " --reps 5 --out " + report_path);
  REQUIRE(r.code == 0);
  nlohmann::json report = nlohmann::json::parse(testutil::slurp(report_path));
  REQUIRE(report["accuracy_mean"] == 1.0);
  REQUIRE(report["accuracy_std"] == 0.0);
  REQUIRE(report["parameters"]["repetitions"] == 5);
  std::remove(report_path.c_str());

  CliResult to_stdout = run_cli("classify --distance " + dist.path +
                                " --labels " + labels.path + " --reps 2");
  REQUIRE(to_stdout.code == 0);
  REQUIRE_THAT(to_stdout.out, ContainsSubstring("accuracy_mean"));
}
