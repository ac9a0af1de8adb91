#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "skillnet/error.hpp"
#include "skillnet/pipeline.hpp"

using namespace skillnet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small planted corpus that runs end to end in a few seconds.
const char* kSmallConfig = R"({
  "output_dir": "out",
  "seed": 5,
  "embedding": {"n_components": 20},
  "graph": {"k": 6},
  "scales": {"count": 15, "min_clusters": 2, "max_clusters": 30},
  "optimizer": {"runs": 6, "nvi_runs": 3},
  "selection": {"window": 2},
  "panel": {"period_a": ["2016-01-01", "2017-12-31"], "period_b": ["2020-01-01", "2022-12-31"]},
  "synth": {"n_skills": 40, "cluster_sizes": [10, 10, 10, 10], "n_adverts": 2500,
            "p_in": 1.0, "p_out": 0.03, "mean_skills": 5}
})";

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("skillnet_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig small_config(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& o = {}) {
  return parse_config(kSmallConfig, dir, o);
}

fs::path write_config(const fs::path& dir) {
  const auto path = dir / "config.json";
  std::ofstream(path) << kSmallConfig;
  return path;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const auto log = fs::temp_directory_path() / "skillnet_cli_output.txt";
  const std::string cmd = std::string(SKILLNET_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) *output = slurp(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultValues) {
  auto c = parse_config("{}", ".");
  EXPECT_EQ(c.cknn_k, 15);
  EXPECT_EQ(c.cknn_delta, 1.0);
  EXPECT_EQ(c.n_components, 100);
  EXPECT_EQ(c.stride, 1);
  EXPECT_EQ(c.block_nvi_window, 5);
  EXPECT_EQ(c.run_nvi_threshold, 0.1);
  EXPECT_EQ(c.scale_count, 60);
  EXPECT_EQ(c.runs_per_scale, 50);
  EXPECT_EQ(c.min_clusters, 4);
  EXPECT_EQ(c.max_clusters, 400);
  EXPECT_EQ(c.path_lengths, PathLength::distance);
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_THROW(parse_config(R"({"graph": {"kk": 3}})", "."), ArgumentError);
  EXPECT_THROW(parse_config(R"({"grpah": {}})", "."), ArgumentError);
  EXPECT_THROW(parse_config(R"({"graph": {"k": "many"}})", "."), ArgumentError);
}

TEST(Config, OverridesBeatFileAndEnvironment) {
  const char* text = R"({"graph": {"k": 7, "delta": 1.5}, "ingest": {"stride": 2}})";
  ::setenv("SKILLNET_GRAPH__K", "9", 1);
  ::setenv("SKILLNET_INGEST__STRIDE", "11", 1);
  auto env = parse_config(text, ".", {}, true);
  EXPECT_EQ(env.cknn_k, 9);
  EXPECT_EQ(env.stride, 11);
  EXPECT_EQ(env.cknn_delta, 1.5);
  auto flags = parse_config(text, ".", {{"graph.k", "4"}}, true);
  EXPECT_EQ(flags.cknn_k, 4);
  auto no_env = parse_config(text, ".", {}, false);
  EXPECT_EQ(no_env.cknn_k, 7);
  ::unsetenv("SKILLNET_GRAPH__K");
  ::unsetenv("SKILLNET_INGEST__STRIDE");
}

TEST(Config, ValidationAndPeriods) {
  EXPECT_THROW(parse_config(R"({"graph": {"delta": 0}})", "."), ArgumentError);
  EXPECT_THROW(parse_config(R"({"ingest": {"stride": 0}})", "."), ArgumentError);
  EXPECT_THROW(parse_config(R"({"scales": {"count": 8}, "selection": {"window": 4}})", "."), ArgumentError);
  EXPECT_THROW(parse_config(R"({"scales": {"log10_min": 1}})", "."), ArgumentError);
  EXPECT_THROW(parse_config(R"({"panel": {"period_a": ["2020-01-01", "2019-01-01"]}})", "."), ArgumentError);
  auto c = small_config(".");
  ASSERT_TRUE(c.period_a.has_value());
  EXPECT_TRUE(c.period_a->contains(parse_date("2017-12-31")));
  EXPECT_FALSE(c.period_a->contains(parse_date("2018-01-01")));
  ASSERT_TRUE(c.synth.has_value());
  EXPECT_EQ(c.synth->seed, 5u);
  EXPECT_EQ(c.adverts, fs::path("out") / "synth" / "adverts.jsonl");
}

TEST(Stages, NamesRoundTrip) {
  for (auto s : {Stage::ingest, Stage::embed, Stage::graph, Stage::cluster, Stage::metrics, Stage::panel,
                 Stage::synth, Stage::all}) {
    EXPECT_EQ(parse_stage(stage_name(s)), s);
  }
  EXPECT_THROW(parse_stage("plot"), ArgumentError);
}

TEST(Hashing, KnownVectorAndAtomicWrite) {
  EXPECT_EQ(sha256_text("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  auto dir = fresh_dir("atomic");
  write_file_atomic(dir / "x.txt", "hello");
  write_file_atomic(dir / "x.txt", "world");
  EXPECT_EQ(slurp(dir / "x.txt"), "world");
  EXPECT_EQ(sha256_file(dir / "x.txt"), sha256_text("world"));
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator()), 1);
}

TEST(Pipeline, MissingGraphIsNamed) {
  auto dir = fresh_dir("missing");
  auto c = small_config(dir);
  run_stage(Stage::synth, c);
  run_stage(Stage::ingest, c);
  run_stage(Stage::embed, c);
  try {
    run_stage(Stage::cluster, c);
    FAIL() << "expected MissingArtifactError";
  } catch (const MissingArtifactError& e) {
    EXPECT_EQ(e.prerequisite(), "graph");
    EXPECT_NE(std::string(e.what()).find("graph"), std::string::npos);
  }
}

TEST(Pipeline, MissingSyntheticCorpusNamesSynth) {
  auto dir = fresh_dir("missing_synth");
  try {
    run_stage(Stage::ingest, small_config(dir));
    FAIL() << "expected MissingArtifactError";
  } catch (const MissingArtifactError& e) {
    EXPECT_EQ(e.prerequisite(), "synth");
  }
}

TEST(Pipeline, FullRunCachingStalenessAndIsolation) {
  auto dir = fresh_dir("full");
  auto c = small_config(dir);
  run_stage(Stage::synth, c);
  auto first = run_stage(Stage::all, c);
  ASSERT_EQ(first.size(), 6u);
  for (const auto& o : first) EXPECT_FALSE(o.cached) << stage_name(o.stage);

  const fs::path out = dir / "out";
  for (const char* f : {"ingest/cooccurrence.csv", "ingest/vocabulary.csv", "embed/embedding.csv",
                        "graph/edges.csv", "graph/nodes.csv", "cluster/scan_summary.csv",
                        "cluster/nvi_matrix.csv", "cluster/partitions.csv", "cluster/selected.json",
                        "cluster/hierarchy.json", "metrics/centrality.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  auto selected = nlohmann::json::parse(slurp(out / "cluster/selected.json"));
  ASSERT_FALSE(selected["partitions"].empty());
  const std::string label = selected["partitions"][0]["label"];
  for (const std::string f : {"metrics/report_" + label + ".json", "metrics/coverage_" + label + ".csv",
                              "panel/region_profiles_" + label + ".csv", "panel/zscores_" + label + ".csv",
                              "panel/period_comparison_" + label + ".csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  auto manifest = nlohmann::json::parse(slurp(out / "graph/manifest.json"));
  EXPECT_EQ(manifest["stage"], "graph");
  EXPECT_EQ(manifest["version"], std::string(kVersion));
  EXPECT_TRUE(manifest.contains("stage_hash"));
  EXPECT_EQ(manifest["outputs"]["edges.csv"], sha256_file(out / "graph/edges.csv"));

  // Identical rerun: every stage cached, manifests untouched.
  const auto before = slurp(out / "cluster/manifest.json");
  auto second = run_stage(Stage::all, c);
  for (const auto& o : second) EXPECT_TRUE(o.cached) << stage_name(o.stage);
  EXPECT_EQ(slurp(out / "cluster/manifest.json"), before);

  // Deleting a downstream stage leaves upstream artifacts alone.
  const auto ingest_manifest = slurp(out / "ingest/manifest.json");
  fs::remove_all(out / "metrics");
  auto third = run_stage(Stage::all, c);
  EXPECT_EQ(slurp(out / "ingest/manifest.json"), ingest_manifest);
  EXPECT_FALSE(third[4].cached);
  EXPECT_TRUE(third[3].cached);

  // Graph artifacts built under another k are stale for a cluster run.
  auto changed = small_config(dir, {{"graph.k", "7"}});
  EXPECT_THROW(run_stage(Stage::cluster, changed, {false, 0}), StaleCacheError);
  EXPECT_NO_THROW(run_stage(Stage::cluster, changed, {true, 0}));
}

TEST(Pipeline, TwoRunsAreByteIdentical) {
  std::vector<fs::path> dirs = {fresh_dir("det_a"), fresh_dir("det_b")};
  for (const auto& d : dirs) {
    auto c = small_config(d);
    run_stage(Stage::synth, c);
    run_stage(Stage::all, c);
  }
  for (const auto& entry : fs::recursive_directory_iterator(dirs[0] / "out")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dirs[0]);
    EXPECT_EQ(slurp(entry.path()), slurp(dirs[1] / rel)) << rel;
  }
}

TEST(Cli, StagesExitCodesAndCache) {
  auto dir = fresh_dir("cli");
  const auto config = write_config(dir).string();
  std::string text;
  EXPECT_EQ(run_cli("cluster -c " + config, &text), 3);
  EXPECT_NE(text.find("graph"), std::string::npos) << text;
  EXPECT_EQ(run_cli("synth -c " + config), 0);
  EXPECT_EQ(run_cli("all -c " + config + " --threads 1", &text), 0) << text;
  EXPECT_NE(text.find("panel: done"), std::string::npos) << text;
  EXPECT_EQ(run_cli("all -c " + config, &text), 0);
  EXPECT_NE(text.find("cluster: up to date"), std::string::npos) << text;
  EXPECT_EQ(run_cli("cluster -c " + config + " --set graph.k=5", &text), 4);
  EXPECT_NE(text.find("--force"), std::string::npos) << text;
  EXPECT_EQ(run_cli("cluster -c " + config + " --set graph.k=5 --force"), 0);
  EXPECT_EQ(run_cli("ingest -c " + config + " --set graph.k"), 2);
  EXPECT_NE(run_cli("nonsense"), 0);
}
