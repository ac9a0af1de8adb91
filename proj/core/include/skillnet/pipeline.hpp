#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skillnet/corpus.hpp"
#include "skillnet/metrics.hpp"
#include "skillnet/synth.hpp"

namespace skillnet {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Stage { ingest, embed, graph, cluster, metrics, panel, synth, all };

Stage parse_stage(std::string_view name);
std::string_view stage_name(Stage stage);

struct DateRange {
  Date begin{};
  Date end{};  // inclusive
  bool contains(Date d) const { return begin <= d && d <= end; }
};

struct PipelineConfig {
  // Inputs. Relative paths are resolved against base_dir.
  std::filesystem::path adverts;
  AdvertFormat adverts_format = AdvertFormat::jsonl;
  std::filesystem::path lexicon;
  std::filesystem::path regions;
  std::filesystem::path embeddings;   // optional
  std::filesystem::path categories;   // optional
  std::filesystem::path output_dir = "out";
  std::filesystem::path base_dir = ".";

  // ingest
  int stride = 1;
  // embed
  int n_components = 100;
  bool include_diagonal = true;
  bool dump_similarity = false;
  // graph
  int cknn_k = 15;
  double cknn_delta = 1.0;
  // cluster
  int scale_count = 60;
  std::optional<double> log10_min;
  std::optional<double> log10_max;
  int min_clusters = 4;
  int max_clusters = 400;
  int runs_per_scale = 50;
  int nvi_runs = 25;
  int block_nvi_window = 5;
  double run_nvi_threshold = 0.1;
  int max_partitions = 5;
  // metrics
  PathLength path_lengths = PathLength::distance;
  // panel
  std::optional<DateRange> period_a;
  std::optional<DateRange> period_b;
  // synth
  std::optional<PlantedSpec> synth;
  std::filesystem::path synth_dir = "synth";

  std::uint64_t seed = 42;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  // Throws ArgumentError on out-of-range parameters.
  void validate() const;
  // Canonical JSON of the parameters a stage depends on (stage-local only).
  std::string stage_parameters(Stage stage) const;
};

// Environment variables with this prefix override config keys: the rest of
// the variable name, lower-cased, with "__" standing for nesting
// (SKILLNET_GRAPH__K=10 sets graph.k).
inline constexpr std::string_view kEnvPrefix = "SKILLNET_";

// Layered configuration: JSON text, then environment, then explicit
// "dotted.key=value" overrides (values parsed as JSON, else taken as strings).
PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::pair<std::string, std::string>>& overrides = {},
                           bool use_environment = true);
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {},
                            bool use_environment = false);

struct RunOptions {
  bool force = false;
  int threads = 0;  // 0 keeps the OpenMP default
};

struct StageOutcome {
  Stage stage = Stage::ingest;
  bool cached = false;
  std::vector<std::string> warnings;
};

// Runs one stage (or every stage for Stage::all). Outputs are written
// atomically under output_dir/<stage>/ together with a manifest.json that
// records the stage hash, input hashes and version.
std::vector<StageOutcome> run_stage(Stage stage, const PipelineConfig& config,
                                    const RunOptions& options = {});

// SHA-256 of a file's bytes or of a string, lower-case hex.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(std::string_view text);

// Writes via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace skillnet
