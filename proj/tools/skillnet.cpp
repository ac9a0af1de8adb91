// Command-line driver: one subcommand per pipeline stage, plus `all`.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skillnet/error.hpp"
#include "skillnet/pipeline.hpp"

namespace {

int exit_code(const skillnet::Error& e) {
  if (dynamic_cast<const skillnet::ArgumentError*>(&e)) return 2;
  if (dynamic_cast<const skillnet::MissingArtifactError*>(&e)) return 3;
  if (dynamic_cast<const skillnet::StaleCacheError*>(&e)) return 4;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skill co-occurrence networks and multiscale skill clusters"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(skillnet::kVersion));

  std::string config_path;
  int threads = 0;
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> stride;
  std::vector<std::string> sets;

  app.add_option("-c,--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("-t,--threads", threads, "worker threads (0 keeps the OpenMP default)")->check(CLI::NonNegativeNumber);
  app.add_flag("-f,--force", force, "ignore cached and stale artifacts and recompute");
  app.add_option("--seed", seed, "random seed (overrides config)");
  app.add_option("--stride", stride, "keep every N-th advert (overrides ingest.stride)")->check(CLI::PositiveNumber);
  app.add_option("--set", sets, "override a config key, e.g. --set graph.k=10");
  app.footer(
      "Environment: SKILLNET_<KEY> overrides config keys, with '__' for nesting\n"
      "(SKILLNET_GRAPH__K=10 sets graph.k). Precedence: file < environment < flags.");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "parse, deduplicate and map adverts; build the co-occurrence matrix"},
      {"embed", "correspondence-analysis embedding of the skills"},
      {"graph", "CkNN skill similarity graph"},
      {"cluster", "Markov Stability scale scan and robust partition selection"},
      {"metrics", "cluster reports, centralities, coverage and label prompts"},
      {"panel", "regional profiles, z-scores, dendrograms and period comparison"},
      {"synth", "generate a planted synthetic corpus"},
      {"all", "run every analysis stage in order, reusing up-to-date artifacts"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw skillnet::ArgumentError("--set expects key=value, got '" + s + "'");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed) overrides.emplace_back("seed", std::to_string(*seed));
    if (stride) overrides.emplace_back("ingest.stride", std::to_string(*stride));

    const auto config = config_path.empty()
                            ? skillnet::parse_config("{}", ".", overrides, true)
                            : skillnet::load_config(config_path, overrides, true);
    const auto stage = skillnet::parse_stage(app.get_subcommands().front()->get_name());
    const auto outcomes = skillnet::run_stage(stage, config, {force, threads});
    for (const auto& o : outcomes) {
      std::cout << skillnet::stage_name(o.stage) << ": " << (o.cached ? "up to date" : "done") << '\n';
      for (const auto& w : o.warnings) std::cerr << "warning: " << skillnet::stage_name(o.stage) << ": " << w << '\n';
    }
    return 0;
  } catch (const skillnet::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
