#include "skillnet/pipeline.hpp"

#include <omp.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "skillnet/csv.hpp"
#include "skillnet/embedding.hpp"
#include "skillnet/error.hpp"
#include "skillnet/graph.hpp"
#include "skillnet/network.hpp"
#include "skillnet/panel.hpp"
#include "skillnet/stability.hpp"

extern char** environ;

namespace skillnet {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- stages

Stage parse_stage(std::string_view name) {
  static const std::map<std::string_view, Stage> names = {
      {"ingest", Stage::ingest}, {"embed", Stage::embed},   {"graph", Stage::graph},
      {"cluster", Stage::cluster}, {"metrics", Stage::metrics}, {"panel", Stage::panel},
      {"synth", Stage::synth},   {"all", Stage::all}};
  auto it = names.find(name);
  if (it == names.end()) throw ArgumentError("unknown stage '" + std::string(name) + "'");
  return it->second;
}

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::embed: return "embed";
    case Stage::graph: return "graph";
    case Stage::cluster: return "cluster";
    case Stage::metrics: return "metrics";
    case Stage::panel: return "panel";
    case Stage::synth: return "synth";
    case Stage::all: return "all";
  }
  return "?";
}

// ---------------------------------------------------------------- hashing and files

namespace {

std::string hex(const unsigned char* bytes, unsigned int n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (unsigned int i = 0; i < n; ++i) {
    out.push_back(digits[bytes[i] >> 4]);
    out.push_back(digits[bytes[i] & 15]);
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 unavailable");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string finish() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    EVP_DigestFinal_ex(ctx_, digest, &n);
    return hex(digest, n);
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.finish();
}

std::string sha256_text(std::string_view text) {
  Sha256 h;
  h.update(text.data(), text.size());
  return h.finish();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------- configuration

namespace {

void set_path(json& doc, const std::string& dotted, json value) {
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ArgumentError("malformed config key '" + dotted + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

class Reader {
 public:
  Reader(const json& node, std::string where) : node_(node), where_(std::move(where)) {
    if (!node_.is_object()) throw ArgumentError("config: '" + where_ + "' must be an object");
  }

  // Rejects keys nobody asked for, which catches typos.
  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ArgumentError("config: unknown key '" + path(key) + "'");
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (const json* v = find(key)) out = convert<T>(*v, key);
  }
  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    if (const json* v = find(key)) out = convert<T>(*v, key);
  }
  void get(const std::string& key, fs::path& out) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = s;
  }

  Reader child(const std::string& key) {
    static const json empty = json::object();
    const json* v = find(key);
    return Reader(v ? *v : empty, path(key));
  }
  bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

 private:
  template <typename T>
  T convert(const json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (v.is_string()) {
          const auto s = v.get<std::string>();
          if (s == "true" || s == "1") return true;
          if (s == "false" || s == "0") return false;
        }
        if (!v.is_boolean()) throw ArgumentError("expected true or false");
        return v.get<bool>();
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v.is_number()) throw ArgumentError("expected a number");
        if constexpr (std::is_integral_v<T>) {
          const double d = v.get<double>();
          if (d != static_cast<double>(static_cast<long long>(d))) throw ArgumentError("expected an integer");
        }
        return v.get<T>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number()) return v.dump();
        throw ArgumentError("expected a string");
      } else {
        return v.get<T>();
      }
    } catch (const ArgumentError& e) {
      throw ArgumentError("config: '" + path(key) + "': " + e.what());
    } catch (const json::exception&) {
      throw ArgumentError("config: '" + path(key) + "' has the wrong type");
    }
  }

  const json& node_;
  std::string where_;
  std::set<std::string> seen_;
};

DateRange parse_range(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_string() || !v[1].is_string()) {
    throw ArgumentError("config: '" + key + "' must be [\"YYYY-MM-DD\", \"YYYY-MM-DD\"]");
  }
  DateRange r{parse_date(v[0].get<std::string>()), parse_date(v[1].get<std::string>())};
  if (r.end < r.begin) throw ArgumentError("config: '" + key + "' ends before it begins");
  return r;
}

PipelineConfig from_json(const json& doc, const fs::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  Reader root(doc, "");
  {
    auto in = root.child("inputs");
    in.get("adverts", c.adverts);
    std::string format = "jsonl";
    in.get("format", format);
    c.adverts_format = parse_advert_format(format);
    in.get("lexicon", c.lexicon);
    in.get("regions", c.regions);
    in.get("embeddings", c.embeddings);
    in.get("categories", c.categories);
    in.finish();
  }
  root.get("output_dir", c.output_dir);
  root.get("seed", c.seed);
  {
    auto r = root.child("ingest");
    r.get("stride", c.stride);
    r.finish();
  }
  {
    auto r = root.child("embedding");
    r.get("n_components", c.n_components);
    r.get("include_diagonal", c.include_diagonal);
    r.get("dump_similarity", c.dump_similarity);
    r.finish();
  }
  {
    auto r = root.child("graph");
    r.get("k", c.cknn_k);
    r.get("delta", c.cknn_delta);
    r.finish();
  }
  {
    auto r = root.child("scales");
    r.get("count", c.scale_count);
    r.get("log10_min", c.log10_min);
    r.get("log10_max", c.log10_max);
    r.get("min_clusters", c.min_clusters);
    r.get("max_clusters", c.max_clusters);
    r.finish();
  }
  {
    auto r = root.child("optimizer");
    r.get("runs", c.runs_per_scale);
    r.get("nvi_runs", c.nvi_runs);
    r.finish();
  }
  {
    auto r = root.child("selection");
    r.get("window", c.block_nvi_window);
    r.get("threshold", c.run_nvi_threshold);
    r.get("max_partitions", c.max_partitions);
    r.finish();
  }
  {
    auto r = root.child("metrics");
    std::string lengths = "distance";
    r.get("path_lengths", lengths);
    c.path_lengths = parse_path_length(lengths);
    r.finish();
  }
  {
    auto r = root.child("panel");
    if (const json* v = r.find("period_a")) c.period_a = parse_range(*v, "panel.period_a");
    if (const json* v = r.find("period_b")) c.period_b = parse_range(*v, "panel.period_b");
    r.finish();
    if (c.period_a.has_value() != c.period_b.has_value()) {
      throw ArgumentError("config: panel.period_a and panel.period_b go together");
    }
  }
  c.synth_dir = c.output_dir / "synth";
  if (root.has("synth")) {
    auto r = root.child("synth");
    PlantedSpec s;
    r.get("output", c.synth_dir);
    r.get("n_skills", s.n_skills);
    r.get("cluster_sizes", s.cluster_sizes);
    r.get("levels", s.levels);
    r.get("level_affinity", s.level_affinity);
    r.get("n_adverts", s.n_adverts);
    r.get("p_in", s.p_in);
    r.get("p_out", s.p_out);
    r.get("mean_skills", s.mean_skills);
    r.get("dispersion", s.dispersion);
    r.get("salary_means", s.salary_means);
    r.get("region_weights", s.region_weights);
    s.seed = c.seed;
    r.get("seed", s.seed);
    r.get("duplicate_fraction", s.duplicate_fraction);
    r.get("noise_skill_fraction", s.noise_skill_fraction);
    r.finish();
    c.synth = s;
    // A synthetic run reads its own corpus unless inputs say otherwise.
    if (c.adverts.empty()) c.adverts = c.synth_dir / "adverts.jsonl";
    if (c.lexicon.empty()) c.lexicon = c.synth_dir / "lexicon.csv";
    if (c.regions.empty()) c.regions = c.synth_dir / "regions.csv";
    if (c.embeddings.empty()) c.embeddings = c.synth_dir / "embeddings.csv";
    if (c.categories.empty()) c.categories = c.synth_dir / "categories.csv";
  }
  root.finish();
  c.validate();
  return c;
}

json layered(json doc, const std::vector<std::pair<std::string, std::string>>& overrides, bool use_env) {
  if (doc.is_null()) doc = json::object();
  if (use_env && environ) {
    std::vector<std::pair<std::string, std::string>> vars;
    for (char** e = environ; *e; ++e) {
      std::string_view entry(*e);
      if (entry.substr(0, kEnvPrefix.size()) != kEnvPrefix) continue;
      const auto eq = entry.find('=');
      if (eq == std::string_view::npos) continue;
      std::string key(entry.substr(kEnvPrefix.size(), eq - kEnvPrefix.size()));
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
      std::string dotted;
      for (std::size_t i = 0; i < key.size(); ++i) {
        if (key[i] == '_' && i + 1 < key.size() && key[i + 1] == '_') {
          dotted.push_back('.');
          ++i;
        } else {
          dotted.push_back(key[i]);
        }
      }
      vars.emplace_back(dotted, std::string(entry.substr(eq + 1)));
    }
    // Environment order is arbitrary; apply in key order.
    std::sort(vars.begin(), vars.end());
    for (const auto& [key, value] : vars) set_path(doc, key, parse_value(value));
  }
  for (const auto& [key, value] : overrides) set_path(doc, key, parse_value(value));
  return doc;
}

}  // namespace

fs::path PipelineConfig::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

void PipelineConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ArgumentError("config: " + what);
  };
  require(stride >= 1, "ingest.stride must be >= 1");
  require(n_components >= 1, "embedding.n_components must be >= 1");
  require(cknn_k >= 1, "graph.k must be >= 1");
  require(cknn_delta > 0.0, "graph.delta must be > 0");
  require(scale_count >= 3, "scales.count must be >= 3");
  require(min_clusters >= 1 && max_clusters >= min_clusters,
          "scales.min_clusters must be >= 1 and <= scales.max_clusters");
  require(log10_min.has_value() == log10_max.has_value(), "scales.log10_min and scales.log10_max go together");
  require(!log10_min || *log10_min < *log10_max, "scales.log10_min must be below scales.log10_max");
  require(runs_per_scale >= 1, "optimizer.runs must be >= 1");
  require(nvi_runs >= 2, "optimizer.nvi_runs must be >= 2");
  require(block_nvi_window >= 1, "selection.window must be >= 1");
  require(2 * block_nvi_window + 1 <= scale_count, "selection.window is too wide for scales.count");
  require(run_nvi_threshold >= 0.0 && run_nvi_threshold <= 1.0, "selection.threshold must lie in [0, 1]");
  require(max_partitions >= 1, "selection.max_partitions must be >= 1");
  require(!output_dir.empty(), "output_dir must be set");
}

std::string PipelineConfig::stage_parameters(Stage stage) const {
  json j = json::object();
  switch (stage) {
    case Stage::ingest:
      j["format"] = adverts_format == AdvertFormat::jsonl ? "jsonl" : "csv";
      j["stride"] = stride;
      j["seed"] = seed;
      break;
    case Stage::embed:
      j["n_components"] = n_components;
      j["include_diagonal"] = include_diagonal;
      j["dump_similarity"] = dump_similarity;
      break;
    case Stage::graph:
      j["k"] = cknn_k;
      j["delta"] = cknn_delta;
      break;
    case Stage::cluster:
      j["count"] = scale_count;
      j["log10_min"] = log10_min ? json(*log10_min) : json(nullptr);
      j["log10_max"] = log10_max ? json(*log10_max) : json(nullptr);
      j["min_clusters"] = min_clusters;
      j["max_clusters"] = max_clusters;
      j["runs"] = runs_per_scale;
      j["nvi_runs"] = nvi_runs;
      j["window"] = block_nvi_window;
      j["threshold"] = run_nvi_threshold;
      j["max_partitions"] = max_partitions;
      j["seed"] = seed;
      break;
    case Stage::metrics:
      j["path_lengths"] = path_lengths == PathLength::distance ? "distance" : "unit";
      break;
    case Stage::panel:
      j["seed"] = seed;
      j["path_lengths"] = path_lengths == PathLength::distance ? "distance" : "unit";
      j["n_components"] = n_components;
      j["include_diagonal"] = include_diagonal;
      j["k"] = cknn_k;
      j["delta"] = cknn_delta;
      if (period_a) {
        j["period_a"] = {format_date(period_a->begin), format_date(period_a->end)};
        j["period_b"] = {format_date(period_b->begin), format_date(period_b->end)};
      }
      break;
    case Stage::synth:
      if (synth) {
        const auto& s = *synth;
        j = {{"n_skills", s.n_skills},
             {"cluster_sizes", s.cluster_sizes},
             {"levels", s.levels},
             {"level_affinity", s.level_affinity},
             {"n_adverts", s.n_adverts},
             {"p_in", s.p_in},
             {"p_out", s.p_out},
             {"mean_skills", s.mean_skills},
             {"dispersion", s.dispersion},
             {"salary_means", s.salary_means},
             {"region_weights", s.region_weights},
             {"seed", s.seed},
             {"duplicate_fraction", s.duplicate_fraction},
             {"noise_skill_fraction", s.noise_skill_fraction}};
      }
      break;
    case Stage::all:
      break;
  }
  return j.dump();
}

PipelineConfig parse_config(std::string_view json_text, const fs::path& base_dir,
                            const std::vector<std::pair<std::string, std::string>>& overrides,
                            bool use_environment) {
  json doc;
  try {
    doc = json_text.empty() ? json::object() : json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(layered(std::move(doc), overrides, use_environment), base_dir);
}

PipelineConfig load_config(const fs::path& path,
                           const std::vector<std::pair<std::string, std::string>>& overrides,
                           bool use_environment) {
  const std::string text = read_file(path);
  fs::path base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(text, base, overrides, use_environment);
}

// ---------------------------------------------------------------- stage plumbing

namespace {

std::vector<Stage> upstream_of(Stage stage) {
  switch (stage) {
    case Stage::embed: return {Stage::ingest};
    case Stage::graph: return {Stage::embed};
    case Stage::cluster: return {Stage::graph};
    case Stage::metrics: return {Stage::cluster};
    case Stage::panel: return {Stage::cluster};
    default: return {};
  }
}

fs::path stage_dir(const PipelineConfig& c, Stage stage) {
  if (stage == Stage::synth) return c.resolve(c.synth_dir);
  return c.resolve(c.output_dir) / std::string(stage_name(stage));
}

// Input files a stage reads directly (not through upstream artifacts).
std::vector<std::pair<std::string, fs::path>> direct_inputs(const PipelineConfig& c, Stage stage) {
  std::vector<std::pair<std::string, fs::path>> out;
  auto need = [&](const char* key, const fs::path& p) {
    if (p.empty()) throw ArgumentError("config: inputs." + std::string(key) + " is required by " + std::string(stage_name(stage)));
    out.emplace_back(key, c.resolve(p));
  };
  switch (stage) {
    case Stage::ingest:
      need("adverts", c.adverts);
      need("lexicon", c.lexicon);
      need("regions", c.regions);
      break;
    case Stage::metrics:
      if (!c.embeddings.empty()) out.emplace_back("embeddings", c.resolve(c.embeddings));
      if (!c.categories.empty()) out.emplace_back("categories", c.resolve(c.categories));
      break;
    case Stage::panel:
      need("regions", c.regions);
      break;
    default:
      break;
  }
  return out;
}

struct StageKey {
  std::string hash;
  json inputs = json::object();
  json upstream = json::object();
  json parameters;
};

StageKey stage_key(const PipelineConfig& c, Stage stage, std::map<Stage, StageKey>& memo) {
  if (auto it = memo.find(stage); it != memo.end()) return it->second;
  StageKey key;
  key.parameters = json::parse(c.stage_parameters(stage));
  for (const auto& [name, path] : direct_inputs(c, stage)) {
    if (!fs::exists(path)) {
      if (stage == Stage::ingest && c.synth) {
        throw MissingArtifactError("input " + path.string() + " does not exist; run `skillnet synth` first", "synth");
      }
      throw IoError("input " + name + " not found: " + path.string());
    }
    key.inputs[name] = sha256_file(path);
  }
  for (Stage up : upstream_of(stage)) key.upstream[std::string(stage_name(up))] = stage_key(c, up, memo).hash;
  std::string material = std::string(kVersion) + "\n" + std::string(stage_name(stage)) + "\n" +
                         key.parameters.dump() + "\n" + key.inputs.dump() + "\n" + key.upstream.dump();
  key.hash = sha256_text(material);
  memo[stage] = key;
  return key;
}

std::optional<json> read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  if (!fs::exists(path)) return std::nullopt;
  try {
    return json::parse(read_file(path));
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

// Manifest present and every listed output still has its recorded hash.
bool artifacts_intact(const fs::path& dir, const json& manifest) {
  if (!manifest.contains("outputs") || !manifest["outputs"].is_object()) return false;
  for (const auto& [name, hash] : manifest["outputs"].items()) {
    const fs::path p = dir / name;
    if (!fs::exists(p) || sha256_file(p) != hash.get<std::string>()) return false;
  }
  return true;
}

// Collects outputs as temporaries and publishes them together, manifest last.
class StageWriter {
 public:
  explicit StageWriter(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    fs::remove(dir_ / "manifest.json");
  }

  fs::path path(const std::string& name) {
    fs::path tmp = dir_ / (name + ".tmp");
    if (tmp.has_parent_path()) fs::create_directories(tmp.parent_path());
    names_.push_back(name);
    return tmp;
  }
  void text(const std::string& name, std::string_view contents) {
    const fs::path p = path(name);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("cannot write " + p.string());
  }

  void commit(Stage stage, const StageKey& key, const std::optional<json>& previous,
              const std::vector<std::string>& warnings) {
    json outputs = json::object();
    for (const auto& name : names_) {
      const fs::path final_path = dir_ / name;
      fs::rename(dir_ / (name + ".tmp"), final_path);
      outputs[name] = sha256_file(final_path);
    }
    // Outputs of an earlier run that this run did not produce would be stale.
    if (previous && previous->contains("outputs")) {
      for (const auto& [name, hash] : (*previous)["outputs"].items()) {
        if (!outputs.contains(name)) fs::remove(dir_ / name);
      }
    }
    json manifest = {{"stage", stage_name(stage)},
                     {"version", kVersion},
                     {"stage_hash", key.hash},
                     {"parameters", key.parameters},
                     {"inputs", key.inputs},
                     {"upstream", key.upstream},
                     {"outputs", outputs},
                     {"warnings", warnings}};
    write_file_atomic(dir_ / "manifest.json", dump(manifest));
  }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

void check_upstream(const PipelineConfig& c, Stage stage, std::map<Stage, StageKey>& memo, bool force) {
  for (Stage up : upstream_of(stage)) {
    const auto dir = stage_dir(c, up);
    const auto manifest = read_manifest(dir);
    if (!manifest || !artifacts_intact(dir, *manifest)) {
      throw MissingArtifactError("missing or incomplete " + std::string(stage_name(up)) + " artifacts in " +
                                     dir.string() + "; run `skillnet " + std::string(stage_name(up)) + "` first",
                                 std::string(stage_name(up)));
    }
    check_upstream(c, up, memo, force);
    if (!force && (*manifest)["stage_hash"] != stage_key(c, up, memo).hash) {
      throw StaleCacheError("cached " + std::string(stage_name(up)) + " artifacts in " + dir.string() +
                            " were built from a different configuration or inputs; rerun `skillnet " +
                            std::string(stage_name(up)) + "` or pass --force");
    }
  }
}

// ---------------------------------------------------------------- shared readers

struct MappedAdvert {
  std::string id;
  Date date{};
  std::optional<std::string> region;
  std::optional<double> salary;
  std::vector<std::string> skills;
};

std::vector<MappedAdvert> read_mapped(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<MappedAdvert> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    MappedAdvert a;
    a.id = j.at("id").get<std::string>();
    a.date = parse_date(j.at("date").get<std::string>());
    if (!j.at("region").is_null()) a.region = j.at("region").get<std::string>();
    if (!j.at("salary").is_null()) a.salary = j.at("salary").get<double>();
    a.skills = j.at("skills").get<std::vector<std::string>>();
    out.push_back(std::move(a));
  }
  return out;
}

// Advert skills as node indices of g, skills outside the graph left out.
std::vector<std::vector<int>> to_nodes(const std::vector<MappedAdvert>& adverts, const SkillGraph& g) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) index[g.name(i)] = static_cast<int>(i);
  std::vector<std::vector<int>> out;
  out.reserve(adverts.size());
  for (const auto& a : adverts) {
    auto& nodes = out.emplace_back();
    for (const auto& s : a.skills) {
      if (auto it = index.find(s); it != index.end()) nodes.push_back(it->second);
    }
  }
  return out;
}

struct SelectedPartition {
  std::string label;
  double scale = 0.0;
  Partition partition;
};

std::pair<SkillGraph, std::vector<SelectedPartition>> read_clusters(const PipelineConfig& c) {
  const auto graph_dir = stage_dir(c, Stage::graph);
  const auto cluster_dir = stage_dir(c, Stage::cluster);
  SkillGraph g = load_graph(graph_dir / "edges.csv", graph_dir / "nodes.csv");
  const json selected = json::parse(read_file(cluster_dir / "selected.json"));
  const auto table = csv::read_table(cluster_dir / "partitions.csv");
  if (table.rows.size() != g.n_nodes()) throw FormatError("partitions.csv does not match the graph nodes");
  std::vector<SelectedPartition> out;
  for (const auto& item : selected.at("partitions")) {
    SelectedPartition sp;
    sp.label = item.at("label").get<std::string>();
    sp.scale = item.at("scale").get<double>();
    const int col = table.column(sp.label);
    if (col < 0) throw FormatError("partitions.csv lacks column " + sp.label);
    std::vector<int> labels;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      if (table.rows[i].at(0) != g.name(i)) throw FormatError("partitions.csv rows are out of node order");
      labels.push_back(static_cast<int>(csv::parse_int(table.rows[i].at(col))));
    }
    sp.partition = Partition(labels);
    out.push_back(std::move(sp));
  }
  return {std::move(g), std::move(out)};
}

std::string opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }
json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename Fn>
std::string csv_text(Fn&& fill) {
  std::ostringstream out;
  fill(out);
  return out.str();
}

// ---------------------------------------------------------------- stage bodies

std::vector<std::string> run_synth(const PipelineConfig& c, StageWriter& w) {
  if (!c.synth) throw ArgumentError("config has no synth section");
  const auto corpus = generate_corpus(*c.synth);
  const fs::path scratch = stage_dir(c, Stage::synth) / ".scratch";
  fs::remove_all(scratch);
  write_corpus(corpus, scratch);
  for (const char* name : {"adverts.jsonl", "ground_truth.csv", "lexicon.csv", "regions.csv", "categories.csv",
                           "embeddings.csv"}) {
    fs::rename(scratch / name, w.path(name));
  }
  fs::remove_all(scratch);
  return {};
}

std::vector<std::string> run_ingest(const PipelineConfig& c, StageWriter& w) {
  std::vector<std::string> warnings;
  const auto parsed = parse_adverts(c.resolve(c.adverts), c.adverts_format);
  if (parsed.malformed) warnings.push_back(std::to_string(parsed.malformed) + " malformed advert records skipped");
  const auto unique = deduplicate(parsed.records);
  const auto sample = subsample(unique, c.stride);
  const auto lexicon = SkillLexicon::load(c.resolve(c.lexicon));
  const auto regions = RegionTable::load(c.resolve(c.regions));

  MappingStats stats;
  std::vector<std::vector<std::string>> mapped;
  std::size_t unresolved = 0;
  std::ostringstream adverts;
  for (const auto& rec : sample) {
    auto skills = map_skills(rec, lexicon, &stats);
    const auto region = resolve_region(rec, regions, c.seed);
    if (!region) ++unresolved;
    json j = {{"id", rec.id},
              {"date", format_date(rec.first_posted)},
              {"region", region ? json(*region) : json(nullptr)},
              {"salary", opt_json(rec.salary)},
              {"skills", skills}};
    adverts << j.dump() << '\n';
    mapped.push_back(std::move(skills));
  }
  if (stats.unknown) warnings.push_back(std::to_string(stats.unknown) + " raw skill mentions not in the lexicon");
  if (unresolved) warnings.push_back(std::to_string(unresolved) + " adverts with an unmapped location");

  const auto vocab = mentioned_vocabulary(mapped, true);
  const auto k = build_cooccurrence(mapped, vocab);
  w.text("adverts.jsonl", adverts.str());
  save_cooccurrence(k, w.path("cooccurrence.csv"), w.path("vocabulary.csv"));
  json s = {{"parsed", parsed.records.size()},
            {"malformed", parsed.malformed},
            {"duplicates_removed", parsed.records.size() - unique.size()},
            {"adverts", sample.size()},
            {"dropped_mentions", stats.dropped},
            {"unknown_mentions", stats.unknown},
            {"unresolved_regions", unresolved},
            {"skills", vocab.size()}};
  w.text("stats.json", dump(s));
  return warnings;
}

std::vector<std::string> run_embed(const PipelineConfig& c, StageWriter& w) {
  const auto dir = stage_dir(c, Stage::ingest);
  auto k = load_cooccurrence(dir / "cooccurrence.csv", dir / "vocabulary.csv");
  std::vector<std::string> warnings;
  if (!c.include_diagonal) {
    // Without the diagonal, skills never co-mentioned have empty rows.
    std::vector<std::string> keep;
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < k.n_skills(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (k.counts.row(ii).sum() - k.counts(ii, ii) > 0) {
        keep.push_back(k.vocabulary.name(i));
        rows.push_back(ii);
      }
    }
    if (keep.size() < k.n_skills()) {
      warnings.push_back(std::to_string(k.n_skills() - keep.size()) + " skills never co-mentioned were left out");
      CooccurrenceMatrix sub;
      sub.vocabulary = Vocabulary(keep);
      sub.n_adverts = k.n_adverts;
      sub.counts = k.counts(rows, rows);
      k = std::move(sub);
    }
  }
  const auto e = correspondence_analysis(k, {c.n_components, c.include_diagonal});
  if (e.dimension() < c.n_components) {
    warnings.push_back("embedding truncated to rank " + std::to_string(e.dimension()));
  }
  save_embedding(e, w.path("embedding.csv"), w.path("inertia.csv"));
  if (c.dump_similarity) save_similarity_binary(cosine_similarity(e), w.path("similarity.bin"));
  return warnings;
}

std::vector<std::string> run_graph(const PipelineConfig& c, StageWriter& w) {
  const auto dir = stage_dir(c, Stage::embed);
  const auto e = load_embedding(dir / "embedding.csv", dir / "inertia.csv");
  SparsifyReport report;
  const auto comp = build_graph(e, c.cknn_k, c.cknn_delta, &report);
  std::vector<std::string> warnings;
  if (!comp.dropped.empty()) {
    warnings.push_back(std::to_string(comp.dropped.size()) + " skills outside the largest component were dropped");
  }
  save_graph(comp.graph, w.path("edges.csv"), w.path("nodes.csv"));
  save_dot(comp.graph, w.path("graph.dot"));
  w.text("dropped.csv", csv_text([&](std::ostream& out) {
           csv::write_row(out, {"skill"});
           for (const auto& s : comp.dropped) csv::write_row(out, {s});
         }));
  json s = {{"nodes", comp.graph.n_nodes()},
            {"edges", comp.graph.n_edges()},
            {"candidate_pairs", report.candidate_edges},
            {"cknn_edges", report.retained_edges + report.nonpositive_dropped},
            {"nonpositive_dropped", report.nonpositive_dropped},
            {"dropped_nodes", comp.dropped.size()}};
  w.text("stats.json", dump(s));
  return warnings;
}

std::vector<std::string> run_cluster(const PipelineConfig& c, StageWriter& w) {
  const auto dir = stage_dir(c, Stage::graph);
  const auto g = load_graph(dir / "edges.csv", dir / "nodes.csv");
  const auto ops = build_operators(g);
  std::vector<std::string> warnings;

  ScaleBracket bracket;
  if (c.log10_min) {
    bracket = {*c.log10_min, *c.log10_max};
  } else {
    bracket = bracket_scales(ops, c.min_clusters, c.max_clusters, c.seed);
  }
  const auto grid = ScaleGrid::logarithmic(bracket.log10_min, bracket.log10_max, c.scale_count);
  const auto scan = scan_scales(ops, grid, {c.runs_per_scale, c.nvi_runs, c.seed});
  const auto sel = select_robust_scales(scan, {c.block_nvi_window, c.max_partitions, c.run_nvi_threshold});
  warnings.insert(warnings.end(), sel.warnings.begin(), sel.warnings.end());

  w.text("scan_summary.csv", csv_text([&](std::ostream& out) {
           csv::write_row(out, {"index", "scale", "n_clusters", "stability", "run_nvi", "block_nvi"});
           for (std::size_t t = 0; t < scan.size(); ++t) {
             const auto& r = scan.results[t];
             csv::write_row(out, {std::to_string(t), csv::format_double(r.scale),
                                  std::to_string(r.partition.n_clusters()), csv::format_double(r.stability),
                                  csv::format_double(r.run_nvi), csv::format_double(sel.block_nvi[t])});
           }
         }));
  w.text("nvi_matrix.csv", csv_text([&](std::ostream& out) {
           for (Eigen::Index i = 0; i < scan.nvi_matrix.rows(); ++i) {
             csv::Row row;
             for (Eigen::Index j = 0; j < scan.nvi_matrix.cols(); ++j) row.push_back(csv::format_double(scan.nvi_matrix(i, j)));
             csv::write_row(out, row);
           }
         }));

  // Fine to coarse, labelled p1, p2, ... in that order.
  std::vector<const RobustScale*> chosen;
  for (const auto& s : sel.selected) chosen.push_back(&s);
  std::sort(chosen.begin(), chosen.end(), [](const RobustScale* a, const RobustScale* b) { return a->index < b->index; });
  json selected = {{"log10_min", bracket.log10_min}, {"log10_max", bracket.log10_max}, {"partitions", json::array()}};
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    const auto* s = chosen[k];
    const auto rank = static_cast<std::size_t>(s - sel.selected.data()) + 1;
    selected["partitions"].push_back({{"label", "p" + std::to_string(k + 1)},
                                      {"rank", rank},
                                      {"index", s->index},
                                      {"scale", s->scale},
                                      {"n_clusters", s->partition.n_clusters()},
                                      {"block_nvi", s->block_nvi},
                                      {"depth", s->depth},
                                      {"run_nvi", scan.results[s->index].run_nvi}});
  }
  w.text("selected.json", dump(selected));
  w.text("partitions.csv", csv_text([&](std::ostream& out) {
           csv::Row header{"skill"};
           for (std::size_t k = 0; k < chosen.size(); ++k) header.push_back("p" + std::to_string(k + 1));
           csv::write_row(out, header);
           for (std::size_t i = 0; i < g.n_nodes(); ++i) {
             csv::Row row{g.name(i)};
             for (const auto* s : chosen) row.push_back(std::to_string(s->partition.cluster_of(i)));
             csv::write_row(out, row);
           }
         }));

  std::vector<Partition> ordered;
  for (const auto* s : chosen) ordered.push_back(s->partition);
  json flows = json::array();
  if (ordered.size() >= 2) {
    const auto links = hierarchy_links(ordered);
    for (std::size_t k = 0; k < links.size(); ++k) {
      json counts = json::array();
      for (Eigen::Index a = 0; a < links[k].counts.rows(); ++a) {
        json row = json::array();
        for (Eigen::Index b = 0; b < links[k].counts.cols(); ++b) row.push_back(links[k].counts(a, b));
        counts.push_back(row);
      }
      flows.push_back({{"fine", "p" + std::to_string(k + 1)},
                       {"coarse", "p" + std::to_string(k + 2)},
                       {"quasi_hierarchy", links[k].quasi_hierarchy},
                       {"counts", counts}});
    }
  }
  w.text("hierarchy.json", dump({{"links", flows}}));
  return warnings;
}

std::vector<std::string> run_metrics(const PipelineConfig& c, StageWriter& w) {
  auto [g, partitions] = read_clusters(c);
  const auto adverts = read_mapped(stage_dir(c, Stage::ingest) / "adverts.jsonl");
  const auto nodes = to_nodes(adverts, g);
  std::vector<std::optional<double>> salaries;
  for (const auto& a : adverts) salaries.push_back(a.salary);
  std::vector<std::string> warnings;
  if (partitions.empty()) warnings.push_back("no robust partition was selected; only centralities are reported");

  std::optional<SemanticEmbeddings> semantic;
  if (!c.embeddings.empty()) semantic = SemanticEmbeddings::load(c.resolve(c.embeddings));
  std::optional<TaxonomyCategories> categories;
  if (!c.categories.empty()) categories = TaxonomyCategories::load(c.resolve(c.categories));

  const auto close = closeness(g, c.path_lengths);
  const auto between = betweenness(g, c.path_lengths);
  const auto eigen = eigenvector_centrality(g);
  w.text("centrality.csv", csv_text([&](std::ostream& out) {
           csv::write_row(out, {"skill", "closeness", "betweenness", "eigenvector"});
           for (std::size_t i = 0; i < g.n_nodes(); ++i) {
             csv::write_row(out, {g.name(i), csv::format_double(close[i]), csv::format_double(between[i]),
                                  csv::format_double(eigen[i])});
           }
         }));

  const auto k = build_cooccurrence(std::span<const std::vector<int>>(nodes), Vocabulary(g.names()));
  for (const auto& sp : partitions) {
    ReportInputs in;
    in.graph = &g;
    in.partition = &sp.partition;
    in.adverts = &nodes;
    in.salaries = &salaries;
    in.embeddings = semantic ? &*semantic : nullptr;
    in.categories = categories ? &*categories : nullptr;
    in.closeness = &close;
    in.path_lengths = c.path_lengths;
    const auto report = cluster_report(in);

    json clusters = json::array();
    for (const auto& s : report) {
      clusters.push_back({{"cluster", s.cluster},
                          {"n_skills", s.n_skills},
                          {"n_mentions", s.n_mentions},
                          {"average_mentions", s.average_mentions},
                          {"semantic_similarity", opt_json(s.semantic_similarity)},
                          {"median_containment", opt_json(s.median_containment)},
                          {"median_closeness", opt_json(s.median_closeness)},
                          {"average_salary", opt_json(s.average_salary)},
                          {"entropy", opt_json(s.entropy)},
                          {"label_skills", s.label_skills}});
      w.text("prompts/" + sp.label + "_cluster" + std::to_string(s.cluster) + ".txt", s.label_prompt + "\n");
    }
    w.text("report_" + sp.label + ".json", dump({{"partition", sp.label}, {"scale", sp.scale}, {"clusters", clusters}}));
    w.text("report_" + sp.label + ".csv", csv_text([&](std::ostream& out) {
             csv::write_row(out, {"cluster", "n_skills", "n_mentions", "average_mentions", "semantic_similarity",
                                  "median_containment", "median_closeness", "average_salary", "entropy",
                                  "label_skills"});
             for (const auto& s : report) {
               std::string labels;
               for (const auto& l : s.label_skills) labels += (labels.empty() ? "" : ";") + l;
               csv::write_row(out, {std::to_string(s.cluster), std::to_string(s.n_skills), std::to_string(s.n_mentions),
                                    csv::format_double(s.average_mentions), opt(s.semantic_similarity),
                                    opt(s.median_containment), opt(s.median_closeness), opt(s.average_salary),
                                    opt(s.entropy), labels});
             }
           }));
    const auto coverage = coverage_matrix(k, sp.partition);
    w.text("coverage_" + sp.label + ".csv", csv_text([&](std::ostream& out) {
             for (Eigen::Index a = 0; a < coverage.rows(); ++a) {
               csv::Row row;
               for (Eigen::Index b = 0; b < coverage.cols(); ++b) row.push_back(csv::format_double(coverage(a, b)));
               csv::write_row(out, row);
             }
           }));
    if (categories) {
      const auto cw = crosswalk(sp.partition, g.names(), *categories);
      json links = json::array();
      for (Eigen::Index a = 0; a < cw.counts.rows(); ++a) {
        for (Eigen::Index b = 0; b < cw.counts.cols(); ++b) {
          if (cw.counts(a, b) > 0) links.push_back({{"cluster", a}, {"category", cw.categories[b]}, {"skills", cw.counts(a, b)}});
        }
      }
      w.text("crosswalk_" + sp.label + ".json", dump({{"categories", cw.categories}, {"links", links}}));
    }
  }
  return warnings;
}

json dendrogram_json(const Dendrogram& d, const std::vector<std::string>& leaves) {
  json merges = json::array();
  for (const auto& m : d.merges) {
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  }
  json order = json::array();
  for (int leaf : d.leaf_order) order.push_back(leaves[static_cast<std::size_t>(leaf)]);
  return {{"leaves", leaves}, {"merges", merges}, {"leaf_order", order}};
}

std::vector<std::string> run_panel(const PipelineConfig& c, StageWriter& w) {
  auto [g, partitions] = read_clusters(c);
  const auto adverts = read_mapped(stage_dir(c, Stage::ingest) / "adverts.jsonl");
  const auto nodes = to_nodes(adverts, g);
  const auto regions = RegionTable::load(c.resolve(c.regions));
  std::vector<std::optional<std::string>> advert_regions;
  for (const auto& a : adverts) advert_regions.push_back(a.region);
  std::vector<std::string> warnings;
  if (partitions.empty()) warnings.push_back("no robust partition was selected; nothing to profile");

  for (const auto& sp : partitions) {
    const int n_clusters = sp.partition.n_clusters();
    const auto profiles = region_profiles(advert_regions, assign_adverts(nodes, sp.partition), n_clusters,
                                          regions.regions());
    for (const auto& m : profiles.warnings) warnings.push_back(sp.label + ": " + m);
    w.text("region_profiles_" + sp.label + ".csv", csv_text([&](std::ostream& out) {
             csv::write_row(out, {"region", "cluster", "percentage", "n_adverts"});
             for (const auto& p : profiles.profiles) {
               for (int k = 0; k < n_clusters; ++k) {
                 csv::write_row(out, {p.region, std::to_string(k), csv::format_double(p.percentages[k]),
                                      std::to_string(p.n_adverts)});
               }
             }
           }));
    if (profiles.profiles.size() < 2) {
      warnings.push_back(sp.label + ": fewer than two regions; z-scores and dendrograms skipped");
      continue;
    }
    const auto z = zscores(profiles.profiles);
    for (const auto& m : z.warnings) warnings.push_back(sp.label + ": " + m);
    std::vector<std::string> region_names;
    for (const auto& p : profiles.profiles) region_names.push_back(p.region);
    w.text("zscores_" + sp.label + ".csv", csv_text([&](std::ostream& out) {
             csv::Row header{"region"};
             for (int k = 0; k < n_clusters; ++k) header.push_back(std::to_string(k));
             csv::write_row(out, header);
             for (Eigen::Index r = 0; r < z.values.rows(); ++r) {
               csv::Row row{region_names[static_cast<std::size_t>(r)]};
               for (Eigen::Index k = 0; k < z.values.cols(); ++k) row.push_back(csv::format_double(z.values(r, k)));
               csv::write_row(out, row);
             }
           }));
    Eigen::MatrixXd pct(static_cast<Eigen::Index>(profiles.profiles.size()), n_clusters);
    for (std::size_t r = 0; r < profiles.profiles.size(); ++r) {
      for (int k = 0; k < n_clusters; ++k) pct(static_cast<Eigen::Index>(r), k) = profiles.profiles[r].percentages[k];
    }
    json dendrograms = {{"regions", dendrogram_json(hier_cluster(pct), region_names)}};
    if (n_clusters >= 2) {
      std::vector<std::string> cluster_names;
      for (int k = 0; k < n_clusters; ++k) cluster_names.push_back(std::to_string(k));
      dendrograms["clusters"] = dendrogram_json(hier_cluster(pct.transpose()), cluster_names);
    }
    w.text("dendrogram_" + sp.label + ".json", dump(dendrograms));
  }

  if (c.period_a && !partitions.empty()) {
    PeriodAdverts a, b;
    for (const auto& adv : adverts) {
      if (c.period_a->contains(adv.date)) a.skills.push_back(adv.skills);
      if (c.period_b->contains(adv.date)) b.skills.push_back(adv.skills);
    }
    const NetworkOptions options{c.n_components, c.include_diagonal, c.cknn_k, c.cknn_delta};
    for (const auto& sp : partitions) {
      const auto cmp = compare_periods(a, b, g.names(), sp.partition, options, c.path_lengths);
      for (const auto* period : {&cmp.period_a, &cmp.period_b}) {
        if (period->absent_skills) {
          warnings.push_back(sp.label + ": " + std::to_string(period->absent_skills) +
                             " skills absent from a period graph were left out of its medians");
        }
      }
      w.text("period_comparison_" + sp.label + ".csv", csv_text([&](std::ostream& out) {
               csv::write_row(out, {"cluster", "metric", "period_a", "period_b", "absolute", "relative"});
               auto row = [&](const std::string& cluster, const char* metric, const MetricDelta& d) {
                 csv::write_row(out, {cluster, metric, opt(d.a), opt(d.b), opt(d.absolute), opt(d.relative)});
               };
               for (std::size_t k = 0; k < cmp.clusters.size(); ++k) {
                 const auto id = std::to_string(k);
                 row(id, "average_mentions", cmp.clusters[k].average_mentions);
                 row(id, "median_closeness", cmp.clusters[k].median_closeness);
                 row(id, "median_containment", cmp.clusters[k].median_containment);
               }
               row("", "skills_per_advert", cmp.skills_per_advert);
             }));
    }
  }
  return warnings;
}

StageOutcome run_one(Stage stage, const PipelineConfig& c, const RunOptions& options,
                     std::map<Stage, StageKey>& memo) {
  StageOutcome outcome;
  outcome.stage = stage;
  if (stage == Stage::synth && !c.synth) throw ArgumentError("config has no synth section");
  check_upstream(c, stage, memo, options.force);
  const auto key = stage_key(c, stage, memo);
  const auto dir = stage_dir(c, stage);
  const auto previous = read_manifest(dir);
  if (!options.force && previous && (*previous)["stage_hash"] == key.hash && artifacts_intact(dir, *previous)) {
    outcome.cached = true;
    if (previous->contains("warnings")) outcome.warnings = (*previous)["warnings"].get<std::vector<std::string>>();
    return outcome;
  }
  StageWriter w(dir);
  switch (stage) {
    case Stage::synth: outcome.warnings = run_synth(c, w); break;
    case Stage::ingest: outcome.warnings = run_ingest(c, w); break;
    case Stage::embed: outcome.warnings = run_embed(c, w); break;
    case Stage::graph: outcome.warnings = run_graph(c, w); break;
    case Stage::cluster: outcome.warnings = run_cluster(c, w); break;
    case Stage::metrics: outcome.warnings = run_metrics(c, w); break;
    case Stage::panel: outcome.warnings = run_panel(c, w); break;
    case Stage::all: break;
  }
  w.commit(stage, key, previous, outcome.warnings);
  return outcome;
}

}  // namespace

std::vector<StageOutcome> run_stage(Stage stage, const PipelineConfig& config, const RunOptions& options) {
  config.validate();
  if (options.threads < 0) throw ArgumentError("--threads must be >= 0");
  if (options.threads > 0) omp_set_num_threads(options.threads);
  std::map<Stage, StageKey> memo;
  std::vector<StageOutcome> out;
  if (stage != Stage::all) {
    out.push_back(run_one(stage, config, options, memo));
    return out;
  }
  for (Stage s : {Stage::ingest, Stage::embed, Stage::graph, Stage::cluster, Stage::metrics, Stage::panel}) {
    out.push_back(run_one(s, config, options, memo));
  }
  return out;
}

}  // namespace skillnet
