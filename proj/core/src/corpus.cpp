#include "skillnet/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "skillnet/csv.hpp"
#include "skillnet/error.hpp"

namespace skillnet {

namespace {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::optional<AdvertRecord> record_from_json(const json& j) {
  if (!j.is_object()) return std::nullopt;
  AdvertRecord rec;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) {
    return std::nullopt;
  }
  rec.id = id->get<std::string>();
  auto date = j.find("date");
  if (date == j.end() || !date->is_string()) return std::nullopt;
  try {
    rec.first_posted = parse_date(date->get_ref<const std::string&>());
  } catch (const Error&) {
    return std::nullopt;
  }
  if (auto loc = j.find("location"); loc != j.end() && !loc->is_null()) {
    if (!loc->is_string()) return std::nullopt;
    rec.raw_location = loc->get<std::string>();
  }
  if (auto sal = j.find("salary"); sal != j.end() && !sal->is_null()) {
    if (!sal->is_number()) return std::nullopt;
    const double value = sal->get<double>();
    if (!(value > 0.0)) return std::nullopt;
    rec.salary = value;
  }
  if (auto skills = j.find("skills"); skills != j.end() && !skills->is_null()) {
    if (!skills->is_array()) return std::nullopt;
    for (const auto& s : *skills) {
      if (!s.is_string()) return std::nullopt;
      rec.raw_skills.push_back(s.get<std::string>());
    }
  }
  return rec;
}

std::optional<AdvertRecord> record_from_csv(const csv::Row& row, int id_col, int date_col,
                                            int loc_col, int salary_col, int skills_col,
                                            std::size_t width) {
  if (row.size() != width) return std::nullopt;
  AdvertRecord rec;
  rec.id = row[id_col];
  if (rec.id.empty()) return std::nullopt;
  try {
    rec.first_posted = parse_date(row[date_col]);
    if (loc_col >= 0) rec.raw_location = row[loc_col];
    if (salary_col >= 0 && !row[salary_col].empty()) {
      const double value = csv::parse_double(row[salary_col]);
      if (!(value > 0.0)) return std::nullopt;
      rec.salary = value;
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  if (skills_col >= 0) {
    std::string_view cell = row[skills_col];
    while (!cell.empty()) {
      const auto cut = cell.find(';');
      std::string_view item = cell.substr(0, cut);
      while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
      while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
      if (!item.empty()) rec.raw_skills.emplace_back(item);
      if (cut == std::string_view::npos) break;
      cell.remove_prefix(cut + 1);
    }
  }
  return rec;
}

void check_malformed(const ParsedAdverts& out) {
  const std::size_t total = out.records.size() + out.malformed;
  if (total > 0 && 2 * out.malformed > total) {
    throw FormatError("advert input is mostly malformed: " + std::to_string(out.malformed) +
                      " of " + std::to_string(total) + " entries rejected");
  }
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() < 10 || text[4] != '-' || text[7] != '-' ||
      (text.size() > 10 && text[10] != 'T' && text[10] != ' ')) {
    throw FormatError("bad date '" + std::string(text) + "'");
  }
  try {
    const int y = static_cast<int>(csv::parse_int(text.substr(0, 4)));
    const unsigned m = static_cast<unsigned>(csv::parse_int(text.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(csv::parse_int(text.substr(8, 2)));
    Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) throw FormatError("bad date");
    return date;
  } catch (const FormatError&) {
    throw FormatError("bad date '" + std::string(text) + "'");
  }
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

AdvertFormat parse_advert_format(std::string_view name) {
  if (name == "jsonl") return AdvertFormat::jsonl;
  if (name == "csv") return AdvertFormat::csv;
  throw ArgumentError("unknown advert format '" + std::string(name) + "' (expected jsonl or csv)");
}

ParsedAdverts parse_adverts(std::istream& in, AdvertFormat format) {
  if (!in) throw IoError("advert stream is not readable");
  ParsedAdverts out;
  if (format == AdvertFormat::jsonl) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (auto rec = record_from_json(j)) {
        out.records.push_back(std::move(*rec));
      } else {
        ++out.malformed;
      }
    }
  } else {
    csv::Row header;
    if (csv::read_row(in, header)) {
      if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
      auto col = [&](std::string_view name) {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
      };
      const int id_col = col("id");
      const int date_col = col("date");
      if (id_col < 0 || date_col < 0) throw FormatError("advert CSV needs id and date columns");
      const int loc_col = col("location");
      const int salary_col = col("salary");
      const int skills_col = col("skills");
      csv::Row row;
      while (csv::read_row(in, row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        if (auto rec = record_from_csv(row, id_col, date_col, loc_col, salary_col, skills_col,
                                       header.size())) {
          out.records.push_back(std::move(*rec));
        } else {
          ++out.malformed;
        }
      }
    }
  }
  if (in.bad()) throw IoError("error while reading advert stream");
  check_malformed(out);
  return out;
}

ParsedAdverts parse_adverts(const std::filesystem::path& path, AdvertFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_adverts(in, format);
}

std::vector<AdvertRecord> deduplicate(std::span<const AdvertRecord> records) {
  std::unordered_map<std::string_view, std::size_t> first;
  first.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = first.try_emplace(records[i].id, i);
    if (!inserted && records[i].first_posted < records[it->second].first_posted) it->second = i;
  }
  std::vector<std::size_t> keep;
  keep.reserve(first.size());
  for (const auto& [id, index] : first) keep.push_back(index);
  std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].first_posted != records[b].first_posted) {
      return records[a].first_posted < records[b].first_posted;
    }
    return a < b;
  });
  std::vector<AdvertRecord> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(records[i]);
  return out;
}

std::vector<AdvertRecord> subsample(std::span<const AdvertRecord> records, int stride) {
  if (stride < 1) throw ArgumentError("subsample stride must be >= 1, got " + std::to_string(stride));
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].first_posted < records[b].first_posted;
  });
  std::vector<AdvertRecord> out;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(stride)) {
    out.push_back(records[order[i]]);
  }
  return out;
}

SkillLexicon::SkillLexicon(std::vector<LexiconEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.raw_skill.empty()) throw FormatError("lexicon entry with empty raw_skill");
    if (e.action == LexiconAction::keep && (e.taxonomy_skill.empty() || e.category.empty())) {
      throw FormatError("lexicon keep entry '" + e.raw_skill + "' lacks taxonomy skill or category");
    }
    if (!index_.emplace(e.raw_skill, i).second) {
      throw FormatError("duplicate lexicon raw_skill '" + e.raw_skill + "'");
    }
  }
}

SkillLexicon SkillLexicon::load(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const int raw = table.column("raw_skill");
  const int tax = table.column("taxonomy_skill");
  const int cat = table.column("category");
  const int act = table.column("action");
  if (raw < 0 || tax < 0 || cat < 0 || act < 0) {
    throw FormatError(path.string() + ": lexicon header must be raw_skill,taxonomy_skill,category,action");
  }
  std::vector<LexiconEntry> entries;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw FormatError(path.string() + ": ragged lexicon row");
    LexiconEntry e{row[raw], row[tax], row[cat], LexiconAction::keep};
    if (row[act] == "drop") {
      e.action = LexiconAction::drop;
    } else if (row[act] != "keep") {
      throw FormatError(path.string() + ": lexicon action must be keep or drop, got '" + row[act] + "'");
    }
    entries.push_back(std::move(e));
  }
  return SkillLexicon(std::move(entries));
}

void SkillLexicon::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  csv::write_row(out, {"raw_skill", "taxonomy_skill", "category", "action"});
  for (const auto& e : entries_) {
    csv::write_row(out, {e.raw_skill, e.taxonomy_skill, e.category,
                         e.action == LexiconAction::keep ? "keep" : "drop"});
  }
}

const LexiconEntry* SkillLexicon::find(std::string_view raw_skill) const {
  auto it = index_.find(std::string(raw_skill));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::vector<std::string> map_skills(const AdvertRecord& record, const SkillLexicon& lexicon,
                                    MappingStats* stats) {
  std::vector<std::string> out;
  std::unordered_set<std::string_view> seen;
  for (const auto& raw : record.raw_skills) {
    const LexiconEntry* e = lexicon.find(raw);
    if (!e) {
      if (stats) ++stats->unknown;
      continue;
    }
    if (e->action == LexiconAction::drop) {
      if (stats) ++stats->dropped;
      continue;
    }
    if (seen.insert(e->taxonomy_skill).second) out.push_back(e->taxonomy_skill);
  }
  return out;
}

RegionTable::RegionTable(std::unordered_map<std::string, std::vector<RegionShare>> location_map)
    : location_map_(std::move(location_map)) {
  std::unordered_set<std::string> seen;
  for (const auto& [location, shares] : location_map_) {
    if (shares.empty()) throw FormatError("location '" + location + "' has no regions");
    double sum = 0.0;
    for (const auto& s : shares) {
      if (!(s.weight > 0.0 && s.weight <= 1.0)) {
        throw FormatError("location '" + location + "': region weight outside (0,1]");
      }
      sum += s.weight;
      if (seen.insert(s.region).second) regions_.push_back(s.region);
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw FormatError("location '" + location + "': region weights sum to " + csv::format_double(sum));
    }
  }
  std::sort(regions_.begin(), regions_.end());
}

RegionTable RegionTable::load(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const int loc = table.column("location");
  const int reg = table.column("region");
  const int w = table.column("weight");
  if (loc < 0 || reg < 0 || w < 0) {
    throw FormatError(path.string() + ": region header must be location,region,weight");
  }
  std::unordered_map<std::string, std::vector<RegionShare>> map;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw FormatError(path.string() + ": ragged region row");
    map[row[loc]].push_back({row[reg], csv::parse_double(row[w])});
  }
  return RegionTable(std::move(map));
}

void RegionTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  csv::write_row(out, {"location", "region", "weight"});
  std::vector<std::string> locations;
  for (const auto& [location, shares] : location_map_) locations.push_back(location);
  std::sort(locations.begin(), locations.end());
  for (const auto& location : locations) {
    for (const auto& s : location_map_.at(location)) {
      csv::write_row(out, {location, s.region, csv::format_double(s.weight)});
    }
  }
}

const std::vector<RegionShare>* RegionTable::find(std::string_view location) const {
  auto it = location_map_.find(std::string(location));
  return it == location_map_.end() ? nullptr : &it->second;
}

std::optional<std::string> resolve_region(const AdvertRecord& record, const RegionTable& table,
                                          std::uint64_t seed) {
  const auto* shares = table.find(record.raw_location);
  if (!shares) return std::nullopt;
  if (shares->size() == 1) return shares->front().region;
  const std::uint64_t bits = splitmix64(splitmix64(seed) ^ fnv1a64(record.id));
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  double acc = 0.0;
  for (const auto& s : *shares) {
    acc += s.weight;
    if (u < acc) return s.region;
  }
  return shares->back().region;
}

Vocabulary::Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], static_cast<int>(i)).second) {
      throw VocabularyError("duplicate skill '" + names_[i] + "' in vocabulary");
    }
  }
}

std::optional<int> Vocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::index(std::string_view name) const {
  auto found = find(name);
  if (!found) throw VocabularyError("skill '" + std::string(name) + "' is not in the vocabulary");
  return *found;
}

CooccurrenceMatrix build_cooccurrence(std::span<const std::vector<int>> adverts,
                                      const Vocabulary& vocabulary) {
  const auto n = static_cast<Eigen::Index>(vocabulary.size());
  CooccurrenceMatrix k;
  k.vocabulary = vocabulary;
  k.counts.setZero(n, n);
  k.n_adverts = static_cast<std::int64_t>(adverts.size());
  std::vector<int> skills;
  for (const auto& advert : adverts) {
    skills.assign(advert.begin(), advert.end());
    std::sort(skills.begin(), skills.end());
    skills.erase(std::unique(skills.begin(), skills.end()), skills.end());
    for (std::size_t a = 0; a < skills.size(); ++a) {
      const int i = skills[a];
      if (i < 0 || i >= n) throw VocabularyError("skill index " + std::to_string(i) + " out of range");
      ++k.counts(i, i);
      for (std::size_t b = a + 1; b < skills.size(); ++b) {
        ++k.counts(i, skills[b]);
        ++k.counts(skills[b], i);
      }
    }
  }
  return k;
}

CooccurrenceMatrix build_cooccurrence(std::span<const std::vector<std::string>> adverts,
                                      const Vocabulary& vocabulary) {
  std::vector<std::vector<int>> indexed;
  indexed.reserve(adverts.size());
  for (const auto& advert : adverts) {
    auto& row = indexed.emplace_back();
    row.reserve(advert.size());
    for (const auto& skill : advert) row.push_back(vocabulary.index(skill));
  }
  return build_cooccurrence(std::span<const std::vector<int>>(indexed), vocabulary);
}

void save_vocabulary(const Vocabulary& vocabulary, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  csv::write_row(out, {"index", "skill"});
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    csv::write_row(out, {std::to_string(i), vocabulary.name(i)});
  }
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const int idx = table.column("index");
  const int skill = table.column("skill");
  if (idx < 0 || skill < 0) throw FormatError(path.string() + ": vocabulary header must be index,skill");
  std::vector<std::string> names(table.rows.size());
  std::vector<bool> filled(table.rows.size(), false);
  for (const auto& row : table.rows) {
    const long long i = csv::parse_int(row.at(idx));
    if (i < 0 || i >= static_cast<long long>(names.size()) || filled[i]) {
      throw FormatError(path.string() + ": bad vocabulary index " + row.at(idx));
    }
    names[i] = row.at(skill);
    filled[i] = true;
  }
  return Vocabulary(std::move(names));
}

void save_cooccurrence(const CooccurrenceMatrix& k, const std::filesystem::path& triplets,
                       const std::filesystem::path& vocabulary) {
  save_vocabulary(k.vocabulary, vocabulary);
  std::ofstream out(triplets, std::ios::binary);
  if (!out) throw IoError("cannot write " + triplets.string());
  out << "i,j,count\n";
  out << "-1,-1," << k.n_adverts << '\n';
  for (Eigen::Index i = 0; i < k.counts.rows(); ++i) {
    for (Eigen::Index j = i; j < k.counts.cols(); ++j) {
      if (k.counts(i, j) != 0) out << i << ',' << j << ',' << k.counts(i, j) << '\n';
    }
  }
}

CooccurrenceMatrix load_cooccurrence(const std::filesystem::path& triplets,
                                     const std::filesystem::path& vocabulary) {
  CooccurrenceMatrix k;
  k.vocabulary = load_vocabulary(vocabulary);
  const auto n = static_cast<long long>(k.vocabulary.size());
  k.counts.setZero(n, n);
  const auto table = csv::read_table(triplets);
  for (const auto& row : table.rows) {
    if (row.size() != 3) throw FormatError(triplets.string() + ": triplet rows need 3 fields");
    const long long i = csv::parse_int(row[0]);
    const long long j = csv::parse_int(row[1]);
    const long long c = csv::parse_int(row[2]);
    if (i == -1 && j == -1) {
      k.n_adverts = c;
      continue;
    }
    if (i < 0 || j < 0 || i >= n || j >= n) throw FormatError(triplets.string() + ": index out of range");
    k.counts(i, j) = c;
    k.counts(j, i) = c;
  }
  return k;
}

}  // namespace skillnet
