#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace skillnet {

using Date = std::chrono::year_month_day;

// Parses "YYYY-MM-DD", optionally followed by a time component ("T..." or " ...").
Date parse_date(std::string_view text);
std::string format_date(Date date);

struct AdvertRecord {
  std::string id;
  Date first_posted{};
  std::string raw_location;
  std::optional<double> salary;
  std::vector<std::string> raw_skills;
};

enum class AdvertFormat { jsonl, csv };

AdvertFormat parse_advert_format(std::string_view name);

struct ParsedAdverts {
  std::vector<AdvertRecord> records;
  std::size_t malformed = 0;
};

// One record per well-formed line (jsonl) or row (csv, header
// id,date,location,salary,skills with ';'-separated skills). Malformed entries
// are counted and skipped; more than half malformed raises FormatError.
ParsedAdverts parse_adverts(std::istream& in, AdvertFormat format);
ParsedAdverts parse_adverts(const std::filesystem::path& path, AdvertFormat format);

// Keeps the earliest posting of every advert id (input order breaks ties) and
// returns the survivors ordered by date, then input order.
std::vector<AdvertRecord> deduplicate(std::span<const AdvertRecord> records);

// Every stride-th advert after a stable sort by date.
std::vector<AdvertRecord> subsample(std::span<const AdvertRecord> records, int stride);

enum class LexiconAction { keep, drop };

struct LexiconEntry {
  std::string raw_skill;
  std::string taxonomy_skill;
  std::string category;
  LexiconAction action = LexiconAction::keep;
};

class SkillLexicon {
 public:
  SkillLexicon() = default;
  explicit SkillLexicon(std::vector<LexiconEntry> entries);

  static SkillLexicon load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const LexiconEntry* find(std::string_view raw_skill) const;
  const std::vector<LexiconEntry>& entries() const { return entries_; }

 private:
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct MappingStats {
  std::size_t dropped = 0;
  std::size_t unknown = 0;
};

// Raw skills -> taxonomy skills. Dropped and unknown skills are removed, and
// several raw skills mapping to one taxonomy skill collapse to one entry
// (first occurrence order is kept).
std::vector<std::string> map_skills(const AdvertRecord& record, const SkillLexicon& lexicon,
                                    MappingStats* stats = nullptr);

struct RegionShare {
  std::string region;
  double weight = 0.0;
};

class RegionTable {
 public:
  RegionTable() = default;
  explicit RegionTable(std::unordered_map<std::string, std::vector<RegionShare>> location_map);

  static RegionTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Sorted, unique region codes.
  const std::vector<std::string>& regions() const { return regions_; }
  const std::vector<RegionShare>* find(std::string_view location) const;
  const std::unordered_map<std::string, std::vector<RegionShare>>& location_map() const {
    return location_map_;
  }

 private:
  std::unordered_map<std::string, std::vector<RegionShare>> location_map_;
  std::vector<std::string> regions_;
};

// Region of an advert; std::nullopt when the location is unknown. Multi-region
// locations are sampled with a generator keyed on (seed, advert id), so the
// result is a pure function of its arguments.
std::optional<std::string> resolve_region(const AdvertRecord& record, const RegionTable& table,
                                          std::uint64_t seed);

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_[index]; }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<int> find(std::string_view name) const;
  // Throws VocabularyError naming the skill.
  int index(std::string_view name) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

// Symmetric skill co-mention counts. Off-diagonal: adverts mentioning both
// skills. Diagonal: adverts mentioning the skill.
struct CooccurrenceMatrix {
  Vocabulary vocabulary;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  std::int64_t n_adverts = 0;

  std::size_t n_skills() const { return vocabulary.size(); }
  std::int64_t mentions(std::size_t skill) const { return counts(skill, skill); }
};

CooccurrenceMatrix build_cooccurrence(std::span<const std::vector<std::string>> adverts,
                                      const Vocabulary& vocabulary);
CooccurrenceMatrix build_cooccurrence(std::span<const std::vector<int>> adverts,
                                      const Vocabulary& vocabulary);

// Sparse triplet CSV (i,j,count; upper triangle with diagonal) plus a
// vocabulary CSV (index,skill). The advert count is stored as the triplet
// "-1,-1,<n_adverts>" on the first data row.
void save_cooccurrence(const CooccurrenceMatrix& k, const std::filesystem::path& triplets,
                       const std::filesystem::path& vocabulary);
CooccurrenceMatrix load_cooccurrence(const std::filesystem::path& triplets,
                                     const std::filesystem::path& vocabulary);

void save_vocabulary(const Vocabulary& vocabulary, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace skillnet
