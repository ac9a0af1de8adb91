#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "skillnet/corpus.hpp"
#include "skillnet/error.hpp"

using namespace skillnet;
using namespace std::chrono;

namespace {

AdvertRecord advert(std::string id, int day, std::vector<std::string> skills = {}) {
  AdvertRecord r;
  r.id = std::move(id);
  r.first_posted = year{2016} / January / day;
  r.raw_skills = std::move(skills);
  return r;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("skillnet_corpus_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(ParseAdverts, JsonlFieldMapping) {
  std::istringstream in(R"({"id":"a1","date":"2016-04-03","location":"Leeds","skills":["Nursing"]})" "\n");
  auto parsed = parse_adverts(in, AdvertFormat::jsonl);
  ASSERT_EQ(parsed.records.size(), 1u);
  const auto& r = parsed.records[0];
  EXPECT_EQ(r.id, "a1");
  EXPECT_EQ(r.first_posted, year{2016} / April / 3);
  EXPECT_EQ(r.raw_location, "Leeds");
  EXPECT_FALSE(r.salary.has_value());
  EXPECT_EQ(r.raw_skills, std::vector<std::string>{"Nursing"});
  EXPECT_EQ(parsed.malformed, 0u);
}

TEST(ParseAdverts, MissingIdIsCountedAsMalformed) {
  std::istringstream in(
      R"({"id":"a1","date":"2016-04-03","location":"Leeds","skills":["Nursing"]})" "\n"
      R"({"date":"2016-04-03","location":"Leeds","skills":["Nursing"]})" "\n"
      R"({"id":"a3","date":"2016-04-05","location":"York","salary":21000,"skills":[]})" "\n");
  auto parsed = parse_adverts(in, AdvertFormat::jsonl);
  EXPECT_EQ(parsed.records.size(), 2u);
  EXPECT_EQ(parsed.malformed, 1u);
  EXPECT_EQ(parsed.records[1].salary, 21000.0);
}

TEST(ParseAdverts, MostlyMalformedIsAFormatError) {
  std::istringstream in("not json\n{\"id\":1}\n" R"({"id":"a","date":"2016-01-01","location":"x","skills":[]})" "\n");
  EXPECT_THROW(parse_adverts(in, AdvertFormat::jsonl), FormatError);
}

TEST(ParseAdverts, CsvWithSemicolonSkills) {
  std::istringstream in("id,date,location,salary,skills\na1,2016-04-03,Leeds,,Nursing;Care\n");
  auto parsed = parse_adverts(in, AdvertFormat::csv);
  ASSERT_EQ(parsed.records.size(), 1u);
  EXPECT_EQ(parsed.records[0].raw_skills, (std::vector<std::string>{"Nursing", "Care"}));
  EXPECT_FALSE(parsed.records[0].salary.has_value());
}

TEST(ParseAdverts, UnreadableFileIsAnIoError) {
  EXPECT_THROW(parse_adverts(std::filesystem::path("/nonexistent/adverts.jsonl"), AdvertFormat::jsonl), IoError);
}

TEST(Deduplicate, KeepsFirstPosting) {
  auto out = deduplicate(std::vector{advert("a1", 12), advert("a1", 5)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].first_posted, year{2016} / January / 5);
}

TEST(Deduplicate, DistinctIdsBothKept) {
  EXPECT_EQ(deduplicate(std::vector{advert("a1", 5), advert("a2", 5)}).size(), 2u);
}

TEST(Deduplicate, SameDateKeepsFirstOccurrence) {
  auto first = advert("a1", 5, {"first"});
  auto second = advert("a1", 5, {"second"});
  auto out = deduplicate(std::vector{first, second});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].raw_skills, std::vector<std::string>{"first"});
  EXPECT_TRUE(deduplicate(std::vector<AdvertRecord>{}).empty());
}

TEST(MapSkills, DropsMarkedTerms) {
  SkillLexicon lex({{"Dental Insurance", "", "", LexiconAction::drop},
                    {"Nursing", "Nursing", "Health", LexiconAction::keep}});
  MappingStats stats;
  EXPECT_EQ(map_skills(advert("a", 1, {"Dental Insurance", "Nursing"}), lex, &stats),
            std::vector<std::string>{"Nursing"});
  EXPECT_EQ(stats.dropped, 1u);
}

TEST(MapSkills, CollapsesSynonymsAndCountsUnknown) {
  SkillLexicon lex({{"A", "X", "c", LexiconAction::keep}, {"B", "X", "c", LexiconAction::keep}});
  MappingStats stats;
  EXPECT_EQ(map_skills(advert("a", 1, {"A", "B", "Z"}), lex, &stats), std::vector<std::string>{"X"});
  EXPECT_EQ(stats.unknown, 1u);
  EXPECT_TRUE(map_skills(advert("a", 1), lex).empty());
}

TEST(Lexicon, RoundTripsThroughCsv) {
  auto dir = scratch("lexicon");
  SkillLexicon lex({{"Team Player", "", "", LexiconAction::drop},
                    {"C++, modern", "C++", "Software, \"systems\"", LexiconAction::keep}});
  lex.save(dir / "lexicon.csv");
  auto back = SkillLexicon::load(dir / "lexicon.csv");
  ASSERT_EQ(back.entries().size(), 2u);
  const auto* e = back.find("C++, modern");
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->category, "Software, \"systems\"");
  EXPECT_EQ(back.find("Team Player")->action, LexiconAction::drop);
}

TEST(ResolveRegion, SingleRegionIsDeterministic) {
  RegionTable table({{"Cumbria", {{"UKD1", 1.0}}}});
  auto r = advert("a1", 1);
  r.raw_location = "Cumbria";
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) EXPECT_EQ(resolve_region(r, table, seed), "UKD1");
}

TEST(ResolveRegion, UnknownLocationIsUnresolved) {
  RegionTable table({{"Cumbria", {{"UKD1", 1.0}}}});
  auto r = advert("a1", 1);
  r.raw_location = "Atlantis";
  EXPECT_FALSE(resolve_region(r, table, 3).has_value());
}

TEST(ResolveRegion, MultiRegionFrequenciesFollowWeights) {
  const std::vector<RegionShare> shares = {
      {"UKI3", 0.3}, {"UKI4", 0.25}, {"UKI5", 0.2}, {"UKI6", 0.15}, {"UKI7", 0.1}};
  RegionTable table({{"London", shares}});
  std::map<std::string, int> hits;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    auto r = advert("ad" + std::to_string(i), 1);
    r.raw_location = "London";
    auto region = resolve_region(r, table, 2024);
    ASSERT_TRUE(region.has_value());
    ++hits[*region];
    if (i < 100) EXPECT_EQ(resolve_region(r, table, 2024), region);
  }
  for (const auto& s : shares) {
    EXPECT_NEAR(static_cast<double>(hits[s.region]) / draws, s.weight, 0.02) << s.region;
  }
}

TEST(RegionTable, RejectsWeightsThatDoNotSumToOne) {
  EXPECT_THROW(RegionTable({{"London", {{"A", 0.5}, {"B", 0.4}}}}), FormatError);
}

TEST(Cooccurrence, SingleAdvert) {
  Vocabulary v({"a", "b", "c"});
  auto k = build_cooccurrence(std::vector<std::vector<std::string>>{{"a", "b", "c"}}, v);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_EQ(k.counts(i, j), 1);
  }
}

TEST(Cooccurrence, Accumulates) {
  Vocabulary v({"a", "b"});
  auto k = build_cooccurrence(std::vector<std::vector<std::string>>{{"a", "b"}, {"a", "b"}}, v);
  EXPECT_EQ(k.counts(0, 1), 2);
  EXPECT_EQ(k.counts(0, 0), 2);
  EXPECT_EQ(k.counts(1, 1), 2);
  EXPECT_EQ(k.n_adverts, 2);
}

TEST(Cooccurrence, NoCoMention) {
  Vocabulary v({"a", "b"});
  auto k = build_cooccurrence(std::vector<std::vector<std::string>>{{"a"}, {"b"}}, v);
  EXPECT_EQ(k.counts(0, 1), 0);
  EXPECT_EQ(k.mentions(0), 1);
  EXPECT_EQ(k.mentions(1), 1);
}

TEST(Cooccurrence, UnknownSkillNamesTheSkill) {
  Vocabulary v({"a"});
  try {
    build_cooccurrence(std::vector<std::vector<std::string>>{{"a", "ghost"}}, v);
    FAIL() << "expected VocabularyError";
  } catch (const VocabularyError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Cooccurrence, SymmetricAndRoundTrips) {
  std::mt19937_64 rng(5);
  std::vector<std::string> names;
  for (int i = 0; i < 12; ++i) names.push_back("skill" + std::to_string(i));
  Vocabulary v(names);
  std::vector<std::vector<int>> adverts;
  for (int a = 0; a < 200; ++a) {
    std::vector<int> skills;
    for (int i = 0; i < 12; ++i) {
      if (std::bernoulli_distribution(0.25)(rng)) skills.push_back(i);
    }
    adverts.push_back(skills);
  }
  auto k = build_cooccurrence(adverts, v);
  EXPECT_EQ(k.counts, k.counts.transpose());
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) EXPECT_LE(k.counts(i, j), k.counts(i, i));
  }
  auto dir = scratch("cooc");
  save_cooccurrence(k, dir / "k.csv", dir / "vocab.csv");
  auto back = load_cooccurrence(dir / "k.csv", dir / "vocab.csv");
  EXPECT_EQ(back.counts, k.counts);
  EXPECT_EQ(back.n_adverts, 200);
  EXPECT_EQ(back.vocabulary.names(), names);
}

TEST(Subsample, EveryEleventhByDate) {
  std::vector<AdvertRecord> records;
  for (int i = 0; i < 22; ++i) records.push_back(advert("a" + std::to_string(i), 22 - i));
  auto out = subsample(records, 11);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].id, "a21");  // earliest date
  EXPECT_EQ(out[1].id, "a10");
}

TEST(Subsample, IdentityAndBoundary) {
  std::vector<AdvertRecord> records;
  for (int i = 0; i < 10; ++i) records.push_back(advert("a" + std::to_string(i), i + 1));
  EXPECT_EQ(subsample(records, 1).size(), 10u);
  auto one = subsample(records, 11);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].id, "a0");
  EXPECT_THROW(subsample(records, 0), ArgumentError);
}

TEST(Dates, ParseAndFormat) {
  EXPECT_EQ(parse_date("2022-12-31T10:00:00Z"), year{2022} / December / 31);
  EXPECT_EQ(format_date(year{2016} / March / 4), "2016-03-04");
  EXPECT_THROW(parse_date("2016-02-30"), FormatError);
}
