#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nnr/dataset.hpp"
#include "nnr/mind.hpp"
#include "nnr/synthetic.hpp"

using namespace nnr;
namespace fs = std::filesystem;

namespace {

const fs::path kFixture = fs::path(NNR_TEST_DATA_DIR) / "mind_fixture";

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("nnr_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const Token& t : tokens) out.push_back(t.text);
  return out;
}

Day day_of(int y, unsigned m, unsigned d) {
  return std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

}  // namespace

TEST_CASE("tokenize lower-cases and splits on non-alphanumeric runs") {
  CHECK(texts(tokenize("Hello World")) == std::vector<std::string>{"hello", "world"});
  CHECK(texts(tokenize("  U.S. stocks -- up 3.5%!")) == std::vector<std::string>{"u", "s", "stocks", "up", "3", "5"});
  CHECK(tokenize("?!").empty());
  auto t = tokenize("Résumé tips");
  REQUIRE(t.size() == 2);
  CHECK(t[0].text == "résumé");
  CHECK(t[0].char_offset == 0);
  CHECK(t[0].char_length == 6);
  CHECK(t[1].char_offset == 7);
}

TEST_CASE("parse_news_lines: direct field mapping") {
  std::istringstream in("N1\tsports\tsoccer\tHello World\tabs\turl\t[]\t[]\n");
  NewsCatalog c;
  parse_news_lines(in, "inline", c);
  REQUIRE(c.records.size() == 1);
  CHECK(c.records[0].news_id == "N1");
  CHECK(c.records[0].category == "sports");
  CHECK(c.records[0].subcategory == "soccer");
  CHECK(texts(c.records[0].tokens) == std::vector<std::string>{"hello", "world"});
  CHECK(c.find("N1") == &c.records[0]);
  CHECK(c.find("N2") == nullptr);
}

TEST_CASE("parse_news_tsv: golden fixture") {
  NewsCatalog train = parse_news_tsv(kFixture / "train" / "news.tsv");
  CHECK(train.records.size() == 5);
  CHECK(train.empty_titles == 1);
  CHECK(train.malformed_entities == 1);
  CHECK(train.find("N4") == nullptr);
  const RawNews* n2 = train.find("N2");
  REQUIRE(n2);
  CHECK(texts(n2->tokens) == std::vector<std::string>{"world", "cup", "final", "résumé", "of", "the", "match"});
  REQUIRE(n2->title_entities.size() == 1);
  CHECK(n2->title_entities[0].wikidata_id == "Q19317");
  CHECK(n2->title_entities[0].occurrence_offsets == std::vector<int>{0});
  const RawNews* n3 = train.find("N3");
  REQUIRE(n3);
  CHECK(n3->title_entities.empty());
}

TEST_CASE("parse_news: errors") {
  CHECK_THROWS_AS(parse_news_tsv(kFixture / "missing.tsv"), IoError);
  std::istringstream bad("N1\tsports\tsoccer\tHello World\tabs\turl\t[]\t[]\nN2\tsports\tonly four\n");
  NewsCatalog c;
  try {
    parse_news_lines(bad, "inline", c);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("inline:2") != std::string::npos);
  }
}

TEST_CASE("parse_behaviors: direct field mapping and timestamps") {
  std::istringstream in("1\tU10\t11/11/2019 9:05:58 AM\tN1 N2\tN3-1 N4-0\n");
  auto imps = parse_behaviors_lines(in, "inline");
  REQUIRE(imps.size() == 1);
  CHECK(imps[0].impression_id == "1");
  CHECK(imps[0].user_id == "U10");
  CHECK(imps[0].history == std::vector<std::string>{"N1", "N2"});
  CHECK(imps[0].candidates == std::vector<Candidate>{{"N3", true}, {"N4", false}});
  CHECK(imps[0].timestamp == day_of(2019, 11, 11) + std::chrono::hours{9} + std::chrono::minutes{5} + std::chrono::seconds{58});

  CHECK(parse_timestamp("11/14/2019 12:00:00 AM") == Timestamp{day_of(2019, 11, 14)});
  CHECK(parse_timestamp("11/14/2019 12:30:00 PM") == day_of(2019, 11, 14) + std::chrono::minutes{12 * 60 + 30});
  CHECK(parse_timestamp("11/14/2019 11:59:59 PM") == day_of(2019, 11, 15) - std::chrono::seconds{1});
  CHECK(format_timestamp(parse_timestamp("11/9/2019 8:00:00 AM")) == "11/9/2019 8:00:00 AM");
  CHECK(format_timestamp(parse_timestamp("11/14/2019 12:00:00 AM")) == "11/14/2019 12:00:00 AM");
  CHECK_THROWS_AS(parse_timestamp("2019-11-14 08:00:00"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("13/14/2019 8:00:00 AM"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("11/14/2019 13:00:00 PM"), ParseError);
}

TEST_CASE("parse_behaviors: empty history and label errors") {
  std::istringstream empty("2\tU2\t11/10/2019 9:05:58 AM\t\tN1-0 N2-1\n");
  auto imps = parse_behaviors_lines(empty, "inline");
  REQUIRE(imps.size() == 1);
  CHECK(imps[0].history.empty());

  for (const char* bad_label : {"N3-2", "N3", "N3-", "-1"}) {
    std::istringstream bad(std::string("1\tU1\t11/9/2019 8:00:00 AM\tN1\tN2-1\n2\tU1\t11/9/2019 8:00:00 AM\tN1\t") +
                           bad_label + "\n");
    try {
      parse_behaviors_lines(bad, "inline");
      FAIL("expected a parse error for " << bad_label);
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("inline:2") != std::string::npos);
    }
  }
  std::istringstream columns("1\tU1\t11/9/2019 8:00:00 AM\n");
  CHECK_THROWS_AS(parse_behaviors_lines(columns, "inline"), ParseError);
  std::istringstream time("1\tU1\tyesterday\tN1\tN2-1\n");
  CHECK_THROWS_AS(parse_behaviors_lines(time, "inline"), ParseError);
  CHECK_THROWS_AS(parse_behaviors_tsv(kFixture / "nothing.tsv"), IoError);
}

TEST_CASE("behaviors round-trip through the writer") {
  auto original = parse_behaviors_tsv(kFixture / "train" / "behaviors.tsv");
  std::ostringstream out;
  write_behaviors(out, original);
  std::istringstream in(out.str());
  CHECK(parse_behaviors_lines(in, "round-trip") == original);

  const fs::path dir = scratch_dir("roundtrip");
  write_behaviors_tsv(dir / "b.tsv", original);
  CHECK(parse_behaviors_tsv(dir / "b.tsv") == original);
}

TEST_CASE("golden fixture: corpus counts") {
  NewsCatalog train_news = parse_news_tsv(kFixture / "train" / "news.tsv");
  NewsCatalog test_news = parse_news_tsv(kFixture / "dev" / "news.tsv");
  auto train = corpus_stats(train_news, parse_behaviors_tsv(kFixture / "train" / "behaviors.tsv"));
  auto test = corpus_stats(test_news, parse_behaviors_tsv(kFixture / "dev" / "behaviors.tsv"));
  CHECK(train.news == 5);
  CHECK(train.users == 5);
  CHECK(train.impressions == 7);
  CHECK(train.categories == 3);
  CHECK(train.subcategories == 5);
  CHECK(test.news == 4);
  CHECK(test.users == 3);
  CHECK(test.impressions == 3);
  CHECK(test.categories == 3);
  CHECK(test.subcategories == 4);
}

TEST_CASE("temporal_split: last day validates, first four days train") {
  auto imps = parse_behaviors_tsv(kFixture / "train" / "behaviors.tsv");
  TemporalSplit s = temporal_split(imps);
  CHECK(s.impressions_per_day.size() == 6);
  REQUIRE(s.train.size() == 4);
  REQUIRE(s.validation.size() == 2);
  CHECK(s.dropped_between == 1);
  CHECK(s.validation_day == day_of(2019, 11, 14));
  CHECK(s.train_days.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(s.train[i].impression_id == std::to_string(i + 1));
  CHECK(s.validation[0].impression_id == "6");
  CHECK(s.validation[1].impression_id == "7");
  Timestamp max_train{}, min_val = Timestamp::max();
  for (const auto& i : s.train) max_train = std::max(max_train, i.timestamp);
  for (const auto& i : s.validation) min_val = std::min(min_val, i.timestamp);
  CHECK(max_train < min_val);

  // Two days: first trains, second validates.
  std::vector<Impression> two{imps[0], imps[1]};
  TemporalSplit t = temporal_split(two);
  CHECK(t.train.size() == 1);
  CHECK(t.validation.size() == 1);

  CHECK_THROWS_AS(temporal_split(std::vector<Impression>{imps[0]}), ConfigError);
  CHECK_THROWS_AS(temporal_split(std::vector<Impression>{}), ConfigError);
}

TEST_CASE("truncate_history keeps the most recent suffix") {
  std::vector<int> sixty(60);
  for (int i = 0; i < 60; ++i) sixty[static_cast<std::size_t>(i)] = i;
  auto t = truncate_history(sixty);
  REQUIRE(t.size() == 50);
  for (int i = 0; i < 50; ++i) CHECK(t[static_cast<std::size_t>(i)] == i + 10);
  std::vector<int> ten(sixty.begin(), sixty.begin() + 10);
  CHECK(truncate_history(ten) == ten);
  CHECK(truncate_history(std::vector<int>{}).empty());
  CHECK(truncate_history(sixty, 3) == std::vector<int>{57, 58, 59});
}

TEST_CASE("build_vocab: reserved ids, ordering, thresholds, determinism") {
  std::istringstream two("A\tx\ty\tred blue red\t\t\t[]\t[]\nB\tx\ty\tblue red\t\t\t[]\t[]\n");
  NewsCatalog c;
  parse_news_lines(two, "inline", c);
  Vocabulary v = build_vocab(c);
  CHECK(v.size() == 4);
  CHECK(v.tokens[0] == "<pad>");
  CHECK(v.tokens[1] == "<unk>");
  CHECK(v.tokens[2] == "red");  // 3 occurrences
  CHECK(v.tokens[3] == "blue");
  CHECK(v.lookup("never") == Vocabulary::kUnknown);

  NewsCatalog train = parse_news_tsv(kFixture / "train" / "news.tsv");
  NewsCatalog test = parse_news_tsv(kFixture / "dev" / "news.tsv");
  Vocabulary full = build_vocab({&train, &test});
  CHECK(full.size() == 30);
  CHECK(full.tokens[2] == "résumé");
  CHECK(full.tokens[3] == "world");
  CHECK(full.tokens[4] == "10");
  CHECK(full.tokens[5] == "3");
  CHECK(full == build_vocab({&train, &test}));

  Vocabulary frequent = build_vocab({&train, &test}, 2);
  CHECK(frequent.size() == 4);
  CHECK(frequent.lookup("hello") == Vocabulary::kUnknown);
  CHECK(frequent.lookup("world") == 3);

  NewsCatalog empty;
  CHECK_THROWS_AS(build_vocab(empty), ConfigError);
}

TEST_CASE("label indices and entity alignment") {
  NewsCatalog train = parse_news_tsv(kFixture / "train" / "news.tsv");
  NewsCatalog test = parse_news_tsv(kFixture / "dev" / "news.tsv");
  std::vector<const NewsCatalog*> both{&train, &test};
  LabelIndex cats = build_category_index(both, false);
  CHECK(cats.labels == std::vector<std::string>{"", "lifestyle", "news", "sports", "weather"});
  LabelIndex ents = build_entity_index(both);
  CHECK(ents.labels == std::vector<std::string>{"", "Q19317", "Q35535"});
  Vocabulary words = build_vocab(both);
  LabelIndex subs = build_category_index(both, true);

  NewsFeatures f = encode_news_record(*train.find("N2"), words, cats, subs, ents, 30);
  CHECK(f.title_length == 7);
  CHECK(f.category_id == cats.lookup("sports"));
  CHECK(f.subcategory_id == subs.lookup("football"));
  CHECK(f.title_token_ids[0] == words.lookup("world"));
  CHECK(f.title_entity_ids == std::vector<int>{1, 1, 0, 0, 0, 0, 0});

  NewsFeatures short_title = encode_news_record(*train.find("N2"), words, cats, subs, ents, 3);
  CHECK(short_title.title_length == 3);
  CHECK(short_title.title_entity_ids.size() == 3);

  std::istringstream punct("P\tx\ty\t?!?\t\t\t[]\t[]\n");
  NewsCatalog p;
  parse_news_lines(punct, "inline", p);
  NewsFeatures unk = encode_news_record(p.records[0], words, cats, subs, ents, 30);
  CHECK(unk.title_length == 1);
  CHECK(unk.title_token_ids[0] == Vocabulary::kUnknown);
}

TEST_CASE("load_word_embeddings: copy, reserved row, coverage, dimension guard") {
  NewsCatalog train = parse_news_tsv(kFixture / "train" / "news.tsv");
  Vocabulary v = build_vocab(train);
  const fs::path dir = scratch_dir("glove");
  {
    std::ofstream f(dir / "glove.txt");
    for (const char* token : {"world", "hello", "absent", "<pad>"}) {
      f << token;
      for (int i = 0; i < 300; ++i) f << ' ' << (token[0] == 'w' ? 0.5 : 0.25) + i * 1e-3;
      f << '\n';
    }
  }
  Rng rng(1);
  PretrainedTable<double> t = load_word_embeddings<double>(dir / "glove.txt", v, rng);
  CHECK(t.values.rows() == static_cast<Index>(v.size()));
  CHECK(t.values.cols() == 300);
  CHECK(t.values.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.values(v.lookup("world"), 0) == doctest::Approx(0.5));
  CHECK(t.values(v.lookup("world"), 299) == doctest::Approx(0.5 + 0.299));
  CHECK(t.values(v.lookup("hello"), 10) == doctest::Approx(0.26));
  CHECK(t.matched == 2);
  CHECK(t.coverage == doctest::Approx(2.0 / static_cast<double>(v.size() - 2)));
  const int other = v.lookup("cup");
  CHECK(t.values.row(other).cwiseAbs().maxCoeff() <= 0.1);
  CHECK(t.values.row(other).cwiseAbs().maxCoeff() > 0.0);

  {
    std::ofstream f(dir / "glove50.txt");
    f << "world";
    for (int i = 0; i < 50; ++i) f << " 0.1";
    f << '\n';
  }
  CHECK_THROWS_AS(load_word_embeddings<double>(dir / "glove50.txt", v, rng), ConfigError);
  CHECK_THROWS_AS(load_word_embeddings<double>(dir / "none.txt", v, rng), IoError);
}

TEST_CASE("load_entity_embeddings: copy, zero for unmatched, dimension guard") {
  NewsCatalog train = parse_news_tsv(kFixture / "train" / "news.tsv");
  LabelIndex ents = build_entity_index({&train});
  PretrainedTable<float> t = load_entity_embeddings<float>(kFixture / "train" / "entity_embedding.vec", ents, 4);
  CHECK(t.matched == 1);
  CHECK(t.coverage == doctest::Approx(0.5));
  CHECK(t.values(ents.lookup("Q19317"), 2) == doctest::Approx(0.3f));
  CHECK(t.values.row(ents.lookup("Q35535")).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(t.values.row(0).cwiseAbs().maxCoeff() == 0.0f);
  CHECK_THROWS_AS(load_entity_embeddings<float>(kFixture / "train" / "entity_embedding.vec", ents, 100), ConfigError);
}

TEST_CASE("load_dataset: golden fixture end to end") {
  DataOptions o;
  o.data_dir = kFixture;
  Dataset ds = load_dataset(o);
  CHECK(ds.news.size() == 8);  // 7 articles + padding
  CHECK(ds.users.size() == 3);
  CHECK(ds.users.at("U1") == 1);
  CHECK(ds.train.size() == 4);
  CHECK(ds.validation.size() == 2);
  CHECK(ds.test.size() == 3);
  CHECK(ds.drops.missing_history_ids == 1);
  CHECK(ds.drops.missing_candidate_ids == 1);
  CHECK(ds.drops.dropped_between_days == 1);
  CHECK(ds.drops.empty_titles == 1);
  CHECK(ds.validation[1].user_index == 0);  // U5 never seen in training
  CHECK(ds.test[0].user_index == ds.users.at("U1"));
  CHECK(ds.train[3].history == std::vector<int>{ds.news_index.at("N1")});
  CHECK(ds.train[3].candidates == std::vector<int>{ds.news_index.at("N2")});
  CHECK(ds.entity_embeddings == kFixture / "train" / "entity_embedding.vec");
  for (const auto* split : {&ds.train, &ds.validation, &ds.test}) {
    for (const auto& imp : *split) {
      for (int c : imp.candidates) {
        CHECK(c > 0);
        CHECK(c < static_cast<int>(ds.news.size()));
      }
    }
  }
  const std::string manifest = split_manifest(ds);
  CHECK(manifest.find("day\t2019-11-13\t1\tdropped") != std::string::npos);
  CHECK(manifest.find("day\t2019-11-14\t2\tvalidation") != std::string::npos);
  CHECK(manifest.find("missing_candidate_ids=1") != std::string::npos);
  CHECK(&ds.split(SplitLabel::test) == &ds.test);

  CHECK_THROWS_AS(load_dataset(DataOptions{fs::path(NNR_TEST_DATA_DIR) / "nowhere"}), IoError);
}

TEST_CASE("make_training_samples: one per click, empty histories kept, deterministic") {
  DataOptions o;
  o.data_dir = kFixture;
  Dataset ds = load_dataset(o);
  Rng a(3), b(3);
  auto s1 = make_training_samples(ds.train, 4, a);
  auto s2 = make_training_samples(ds.train, 4, b);
  // Impressions 1..4 have 1, 1, 2, 1 clicks; the fourth lost its only
  // negative to a missing id and yields nothing.
  REQUIRE(s1.size() == 4);
  CHECK(s1[2].impression == 2);
  CHECK(s1[3].impression == 2);
  CHECK(s1[1].impression == 1);
  CHECK(ds.train[1].history.empty());
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1[i].positive == s2[i].positive);
    CHECK(s1[i].negatives == s2[i].negatives);
    CHECK(s1[i].negatives.size() == 4);
    CHECK(s1[i].candidates().front() == s1[i].positive);
  }
  for (const auto& s : s1) CHECK(s.impression != 3);
}

TEST_CASE("subsample_by_user keeps whole users and is seeded") {
  SyntheticOptions so;
  so.users = 50;
  so.train_impressions = 400;
  so.test_impressions = 50;
  const fs::path dir = scratch_dir("subsample");
  write_synthetic_mind(dir, so);
  auto imps = parse_behaviors_tsv(dir / "train" / "behaviors.tsv");
  auto half = subsample_by_user(imps, 0.5, 0, 7);
  CHECK(half.size() < imps.size());
  CHECK(half.size() > 0);
  std::map<std::string, std::size_t> full_counts, kept_counts;
  for (const auto& i : imps) ++full_counts[i.user_id];
  for (const auto& i : half) ++kept_counts[i.user_id];
  for (const auto& [u, n] : kept_counts) CHECK(n == full_counts[u]);
  CHECK(subsample_by_user(imps, 0.5, 0, 7) == half);
  CHECK(subsample_by_user(imps, 0.5, 0, 8) != half);

  auto capped = subsample_by_user(imps, 1.0, 100, 7);
  CHECK(capped.size() >= 100);
  CHECK(capped.size() < 100 + 40);
  CHECK_THROWS_AS(subsample_by_user(imps, 0.0, 0, 7), ConfigError);
}

TEST_CASE("synthetic corpus is valid MIND format and deterministic") {
  SyntheticOptions so;
  so.users = 40;
  so.train_impressions = 300;
  so.test_impressions = 60;
  const fs::path a = scratch_dir("synth_a");
  const fs::path b = scratch_dir("synth_b");
  write_synthetic_mind(a, so);
  write_synthetic_mind(b, so);
  auto ia = parse_behaviors_tsv(a / "train" / "behaviors.tsv");
  CHECK(ia == parse_behaviors_tsv(b / "train" / "behaviors.tsv"));
  CHECK(ia.size() == 300);
  for (const auto& imp : ia) {
    bool pos = false, neg = false;
    for (const auto& c : imp.candidates) (c.clicked ? pos : neg) = true;
    CHECK(pos);
    CHECK(neg);
  }
  DataOptions o;
  o.data_dir = a;
  Dataset ds = load_dataset(o);
  CHECK(ds.split_info.impressions_per_day.size() == 5);
  CHECK(ds.train.size() + ds.validation.size() + ds.drops.dropped_between_days == 300);
  CHECK(ds.test.size() == 60);
  CHECK(ds.drops.missing_candidate_ids == 0);
  CHECK(ds.entities.size() > 1);
  std::size_t aligned = 0;
  for (const auto& f : ds.news) {
    for (int e : f.title_entity_ids) aligned += e > 0;
  }
  CHECK(aligned > 0);
}
