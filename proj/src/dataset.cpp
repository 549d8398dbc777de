#include "nnr/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace nnr {

std::string to_string(SplitLabel label) {
  switch (label) {
    case SplitLabel::train: return "train";
    case SplitLabel::validation: return "validation";
    case SplitLabel::test: return "test";
  }
  return "?";
}

const std::vector<IndexedImpression>& Dataset::split(SplitLabel label) const {
  switch (label) {
    case SplitLabel::train: return train;
    case SplitLabel::validation: return validation;
    case SplitLabel::test: return test;
  }
  throw ConfigError("unknown split label");
}

std::uint64_t fnv1a(const std::string& text, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

DataLayout locate_data(const std::filesystem::path& root) {
  const std::pair<const char*, const char*> candidates[] = {
      {"train", "dev"}, {"MINDsmall_train", "MINDsmall_dev"}, {"MINDlarge_train", "MINDlarge_dev"}};
  for (const auto& [train, test] : candidates) {
    if (std::filesystem::exists(root / train / "behaviors.tsv") && std::filesystem::exists(root / test / "behaviors.tsv")) {
      return {root / train, root / test};
    }
  }
  throw IoError(fmt::format("{}: no train/ + dev/ MIND directories with behaviors.tsv found", root.string()));
}

std::vector<Impression> subsample_by_user(const std::vector<Impression>& impressions, double fraction,
                                          std::size_t max_impressions, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("subsample fraction must be in (0, 1]");
  std::map<std::string, std::size_t> per_user;
  for (const Impression& imp : impressions) ++per_user[imp.user_id];
  std::vector<std::pair<std::uint64_t, std::string>> ranked;
  for (const auto& [user, count] : per_user) {
    const std::uint64_t h = mix64(fnv1a(user) ^ mix64(seed));
    const double u = static_cast<double>(h >> 11) / 9007199254740992.0;
    if (u < fraction) ranked.emplace_back(h, user);
  }
  std::sort(ranked.begin(), ranked.end());
  std::set<std::string> keep;
  std::size_t total = 0;
  for (const auto& [h, user] : ranked) {
    if (max_impressions > 0 && total >= max_impressions) break;
    keep.insert(user);
    total += per_user[user];
  }
  std::vector<Impression> out;
  for (const Impression& imp : impressions) {
    if (keep.count(imp.user_id)) out.push_back(imp);
  }
  return out;
}

NewsFeatures encode_news_record(const RawNews& record, const Vocabulary& words, const LabelIndex& categories,
                                const LabelIndex& subcategories, const LabelIndex& entities, int max_title_length) {
  NewsFeatures f;
  f.news_id = record.news_id;
  f.category_id = categories.lookup(record.category);
  f.subcategory_id = subcategories.lookup(record.subcategory);
  const std::size_t n = std::min(record.tokens.size(), static_cast<std::size_t>(std::max(max_title_length, 1)));
  for (std::size_t i = 0; i < n; ++i) f.title_token_ids.push_back(words.lookup(record.tokens[i].text));
  f.title_entity_ids.assign(n, 0);
  for (const EntityMention& e : record.title_entities) {
    const int id = entities.lookup(e.wikidata_id);
    if (id == 0) continue;
    for (std::size_t occ = 0; occ < e.occurrence_offsets.size(); ++occ) {
      const int start = e.occurrence_offsets[occ];
      int length = 1;
      if (occ < e.surface_forms.size()) {
        length = 0;
        for (unsigned char c : e.surface_forms[occ]) length += (c & 0xC0) != 0x80;
      } else if (!e.surface_forms.empty()) {
        length = 0;
        for (unsigned char c : e.surface_forms.front()) length += (c & 0xC0) != 0x80;
      }
      const int end = start + std::max(length, 1);
      for (std::size_t i = 0; i < n; ++i) {
        const Token& t = record.tokens[i];
        if (t.char_offset >= start && t.char_offset + t.char_length <= end && f.title_entity_ids[i] == 0) {
          f.title_entity_ids[i] = id;
        }
      }
    }
  }
  if (f.title_token_ids.empty()) {
    f.title_token_ids.push_back(Vocabulary::kUnknown);
    f.title_entity_ids.push_back(0);
  }
  f.title_length = static_cast<int>(f.title_token_ids.size());
  return f;
}

namespace {

std::vector<IndexedImpression> index_impressions(const std::vector<Impression>& raw, const Dataset& ds,
                                                 std::size_t max_history, DropStats& drops) {
  std::vector<IndexedImpression> out;
  out.reserve(raw.size());
  for (const Impression& imp : raw) {
    IndexedImpression x;
    x.impression_id = imp.impression_id;
    auto user = ds.users.find(imp.user_id);
    x.user_index = user == ds.users.end() ? 0 : user->second;
    std::vector<int> history;
    for (const std::string& id : imp.history) {
      auto it = ds.news_index.find(id);
      if (it == ds.news_index.end()) {
        ++drops.missing_history_ids;
        continue;
      }
      history.push_back(it->second);
    }
    x.history = truncate_history(history, max_history);
    for (const Candidate& c : imp.candidates) {
      auto it = ds.news_index.find(c.news_id);
      if (it == ds.news_index.end()) {
        ++drops.missing_candidate_ids;
        continue;
      }
      x.candidates.push_back(it->second);
      x.labels.push_back(c.clicked ? 1 : 0);
    }
    if (x.candidates.empty()) ++drops.impressions_without_candidates;
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace

Dataset load_dataset(const DataOptions& options) {
  const DataLayout layout = locate_data(options.data_dir);
  NewsCatalog train_news = parse_news_tsv(layout.train_dir / "news.tsv");
  NewsCatalog test_news = parse_news_tsv(layout.test_dir / "news.tsv");
  std::vector<Impression> train_raw = parse_behaviors_tsv(layout.train_dir / "behaviors.tsv");
  std::vector<Impression> test_raw = parse_behaviors_tsv(layout.test_dir / "behaviors.tsv");

  Dataset ds;
  ds.train_stats = corpus_stats(train_news, train_raw);
  ds.test_stats = corpus_stats(test_news, test_raw);
  ds.drops.empty_titles = train_news.empty_titles + test_news.empty_titles;
  ds.drops.malformed_entities = train_news.malformed_entities + test_news.malformed_entities;

  if (options.subsample_fraction < 1.0 || options.max_impressions > 0) {
    train_raw = subsample_by_user(train_raw, options.subsample_fraction, options.max_impressions, options.subsample_seed);
    test_raw = subsample_by_user(test_raw, options.subsample_fraction, options.max_impressions, options.subsample_seed);
  }

  std::vector<const NewsCatalog*> catalogs{&train_news, &test_news};
  ds.words = build_vocab(catalogs, options.min_word_freq);
  ds.categories = build_category_index(catalogs, false);
  ds.subcategories = build_category_index(catalogs, true);
  ds.entities = build_entity_index(catalogs);

  ds.news.push_back(NewsFeatures{"<pad>", {Vocabulary::kUnknown}, 1, 0, 0, {0}});
  for (const NewsCatalog* c : catalogs) {
    for (const RawNews& r : c->records) {
      if (ds.news_index.count(r.news_id)) continue;
      ds.news_index.emplace(r.news_id, static_cast<int>(ds.news.size()));
      ds.news.push_back(encode_news_record(r, ds.words, ds.categories, ds.subcategories, ds.entities,
                                           options.max_title_length));
    }
  }

  ds.split_info = temporal_split(train_raw, options.train_days);
  ds.drops.dropped_between_days = ds.split_info.dropped_between;
  std::set<std::string> train_users;
  for (const Impression& imp : ds.split_info.train) train_users.insert(imp.user_id);
  for (const std::string& u : train_users) ds.users.emplace(u, static_cast<int>(ds.users.size()) + 1);

  ds.train = index_impressions(ds.split_info.train, ds, options.max_history, ds.drops);
  ds.validation = index_impressions(ds.split_info.validation, ds, options.max_history, ds.drops);
  ds.test = index_impressions(test_raw, ds, options.max_history, ds.drops);
  ds.split_info.train.clear();
  ds.split_info.validation.clear();

  ds.word_embeddings = options.word_embeddings;
  ds.entity_embeddings = options.entity_embeddings.empty() && std::filesystem::exists(layout.train_dir / "entity_embedding.vec")
                             ? layout.train_dir / "entity_embedding.vec"
                             : options.entity_embeddings;
  spdlog::info("dataset: {} news, {} train / {} validation / {} test impressions, {} training users", ds.news.size() - 1,
               ds.train.size(), ds.validation.size(), ds.test.size(), ds.users.size());
  return ds;
}

std::vector<int> TrainingSample::candidates() const {
  std::vector<int> out{positive};
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

std::vector<TrainingSample> make_training_samples(const std::vector<IndexedImpression>& impressions, int k, Rng& rng) {
  std::vector<TrainingSample> out;
  std::vector<LabeledCandidate<int>> labeled;
  for (std::size_t i = 0; i < impressions.size(); ++i) {
    const IndexedImpression& imp = impressions[i];
    labeled.clear();
    for (std::size_t j = 0; j < imp.candidates.size(); ++j) labeled.push_back({imp.candidates[j], imp.labels[j] != 0});
    for (auto& s : sample_negatives(labeled, k, rng)) out.push_back({i, s.positive, std::move(s.negatives)});
  }
  return out;
}

std::string split_manifest(const Dataset& ds) {
  std::ostringstream out;
  auto day_text = [](Day d) {
    const std::chrono::year_month_day ymd{d};
    return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()));
  };
  out << "# split manifest\n";
  out << "train_file\tnews=" << ds.train_stats.news << "\tusers=" << ds.train_stats.users
      << "\timpressions=" << ds.train_stats.impressions << "\tcategories=" << ds.train_stats.categories
      << "\tsubcategories=" << ds.train_stats.subcategories << '\n';
  out << "test_file\tnews=" << ds.test_stats.news << "\tusers=" << ds.test_stats.users
      << "\timpressions=" << ds.test_stats.impressions << "\tcategories=" << ds.test_stats.categories
      << "\tsubcategories=" << ds.test_stats.subcategories << '\n';
  for (const auto& [day, count] : ds.split_info.impressions_per_day) {
    std::string role = "dropped";
    if (day == ds.split_info.validation_day) role = "validation";
    else if (std::find(ds.split_info.train_days.begin(), ds.split_info.train_days.end(), day) != ds.split_info.train_days.end())
      role = "train";
    out << "day\t" << day_text(day) << '\t' << count << '\t' << role << '\n';
  }
  out << "split\ttrain\t" << ds.train.size() << '\n';
  out << "split\tvalidation\t" << ds.validation.size() << '\n';
  out << "split\ttest\t" << ds.test.size() << "\t(distribution validation portion)\n";
  out << "vocab\twords=" << ds.words.size() << "\tcategories=" << ds.categories.size() - 1
      << "\tsubcategories=" << ds.subcategories.size() - 1 << "\tentities=" << ds.entities.size() - 1
      << "\tusers=" << ds.users.size() << '\n';
  out << "drops\tempty_titles=" << ds.drops.empty_titles << "\tmalformed_entities=" << ds.drops.malformed_entities
      << "\tmissing_history_ids=" << ds.drops.missing_history_ids
      << "\tmissing_candidate_ids=" << ds.drops.missing_candidate_ids
      << "\timpressions_without_candidates=" << ds.drops.impressions_without_candidates
      << "\tdropped_between_days=" << ds.drops.dropped_between_days << '\n';
  return out.str();
}

}  // namespace nnr
