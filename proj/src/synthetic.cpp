#include "nnr/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nnr/mind.hpp"

namespace nnr {

namespace {

struct Article {
  std::string id;
  int topic = 0;
};

struct User {
  std::string id;
  std::vector<int> topics;
  std::vector<std::string> history;
};

}  // namespace

void write_synthetic_mind(const std::filesystem::path& root, const SyntheticOptions& o) {
  if (o.topics < 2 || o.news_per_topic < 2 || o.users < 1 || o.days < 2 || o.min_candidates < 2 ||
      o.max_candidates < o.min_candidates) {
    throw ConfigError("synthetic corpus options out of range");
  }
  Rng rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  std::vector<RawNews> news;
  std::vector<Article> articles;
  std::vector<std::vector<std::size_t>> by_topic(static_cast<std::size_t>(o.topics));
  for (int t = 0; t < o.topics; ++t) {
    for (int i = 0; i < o.news_per_topic; ++i) {
      RawNews r;
      r.news_id = fmt::format("N{}", articles.size() + 1);
      r.category = fmt::format("topic{}", t);
      r.subcategory = fmt::format("topic{}sub{}", t, uniform_int(0, o.subcategories_per_topic - 1));
      const int length = uniform_int(5, 12);
      std::vector<std::string> words;
      for (int w = 0; w < length; ++w) {
        words.push_back(unit(rng) < 0.6 ? fmt::format("t{}w{}", t, uniform_int(0, o.words_per_topic - 1))
                                        : fmt::format("common{}", uniform_int(0, o.common_words - 1)));
      }
      // Replace one word by an entity surface form.
      nlohmann::json entities = nlohmann::json::array();
      if (unit(rng) < 0.7) {
        const int e = uniform_int(0, o.entities_per_topic - 1);
        const int pos = uniform_int(0, length - 1);
        const std::string surface = fmt::format("Ent{}x{}", t, e);
        words[static_cast<std::size_t>(pos)] = surface;
        int offset = 0;
        for (int w = 0; w < pos; ++w) offset += static_cast<int>(words[static_cast<std::size_t>(w)].size()) + 1;
        entities.push_back({{"Label", surface},
                            {"Type", "O"},
                            {"WikidataId", fmt::format("Q{}", 1000 + t * 100 + e)},
                            {"Confidence", 1.0},
                            {"OccurrenceOffsets", {offset}},
                            {"SurfaceForms", {surface}}});
      }
      std::string title;
      for (std::size_t w = 0; w < words.size(); ++w) title += (w ? " " : "") + words[w];
      r.title = title;
      r.abstract_text = "";
      r.url = "https://example.invalid/" + r.news_id;
      r.title_entities_json = entities.dump();
      r.abstract_entities_json = "[]";
      by_topic[static_cast<std::size_t>(t)].push_back(articles.size());
      articles.push_back({r.news_id, t});
      news.push_back(std::move(r));
    }
  }

  std::vector<User> users;
  for (int u = 0; u < o.users; ++u) {
    User user;
    user.id = fmt::format("U{}", u + 1);
    const int primary = uniform_int(0, o.topics - 1);
    user.topics.push_back(primary);
    if (unit(rng) < 0.5) {
      int secondary = uniform_int(0, o.topics - 2);
      if (secondary >= primary) ++secondary;
      user.topics.push_back(secondary);
    }
    const int n_hist = uniform_int(o.min_history, o.max_history);
    for (int h = 0; h < n_hist; ++h) {
      const int topic = unit(rng) < 0.85 ? user.topics[static_cast<std::size_t>(uniform_int(0, static_cast<int>(user.topics.size()) - 1))]
                                         : uniform_int(0, o.topics - 1);
      const auto& pool = by_topic[static_cast<std::size_t>(topic)];
      user.history.push_back(articles[pool[static_cast<std::size_t>(uniform_int(0, static_cast<int>(pool.size()) - 1))]].id);
    }
    users.push_back(std::move(user));
  }

  const Day first_day = std::chrono::sys_days{std::chrono::year{2019} / 11 / 9};
  auto make_impressions = [&](int count, int day_begin, int day_count, int id_offset) {
    std::vector<Impression> out;
    for (int i = 0; i < count; ++i) {
      const User& user = users[static_cast<std::size_t>(uniform_int(0, o.users - 1))];
      Impression imp;
      imp.impression_id = std::to_string(id_offset + i + 1);
      imp.user_id = user.id;
      const int day = day_begin + (i * day_count) / std::max(count, 1);
      imp.timestamp = first_day + std::chrono::days{day} + std::chrono::seconds{uniform_int(0, 86399)};
      imp.history = user.history;
      const int n = uniform_int(o.min_candidates, o.max_candidates);
      bool any_click = false;
      for (int c = 0; c < n; ++c) {
        const bool preferred = unit(rng) < 0.3;
        const int topic = preferred ? user.topics[static_cast<std::size_t>(uniform_int(0, static_cast<int>(user.topics.size()) - 1))]
                                    : uniform_int(0, o.topics - 1);
        const auto& pool = by_topic[static_cast<std::size_t>(topic)];
        const Article& a = articles[pool[static_cast<std::size_t>(uniform_int(0, static_cast<int>(pool.size()) - 1))]];
        const bool likes = std::find(user.topics.begin(), user.topics.end(), a.topic) != user.topics.end();
        const bool clicked = unit(rng) < (likes ? o.in_topic_click : o.off_topic_click);
        any_click |= clicked;
        imp.candidates.push_back({a.id, clicked});
      }
      if (!any_click) {
        const auto& pool = by_topic[static_cast<std::size_t>(user.topics.front())];
        const Article& a = articles[pool[static_cast<std::size_t>(uniform_int(0, static_cast<int>(pool.size()) - 1))]];
        imp.candidates[static_cast<std::size_t>(uniform_int(0, n - 1))] = {a.id, true};
      }
      if (std::all_of(imp.candidates.begin(), imp.candidates.end(), [](const Candidate& c) { return c.clicked; })) {
        imp.candidates.back().clicked = false;
      }
      out.push_back(std::move(imp));
    }
    std::stable_sort(out.begin(), out.end(), [](const Impression& a, const Impression& b) { return a.timestamp < b.timestamp; });
    return out;
  };

  const std::vector<Impression> train = make_impressions(o.train_impressions, 0, o.days, 0);
  const std::vector<Impression> test = make_impressions(o.test_impressions, o.days, 1, o.train_impressions);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::string> entity_rows;
  for (int t = 0; t < o.topics; ++t) {
    std::vector<double> centre(static_cast<std::size_t>(o.entity_dim));
    for (double& v : centre) v = gauss(rng) * 0.1;
    for (int e = 0; e < o.entities_per_topic; ++e) {
      std::string row = fmt::format("Q{}", 1000 + t * 100 + e);
      for (double c : centre) row += fmt::format("\t{:.6f}", c + 0.03 * gauss(rng));
      entity_rows.push_back(std::move(row));
    }
  }

  for (const char* sub : {"train", "dev"}) {
    const std::filesystem::path dir = root / sub;
    std::filesystem::create_directories(dir);
    write_news_tsv(dir / "news.tsv", news);
    write_behaviors_tsv(dir / "behaviors.tsv", std::string(sub) == "train" ? train : test);
    std::ofstream ent(dir / "entity_embedding.vec");
    if (!ent) throw IoError("cannot write " + (dir / "entity_embedding.vec").string());
    for (const std::string& row : entity_rows) ent << row << '\n';
  }
}

}  // namespace nnr
