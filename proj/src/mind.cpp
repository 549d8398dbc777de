#include "nnr/mind.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace nnr {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<std::string> split_spaces(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (in >> item) out.push_back(item);
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  return out;
}

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::vector<EntityMention> parse_entities(const std::string& json_text, bool& malformed) {
  malformed = false;
  std::vector<EntityMention> out;
  if (json_text.empty()) return out;
  try {
    const nlohmann::json doc = nlohmann::json::parse(json_text);
    if (!doc.is_array()) throw std::runtime_error("not an array");
    for (const auto& e : doc) {
      EntityMention m;
      m.wikidata_id = e.value("WikidataId", std::string());
      m.label = e.value("Label", std::string());
      m.confidence = e.value("Confidence", 0.0);
      if (e.contains("OccurrenceOffsets")) m.occurrence_offsets = e.at("OccurrenceOffsets").get<std::vector<int>>();
      if (e.contains("SurfaceForms")) m.surface_forms = e.at("SurfaceForms").get<std::vector<std::string>>();
      if (!m.wikidata_id.empty()) out.push_back(std::move(m));
    }
  } catch (const std::exception&) {
    malformed = true;
    out.clear();
  }
  return out;
}

}  // namespace

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> tokens;
  int chars = 0;  // code points consumed so far
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (!is_word_byte(c)) {
      ++chars;
      ++i;
      continue;
    }
    Token t;
    t.char_offset = chars;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
      const auto b = static_cast<unsigned char>(text[i]);
      t.text.push_back(b < 0x80 ? static_cast<char>(std::tolower(b)) : static_cast<char>(b));
      if ((b & 0xC0) != 0x80) ++chars;
      ++i;
    }
    t.char_length = chars - t.char_offset;
    tokens.push_back(std::move(t));
  }
  return tokens;
}

const RawNews* NewsCatalog::find(const std::string& id) const {
  auto it = by_id.find(id);
  return it == by_id.end() ? nullptr : &records[it->second];
}

void NewsCatalog::insert(RawNews record) {
  if (by_id.count(record.news_id)) {
    ++duplicate_ids;
    return;
  }
  by_id.emplace(record.news_id, records.size());
  records.push_back(std::move(record));
}

void parse_news_lines(std::istream& in, const std::string& source, NewsCatalog& catalog) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> f = split_tabs(line);
    if (f.size() != 8) {
      throw ParseError(fmt::format("{}:{}: expected 8 tab-separated columns, found {}", source, line_no, f.size()));
    }
    RawNews r;
    r.news_id = f[0];
    r.category = f[1];
    r.subcategory = f[2];
    r.title = f[3];
    r.abstract_text = f[4];
    r.url = f[5];
    r.title_entities_json = f[6];
    r.abstract_entities_json = f[7];
    if (r.title.find_first_not_of(" \t") == std::string::npos) {
      ++catalog.empty_titles;
      continue;
    }
    r.tokens = tokenize(r.title);
    bool malformed = false;
    r.title_entities = parse_entities(r.title_entities_json, malformed);
    if (malformed) {
      ++catalog.malformed_entities;
      spdlog::warn("{}:{}: malformed title entity JSON, using no entities", source, line_no);
    }
    catalog.insert(std::move(r));
  }
}

NewsCatalog parse_news_tsv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  NewsCatalog catalog;
  parse_news_lines(in, path.string(), catalog);
  if (catalog.empty_titles > 0) spdlog::info("{}: excluded {} articles with empty titles", path.string(), catalog.empty_titles);
  return catalog;
}

void write_news_tsv(const std::filesystem::path& path, const std::vector<RawNews>& records) {
  std::ofstream out = open_output(path);
  for (const RawNews& r : records) {
    out << r.news_id << '\t' << r.category << '\t' << r.subcategory << '\t' << r.title << '\t' << r.abstract_text
        << '\t' << r.url << '\t' << (r.title_entities_json.empty() ? "[]" : r.title_entities_json) << '\t'
        << (r.abstract_entities_json.empty() ? "[]" : r.abstract_entities_json) << '\n';
  }
}

Timestamp parse_timestamp(const std::string& text) {
  int month = 0, day = 0, year = 0, hour = 0, minute = 0, second = 0;
  char meridiem[3] = {0, 0, 0};
  int consumed = 0;
  const int n = std::sscanf(text.c_str(), "%d/%d/%d %d:%d:%d %2[APMapm]%n", &month, &day, &year, &hour, &minute,
                            &second, meridiem, &consumed);
  if (n != 7 || static_cast<std::size_t>(consumed) != text.size()) {
    throw ParseError(fmt::format("bad timestamp '{}'", text));
  }
  const std::string ampm = {static_cast<char>(std::toupper(meridiem[0])), static_cast<char>(std::toupper(meridiem[1]))};
  if ((ampm != "AM" && ampm != "PM") || hour < 1 || hour > 12 || minute < 0 || minute > 59 || second < 0 ||
      second > 59) {
    throw ParseError(fmt::format("bad timestamp '{}'", text));
  }
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw ParseError(fmt::format("bad date in timestamp '{}'", text));
  const int h24 = (hour % 12) + (ampm == "PM" ? 12 : 0);
  return std::chrono::sys_days{ymd} + std::chrono::hours{h24} + std::chrono::minutes{minute} +
         std::chrono::seconds{second};
}

std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{t - day};
  const int h24 = static_cast<int>(hms.hours().count());
  const int h12 = h24 % 12 == 0 ? 12 : h24 % 12;
  return fmt::format("{}/{}/{} {}:{:02}:{:02} {}", static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     static_cast<int>(ymd.year()), h12, hms.minutes().count(), hms.seconds().count(),
                     h24 < 12 ? "AM" : "PM");
}

std::vector<Impression> parse_behaviors_lines(std::istream& in, const std::string& source) {
  std::vector<Impression> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> f = split_tabs(line);
    if (f.size() != 5) {
      throw ParseError(fmt::format("{}:{}: expected 5 tab-separated columns, found {}", source, line_no, f.size()));
    }
    Impression imp;
    imp.impression_id = f[0];
    imp.user_id = f[1];
    try {
      imp.timestamp = parse_timestamp(f[2]);
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
    imp.history = split_spaces(f[3]);
    for (const std::string& item : split_spaces(f[4])) {
      const std::size_t dash = item.rfind('-');
      const std::string suffix = dash == std::string::npos ? std::string() : item.substr(dash + 1);
      if (dash == 0 || (suffix != "0" && suffix != "1")) {
        throw ParseError(fmt::format("{}:{}: bad impression label in '{}'", source, line_no, item));
      }
      imp.candidates.push_back({item.substr(0, dash), suffix == "1"});
    }
    out.push_back(std::move(imp));
  }
  return out;
}

std::vector<Impression> parse_behaviors_tsv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_behaviors_lines(in, path.string());
}

void write_behaviors(std::ostream& out, const std::vector<Impression>& impressions) {
  for (const Impression& imp : impressions) {
    out << imp.impression_id << '\t' << imp.user_id << '\t' << format_timestamp(imp.timestamp) << '\t';
    for (std::size_t i = 0; i < imp.history.size(); ++i) out << (i ? " " : "") << imp.history[i];
    out << '\t';
    for (std::size_t i = 0; i < imp.candidates.size(); ++i) {
      out << (i ? " " : "") << imp.candidates[i].news_id << '-' << (imp.candidates[i].clicked ? '1' : '0');
    }
    out << '\n';
  }
}

void write_behaviors_tsv(const std::filesystem::path& path, const std::vector<Impression>& impressions) {
  std::ofstream out = open_output(path);
  write_behaviors(out, impressions);
}

TemporalSplit temporal_split(const std::vector<Impression>& impressions, int train_days) {
  TemporalSplit split;
  for (const Impression& imp : impressions) ++split.impressions_per_day[std::chrono::floor<std::chrono::days>(imp.timestamp)];
  if (split.impressions_per_day.size() < 2) {
    throw ConfigError("temporal split needs impressions on at least two distinct days");
  }
  std::vector<Day> days;
  for (const auto& [d, count] : split.impressions_per_day) days.push_back(d);
  split.validation_day = days.back();
  const std::size_t n_train = std::min<std::size_t>(static_cast<std::size_t>(std::max(train_days, 1)), days.size() - 1);
  split.train_days.assign(days.begin(), days.begin() + static_cast<std::ptrdiff_t>(n_train));
  const Day last_train = split.train_days.back();
  for (const Impression& imp : impressions) {
    const Day d = std::chrono::floor<std::chrono::days>(imp.timestamp);
    if (d == split.validation_day) {
      split.validation.push_back(imp);
    } else if (d <= last_train) {
      split.train.push_back(imp);
    } else {
      ++split.dropped_between;
    }
  }
  return split;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? kUnknown : it->second;
}

Vocabulary build_vocab(const std::vector<const NewsCatalog*>& catalogs, int min_freq) {
  std::unordered_map<std::string, std::size_t> counts;
  std::set<std::string> seen;  // articles shared between catalogs count once
  std::size_t articles = 0;
  for (const NewsCatalog* c : catalogs) {
    for (const RawNews& r : c->records) {
      if (!seen.insert(r.news_id).second) continue;
      ++articles;
      for (const Token& t : r.tokens) ++counts[t.text];
    }
  }
  if (articles == 0) throw ConfigError("cannot build a vocabulary from an empty catalog");
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, count] : counts) {
    if (count >= static_cast<std::size_t>(std::max(min_freq, 1))) ranked.emplace_back(token, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary v;
  v.tokens = {"<pad>", "<unk>"};
  for (auto& [token, count] : ranked) v.tokens.push_back(token);
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index.emplace(v.tokens[i], static_cast<int>(i));
  return v;
}

Vocabulary build_vocab(const NewsCatalog& catalog, int min_freq) { return build_vocab({&catalog}, min_freq); }

int LabelIndex::lookup(const std::string& label) const {
  auto it = index.find(label);
  return it == index.end() ? 0 : it->second;
}

LabelIndex build_label_index(const std::vector<std::string>& values) {
  std::set<std::string> unique(values.begin(), values.end());
  unique.erase("");
  LabelIndex li;
  li.labels.push_back("");
  for (const auto& s : unique) {
    li.index.emplace(s, static_cast<int>(li.labels.size()));
    li.labels.push_back(s);
  }
  return li;
}

LabelIndex build_category_index(const std::vector<const NewsCatalog*>& catalogs, bool subcategory) {
  std::vector<std::string> values;
  for (const NewsCatalog* c : catalogs) {
    for (const RawNews& r : c->records) values.push_back(subcategory ? r.subcategory : r.category);
  }
  return build_label_index(values);
}

LabelIndex build_entity_index(const std::vector<const NewsCatalog*>& catalogs) {
  std::vector<std::string> values;
  for (const NewsCatalog* c : catalogs) {
    for (const RawNews& r : c->records) {
      for (const EntityMention& e : r.title_entities) values.push_back(e.wikidata_id);
    }
  }
  return build_label_index(values);
}

namespace {

// Reads "key v1 ... v_dim" rows and hands each parsed row to `assign`. The
// first row fixes the format: it must hold exactly dim values. Later rows may
// carry spaces inside the key.
template <typename S, typename Assign>
std::size_t read_vector_file(const std::filesystem::path& path, int dim, Assign assign) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::vector<S> values(static_cast<std::size_t>(dim));
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    std::vector<std::string> f = split_spaces(line);
    if (f.empty()) continue;
    if (rows == 0 && f.size() != static_cast<std::size_t>(dim) + 1) {
      throw ConfigError(fmt::format("{}: expected {}-dimensional vectors, first row has {} values", path.string(), dim,
                                    f.size() - 1));
    }
    if (f.size() < static_cast<std::size_t>(dim) + 1) {
      throw ConfigError(fmt::format("{}:{}: expected {} values, found {}", path.string(), line_no, dim, f.size() - 1));
    }
    const std::size_t key_fields = f.size() - static_cast<std::size_t>(dim);
    std::string key = f[0];
    for (std::size_t i = 1; i < key_fields; ++i) key += " " + f[i];
    for (int j = 0; j < dim; ++j) {
      const std::string& s = f[key_fields + static_cast<std::size_t>(j)];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError(fmt::format("{}:{}: bad number '{}'", path.string(), line_no, s));
      }
      values[static_cast<std::size_t>(j)] = static_cast<S>(v);
    }
    assign(key, values);
    ++rows;
  }
  return rows;
}

}  // namespace

template <typename S>
PretrainedTable<S> load_word_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, Rng& rng, int dim) {
  PretrainedTable<S> table;
  const auto rows = static_cast<Index>(vocab.size());
  table.values = Matrix<S>::Zero(rows, dim);
  std::uniform_real_distribution<double> init(-0.1, 0.1);
  for (Index r = 1; r < rows; ++r) {
    for (Index c = 0; c < dim; ++c) table.values(r, c) = static_cast<S>(init(rng));
  }
  std::vector<uint8_t> seen(static_cast<std::size_t>(rows), 0);
  read_vector_file<S>(path, dim, [&](const std::string& key, const std::vector<S>& values) {
    auto it = vocab.index.find(key);
    if (it == vocab.index.end() || it->second < 2 || seen[static_cast<std::size_t>(it->second)]) return;
    seen[static_cast<std::size_t>(it->second)] = 1;
    for (int c = 0; c < dim; ++c) table.values(it->second, c) = values[static_cast<std::size_t>(c)];
    ++table.matched;
  });
  const double denom = static_cast<double>(std::max<Index>(rows - 2, 1));
  table.coverage = static_cast<double>(table.matched) / denom;
  spdlog::info("word embeddings: matched {} of {} tokens (coverage {:.4f})", table.matched, rows - 2, table.coverage);
  return table;
}

template <typename S>
PretrainedTable<S> load_entity_embeddings(const std::filesystem::path& path, const LabelIndex& entities, int dim) {
  PretrainedTable<S> table;
  const auto rows = static_cast<Index>(entities.size());
  table.values = Matrix<S>::Zero(rows, dim);
  std::vector<uint8_t> seen(static_cast<std::size_t>(rows), 0);
  read_vector_file<S>(path, dim, [&](const std::string& key, const std::vector<S>& values) {
    const int idx = entities.lookup(key);
    if (idx == 0 || seen[static_cast<std::size_t>(idx)]) return;
    seen[static_cast<std::size_t>(idx)] = 1;
    for (int c = 0; c < dim; ++c) table.values(idx, c) = values[static_cast<std::size_t>(c)];
    ++table.matched;
  });
  const double denom = static_cast<double>(std::max<Index>(rows - 1, 1));
  table.coverage = static_cast<double>(table.matched) / denom;
  spdlog::info("entity embeddings: matched {} of {} entities (coverage {:.4f})", table.matched, rows - 1,
               table.coverage);
  return table;
}

CorpusStats corpus_stats(const NewsCatalog& news, const std::vector<Impression>& impressions) {
  CorpusStats s;
  s.news = news.records.size();
  s.impressions = impressions.size();
  std::set<std::string> users, cats, subs;
  for (const Impression& imp : impressions) users.insert(imp.user_id);
  for (const RawNews& r : news.records) {
    cats.insert(r.category);
    subs.insert(r.subcategory);
  }
  s.users = users.size();
  s.categories = cats.size();
  s.subcategories = subs.size();
  return s;
}

template PretrainedTable<float> load_word_embeddings<float>(const std::filesystem::path&, const Vocabulary&, Rng&, int);
template PretrainedTable<double> load_word_embeddings<double>(const std::filesystem::path&, const Vocabulary&, Rng&, int);
template PretrainedTable<float> load_entity_embeddings<float>(const std::filesystem::path&, const LabelIndex&, int);
template PretrainedTable<double> load_entity_embeddings<double>(const std::filesystem::path&, const LabelIndex&, int);

}  // namespace nnr
