#pragma once

// MIND distribution format: news.tsv and behaviors.tsv parsing, the temporal
// train/validation split, vocabularies, and pretrained embedding files.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "nnr/ops.hpp"

namespace nnr {

struct Token {
  std::string text;
  int char_offset = 0;  // in code points, matching the entity offsets
  int char_length = 0;
};

/// Lower-cases ASCII and splits on runs of non-alphanumeric bytes. Bytes of
/// multi-byte UTF-8 sequences count as alphanumeric.
std::vector<Token> tokenize(const std::string& text);

struct EntityMention {
  std::string wikidata_id;
  std::string label;
  double confidence = 0.0;
  std::vector<int> occurrence_offsets;
  std::vector<std::string> surface_forms;
};

struct RawNews {
  std::string news_id;
  std::string category;
  std::string subcategory;
  std::string title;
  std::string abstract_text;
  std::string url;
  std::string title_entities_json;
  std::string abstract_entities_json;
  std::vector<Token> tokens;
  std::vector<EntityMention> title_entities;
};

struct NewsCatalog {
  std::vector<RawNews> records;  // file order
  std::unordered_map<std::string, std::size_t> by_id;
  std::size_t empty_titles = 0;
  std::size_t malformed_entities = 0;
  std::size_t duplicate_ids = 0;

  const RawNews* find(const std::string& id) const;
  void insert(RawNews record);
};

NewsCatalog parse_news_tsv(const std::filesystem::path& path);
/// Appends lines of one news.tsv; `source` names the input in error messages.
void parse_news_lines(std::istream& in, const std::string& source, NewsCatalog& catalog);
void write_news_tsv(const std::filesystem::path& path, const std::vector<RawNews>& records);

using Timestamp = std::chrono::sys_seconds;

struct Candidate {
  std::string news_id;
  bool clicked = false;
  bool operator==(const Candidate&) const = default;
};

struct Impression {
  std::string impression_id;
  std::string user_id;
  Timestamp timestamp{};
  std::vector<std::string> history;
  std::vector<Candidate> candidates;
  bool operator==(const Impression&) const = default;
};

/// "MM/DD/YYYY H:MM:SS AM|PM".
Timestamp parse_timestamp(const std::string& text);
std::string format_timestamp(Timestamp t);

std::vector<Impression> parse_behaviors_tsv(const std::filesystem::path& path);
std::vector<Impression> parse_behaviors_lines(std::istream& in, const std::string& source);
void write_behaviors_tsv(const std::filesystem::path& path, const std::vector<Impression>& impressions);
void write_behaviors(std::ostream& out, const std::vector<Impression>& impressions);

using Day = std::chrono::sys_days;

struct TemporalSplit {
  std::vector<Impression> train;
  std::vector<Impression> validation;
  std::map<Day, std::size_t> impressions_per_day;
  std::vector<Day> train_days;
  Day validation_day{};
  std::size_t dropped_between = 0;  // impressions on days between the two portions
};

/// Calendar days as written. The last day is validation; the first
/// min(train_days, #days - 1) days are training.
TemporalSplit temporal_split(const std::vector<Impression>& impressions, int train_days = 4);

/// Keeps the max_len most recent (trailing) items.
template <typename T>
std::vector<T> truncate_history(const std::vector<T>& history, std::size_t max_len = 50) {
  if (history.size() <= max_len) return history;
  return std::vector<T>(history.end() - static_cast<std::ptrdiff_t>(max_len), history.end());
}

/// Token index with 0 = padding and 1 = unknown; remaining tokens ordered by
/// descending frequency, then lexicographically.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;
  std::vector<std::string> tokens;  // tokens[0] = "<pad>", tokens[1] = "<unk>"
  std::unordered_map<std::string, int> index;

  int lookup(const std::string& token) const;
  std::size_t size() const { return tokens.size(); }
  bool operator==(const Vocabulary& other) const { return tokens == other.tokens; }
};

Vocabulary build_vocab(const std::vector<const NewsCatalog*>& catalogs, int min_freq = 1);
Vocabulary build_vocab(const NewsCatalog& catalog, int min_freq = 1);

/// Label index with 0 reserved; labels sorted lexicographically from 1.
struct LabelIndex {
  std::vector<std::string> labels;  // labels[0] = ""
  std::unordered_map<std::string, int> index;
  int lookup(const std::string& label) const;  // 0 when absent
  std::size_t size() const { return labels.size(); }
};

LabelIndex build_label_index(const std::vector<std::string>& values);
LabelIndex build_category_index(const std::vector<const NewsCatalog*>& catalogs, bool subcategory);
LabelIndex build_entity_index(const std::vector<const NewsCatalog*>& catalogs);

template <typename S>
struct PretrainedTable {
  Matrix<S> values;
  std::size_t matched = 0;
  double coverage = 0.0;  // matched / (rows - reserved)
};

/// Text file of "token v1 ... v_dim" lines. Matched rows are copied, the rest
/// drawn from U(-0.1, 0.1); row 0 stays zero. A file whose rows are not
/// dim-dimensional is a configuration error.
template <typename S>
PretrainedTable<S> load_word_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, Rng& rng,
                                        int dim = 300);

/// As load_word_embeddings with unmatched rows left at zero.
template <typename S>
PretrainedTable<S> load_entity_embeddings(const std::filesystem::path& path, const LabelIndex& entities,
                                          int dim = 100);

/// Descriptive counts of a parsed distribution split.
struct CorpusStats {
  std::size_t news = 0;
  std::size_t users = 0;
  std::size_t impressions = 0;
  std::size_t categories = 0;
  std::size_t subcategories = 0;
};

CorpusStats corpus_stats(const NewsCatalog& news, const std::vector<Impression>& impressions);

}  // namespace nnr
