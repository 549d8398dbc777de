#pragma once

// Integer-indexed view of a MIND distribution: encoded news, impressions over
// news indices, the temporal split, and the sample stream used for training.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nnr/mind.hpp"
#include "nnr/objectives.hpp"
#include "nnr/news_encoder.hpp"

namespace nnr {

enum class SplitLabel { train, validation, test };
std::string to_string(SplitLabel label);

struct IndexedImpression {
  std::string impression_id;
  int user_index = 0;            // 0 = not seen in training
  std::vector<int> history;      // news indices, oldest first, truncated
  std::vector<int> candidates;   // news indices
  std::vector<std::uint8_t> labels;
};

struct DropStats {
  std::size_t missing_history_ids = 0;
  std::size_t missing_candidate_ids = 0;
  std::size_t impressions_without_candidates = 0;
  std::size_t empty_titles = 0;
  std::size_t malformed_entities = 0;
  std::size_t dropped_between_days = 0;
};

struct DataOptions {
  std::filesystem::path data_dir;
  std::filesystem::path word_embeddings;    // optional GloVe-format file
  std::filesystem::path entity_embeddings;  // optional; defaults to train dir entity_embedding.vec
  double subsample_fraction = 1.0;          // by user hash
  std::size_t max_impressions = 0;          // 0 = no cap; whole users are kept
  std::uint64_t subsample_seed = 0;
  int max_title_length = 30;
  std::size_t max_history = 50;
  int min_word_freq = 1;
  int train_days = 4;
  int word_dim = 300;
  int entity_dim = 100;
};

struct Dataset {
  std::vector<NewsFeatures> news;  // index 0 is an unused padding article
  std::unordered_map<std::string, int> news_index;
  Vocabulary words;
  LabelIndex categories;
  LabelIndex subcategories;
  LabelIndex entities;
  std::unordered_map<std::string, int> users;  // training users -> 1..U
  std::vector<IndexedImpression> train;
  std::vector<IndexedImpression> validation;
  std::vector<IndexedImpression> test;
  TemporalSplit split_info;  // train/validation impression lists cleared after indexing
  CorpusStats train_stats;
  CorpusStats test_stats;
  DropStats drops;
  std::filesystem::path word_embeddings;
  std::filesystem::path entity_embeddings;

  const std::vector<IndexedImpression>& split(SplitLabel label) const;
  Index num_users() const { return static_cast<Index>(users.size()) + 1; }
};

/// Locates the train and test (distribution validation) directories under a
/// data root: train/ + dev/, or MINDsmall_train/ + MINDsmall_dev/.
struct DataLayout {
  std::filesystem::path train_dir;
  std::filesystem::path test_dir;
};
DataLayout locate_data(const std::filesystem::path& root);

/// Keeps whole users: those whose seeded hash falls below `fraction`, then, if
/// max_impressions > 0, users in hash order until the cap is reached.
std::vector<Impression> subsample_by_user(const std::vector<Impression>& impressions, double fraction,
                                          std::size_t max_impressions, std::uint64_t seed);

Dataset load_dataset(const DataOptions& options);

/// Converts one raw article to encoder inputs, aligning title entities to
/// the tokens they cover. Titles without tokens get a single unknown token.
NewsFeatures encode_news_record(const RawNews& record, const Vocabulary& words, const LabelIndex& categories,
                                const LabelIndex& subcategories, const LabelIndex& entities, int max_title_length);

struct TrainingSample {
  std::size_t impression = 0;      // index into the split
  int positive = 0;                // news index
  std::vector<int> negatives;      // news indices
  /// Candidates ordered positive first, then negatives.
  std::vector<int> candidates() const;
};

/// One sample per clicked candidate with K sampled negatives. Deterministic
/// for a given rng state.
std::vector<TrainingSample> make_training_samples(const std::vector<IndexedImpression>& impressions, int k, Rng& rng);

/// Plain-text summary: per-day counts, split sizes, and drop statistics.
std::string split_manifest(const Dataset& dataset);

std::uint64_t fnv1a(const std::string& text, std::uint64_t seed = 0);

}  // namespace nnr
