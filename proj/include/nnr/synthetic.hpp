#pragma once

// Generator for a small MIND-format corpus with topic structure: users click
// mostly within their preferred topics, and titles of one topic share words
// and entities. Used when the real distribution is not available.

#include <cstdint>
#include <filesystem>

namespace nnr {

struct SyntheticOptions {
  int topics = 8;
  int subcategories_per_topic = 3;
  int news_per_topic = 120;
  int words_per_topic = 40;
  int common_words = 80;
  int entities_per_topic = 6;
  int users = 500;
  int train_impressions = 2500;
  int test_impressions = 800;
  int days = 5;  // days spanned by the train file; the test file is the day after
  int min_candidates = 5;
  int max_candidates = 15;
  int min_history = 0;
  int max_history = 25;
  double in_topic_click = 0.5;
  double off_topic_click = 0.03;
  int entity_dim = 100;
  std::uint64_t seed = 2019;
};

/// Writes root/train and root/dev, each with news.tsv, behaviors.tsv and
/// entity_embedding.vec.
void write_synthetic_mind(const std::filesystem::path& root, const SyntheticOptions& options);

}  // namespace nnr
