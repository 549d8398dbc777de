#pragma once

#include <random>

#include "nnr/model_config.hpp"
#include "nnr/news_encoder.hpp"

namespace nnr::testing {

using Mat = Matrix<double>;

/// Reduced dimensions so finite-difference checks over whole models stay fast.
inline ModelConfig small_config(ModelVariant variant, FusionMode fusion = FusionMode::early) {
  ModelConfig c;
  c.variant = variant;
  c.fusion = fusion;
  c.num_words = 20;
  c.num_categories = 5;
  c.num_subcategories = 7;
  c.num_entities = 9;
  c.num_users = 6;
  c.word_dim = 6;
  c.entity_dim = 4;
  c.category_dim = 3;
  c.category_out = 4;
  c.query_dim = 5;
  c.heads = 2;
  c.head_dim = 3;
  c.num_filters = 6;
  c.user_id_dim = 3;
  c.mins_channels = 2;
  c.dkn_filters = 2;
  c.dkn_attention_hidden = 4;
  c.caum_heads = 2;
  c.caum_head_dim = 3;
  c.caum_filters = 4;
  c.caum_candidate_dim = 3;
  c.caum_d_model = 6;
  return c;
}

inline NewsFeatures random_features(const ModelConfig& c, Rng& rng, int max_len = 8) {
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<int> word(1, static_cast<int>(c.num_words) - 1);
  std::uniform_int_distribution<int> cat(1, static_cast<int>(c.num_categories) - 1);
  std::uniform_int_distribution<int> sub(1, static_cast<int>(c.num_subcategories) - 1);
  std::uniform_int_distribution<int> ent(0, static_cast<int>(c.num_entities) - 1);
  NewsFeatures f;
  f.news_id = "N" + std::to_string(rng() % 100000);
  f.title_length = len(rng);
  const int padded = 10;
  f.title_token_ids.assign(padded, 0);
  f.title_entity_ids.assign(padded, 0);
  for (int i = 0; i < f.title_length; ++i) {
    f.title_token_ids[static_cast<std::size_t>(i)] = word(rng);
    f.title_entity_ids[static_cast<std::size_t>(i)] = (rng() % 2) ? ent(rng) : 0;
  }
  f.category_id = cat(rng);
  f.subcategory_id = sub(rng);
  return f;
}

}  // namespace nnr::testing
