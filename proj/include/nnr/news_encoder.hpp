#pragma once

#include <string>
#include <vector>

#include "nnr/layers.hpp"
#include "nnr/model_config.hpp"

namespace nnr {

/// Encoder input for one article. Token and entity ids beyond title_length
/// are padding and never read.
struct NewsFeatures {
  std::string news_id;
  std::vector<int> title_token_ids;
  int title_length = 0;
  int category_id = 0;
  int subcategory_id = 0;
  std::vector<int> title_entity_ids;  // aligned with title tokens, 0 = no entity
};

template <typename S>
struct NewsEmbedding {
  Tensor<S> vector;  // [1, d_model]
  ModelVariant variant;
};

/// Word, entity and category tables plus the per-variant contextualization
/// that turns a title into one news vector.
template <typename S>
class NewsEncoder {
 public:
  NewsEncoder(const ModelConfig& config, ParameterStore<S>& store, Rng& rng);

  /// Returns [1, d_model]. NPA requires user_context ([1, user_id_dim]).
  Tensor<S> encode(const NewsFeatures& features, const Tensor<S>* user_context, const RunContext& ctx) const;

  NewsEmbedding<S> embed(const NewsFeatures& features, const Tensor<S>* user_context, const RunContext& ctx) const {
    return {encode(features, user_context, ctx), config_.variant};
  }

  /// [T, word_dim] rows of the word table.
  Tensor<S> lookup_word_embeddings(std::span<const int> token_ids) const;
  /// [1, category_out] from the concatenated category and subcategory rows.
  Tensor<S> embed_category(int category_id, int subcategory_id) const;

  Index output_dim() const { return config_.d_model(); }
  const Tensor<S>& word_table() const { return word_table_; }
  const Tensor<S>& entity_table() const { return entity_table_; }

 private:
  Tensor<S> title_words(const NewsFeatures& f, const RunContext& ctx) const;
  Tensor<S> drop(const Tensor<S>& x, const RunContext& ctx) const;
  void check_indices(const NewsFeatures& f) const;

  ModelConfig config_;
  Tensor<S> word_table_;
  Tensor<S> entity_table_;
  Tensor<S> category_table_;
  Tensor<S> subcategory_table_;
  LinearLayer<S> category_projection_;
  Conv1dParams<S> title_cnn_;
  AdditiveAttentionParams<S> title_attention_;
  AdditiveAttentionParams<S> view_attention_;     // NAML, MINS
  MultiHeadAttentionParams<S> title_self_attention_;
  LinearLayer<S> user_query_;                     // NPA
  LinearLayer<S> personal_projection_;            // NPA
  LinearLayer<S> entity_alignment_;               // DKN
  std::vector<Conv1dParams<S>> knowledge_cnn_;    // DKN
  AdditiveAttentionParams<S> entity_attention_;   // CAUM
  LinearLayer<S> output_projection_;              // CAUM
};

}  // namespace nnr
