#pragma once

#include "nnr/layers.hpp"
#include "nnr/model_config.hpp"

namespace nnr {

/// Clicked-news embeddings with their true length; rows past `length` are
/// padding and are ignored.
template <typename S>
struct ClickHistory {
  Tensor<S> news_embeddings;  // [rows >= length, d_model]
  Index length = 0;
  int user_index = 0;         // 0 = user unseen during training
  Tensor<S> user_id_embedding;  // NPA only, [1, user_id_dim]
};

template <typename S>
struct UserEmbedding {
  Tensor<S> vector;  // [1, d_model]
  bool candidate_aware = false;
};

/// Row gather from the long-term user table. In training mode the whole
/// vector is replaced by zeros with probability mask_prob.
template <typename S>
Tensor<S> lookup_long_term_user(int user_index, const Tensor<S>& table, double mask_prob, const RunContext& ctx);

/// Early-fusion user encoders for every model family.
template <typename S>
class UserEncoder {
 public:
  UserEncoder(const ModelConfig& config, ParameterStore<S>& store, Rng& rng);

  /// candidate ([1, d_model]) is required for DKN and CAUM and ignored otherwise.
  UserEmbedding<S> encode(const ClickHistory<S>& history, const Tensor<S>* candidate, const RunContext& ctx) const;

  const Tensor<S>& long_term_table() const { return long_term_; }

 private:
  Tensor<S> drop(const Tensor<S>& x, const RunContext& ctx) const;
  Tensor<S> gru_final(const Tensor<S>& seq, const Tensor<S>& h0, const GruParams<S>& gru) const;

  ModelConfig config_;
  AdditiveAttentionParams<S> attention_;
  LinearLayer<S> user_query_;             // NPA
  LinearLayer<S> personal_projection_;    // NPA
  MultiHeadAttentionParams<S> self_attention_;
  GruParams<S> gru_;
  std::vector<GruParams<S>> channel_grus_;  // MINS
  AdditiveAttentionParams<S> combine_attention_;
  Tensor<S> long_term_;                     // LSTUR
  LinearLayer<S> pair_hidden_;              // DKN
  LinearLayer<S> pair_output_;              // DKN
  LinearLayer<S> candidate_projection_;     // CAUM
  LinearLayer<S> aware_cnn_;                // CAUM
  LinearLayer<S> click_projection_;         // CAUM
  LinearLayer<S> candidate_key_;            // CAUM
  Tensor<S> aware_query_;                   // CAUM
  LinearLayer<S> output_projection_;        // CAUM
};

}  // namespace nnr
