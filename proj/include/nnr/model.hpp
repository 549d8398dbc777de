#pragma once

#include <memory>

#include "nnr/fusion.hpp"
#include "nnr/news_encoder.hpp"
#include "nnr/user_encoder.hpp"

namespace nnr {

/// A news encoder plus, under early fusion, a user encoder. Late-fusion
/// models register no user-encoder parameters at all.
template <typename S>
class Recommender {
 public:
  Recommender(const ModelConfig& config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  ParameterStore<S>& parameters() { return *store_; }
  const ParameterStore<S>& parameters() const { return *store_; }
  const NewsEncoder<S>& news_encoder() const { return *news_encoder_; }
  const UserEncoder<S>* user_encoder() const { return user_encoder_.get(); }

  /// NPA conditions news encoding on the user, so encodings are per user.
  bool news_depends_on_user() const { return config_.variant == ModelVariant::npa; }

  Tensor<S> user_id_embedding(int user_index) const;
  Tensor<S> encode_news(const NewsFeatures& features, int user_index, const RunContext& ctx) const;

  /// Scores of the candidate rows [M, d] for one user as a [1, M] row.
  /// Only the first `length` history rows are read; an empty history scores
  /// every candidate 0.
  Tensor<S> score(const Tensor<S>& history, Index length, int user_index, const Tensor<S>& candidates,
                  const RunContext& ctx) const;

 private:
  ModelConfig config_;
  std::unique_ptr<ParameterStore<S>> store_;
  std::unique_ptr<NewsEncoder<S>> news_encoder_;
  std::unique_ptr<UserEncoder<S>> user_encoder_;
  Tensor<S> user_id_table_;
};

}  // namespace nnr
