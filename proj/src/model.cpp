#include "nnr/model.hpp"

namespace nnr {

template <typename S>
Recommender<S>::Recommender(const ModelConfig& config, Rng& rng)
    : config_(config), store_(std::make_unique<ParameterStore<S>>()) {
  config_.validate();
  news_encoder_ = std::make_unique<NewsEncoder<S>>(config_, *store_, rng);
  if (config_.variant == ModelVariant::npa) {
    user_id_table_ = store_->add("emb.user_id", config_.num_users, config_.user_id_dim, Init::uniform, rng);
    user_id_table_.mutable_value().row(0).setZero();
    store_->at("emb.user_id").frozen_padding_row = true;
  }
  if (config_.fusion == FusionMode::early) {
    user_encoder_ = std::make_unique<UserEncoder<S>>(config_, *store_, rng);
  }
}

template <typename S>
Tensor<S> Recommender<S>::user_id_embedding(int user_index) const {
  if (!user_id_table_.defined()) return {};
  const int idx[] = {user_index};
  return gather_rows(user_id_table_, std::span<const int>(idx), true);
}

template <typename S>
Tensor<S> Recommender<S>::encode_news(const NewsFeatures& features, int user_index, const RunContext& ctx) const {
  if (news_depends_on_user()) {
    Tensor<S> user = user_id_embedding(user_index);
    return news_encoder_->encode(features, &user, ctx);
  }
  return news_encoder_->encode(features, nullptr, ctx);
}

template <typename S>
Tensor<S> Recommender<S>::score(const Tensor<S>& history, Index length, int user_index, const Tensor<S>& candidates,
                                const RunContext& ctx) const {
  const Index d = config_.d_model();
  if (candidates.cols() != d) throw ShapeError("candidate embeddings must have d_model columns");
  if (length == 0) return Tensor<S>::zeros(1, candidates.rows());
  if (config_.fusion == FusionMode::late) return score_late_all(history, length, candidates);

  ClickHistory<S> clicks{history, length, user_index, user_id_embedding(user_index)};
  if (!is_candidate_aware(config_.variant)) {
    Tensor<S> user = user_encoder_->encode(clicks, nullptr, ctx).vector;
    return matmul_nt(user, candidates);
  }
  std::vector<Tensor<S>> scores;
  scores.reserve(static_cast<std::size_t>(candidates.rows()));
  for (Index m = 0; m < candidates.rows(); ++m) {
    Tensor<S> candidate = row_of(candidates, m);
    Tensor<S> user = user_encoder_->encode(clicks, &candidate, ctx).vector;
    scores.push_back(score_early(user, candidate).value);
  }
  return concat_cols(scores);
}

template class Recommender<float>;
template class Recommender<double>;

}  // namespace nnr
