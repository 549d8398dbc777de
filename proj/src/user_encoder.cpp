#include "nnr/user_encoder.hpp"

namespace nnr {

template <typename S>
Tensor<S> lookup_long_term_user(int user_index, const Tensor<S>& table, double mask_prob, const RunContext& ctx) {
  if (user_index < 0 || user_index >= table.rows()) {
    throw IndexError("long-term user index " + std::to_string(user_index) + " outside table of " +
                     std::to_string(table.rows()) + " rows");
  }
  if (ctx.training && ctx.rng != nullptr && mask_prob > 0.0) {
    std::bernoulli_distribution masked(mask_prob);
    if (masked(*ctx.rng)) return Tensor<S>::zeros(1, table.cols());
  }
  const int idx[] = {user_index};
  return gather_rows(table, std::span<const int>(idx), true);
}

template <typename S>
UserEncoder<S>::UserEncoder(const ModelConfig& config, ParameterStore<S>& store, Rng& rng) : config_(config) {
  config_.validate();
  const Index d = config_.d_model();
  auto self_attention = [&](Index heads) {
    if (d % heads != 0) throw ConfigError("user self-attention: d_model not divisible by heads");
    return make_multi_head_attention(store, "ue.self_attention", d, heads, d / heads, rng);
  };

  switch (config_.variant) {
    case ModelVariant::npa:
      user_query_ = make_linear(store, "ue.user_query", config_.user_id_dim, config_.query_dim, true, rng);
      personal_projection_ = make_linear(store, "ue.personal_projection", d, config_.query_dim, true, rng);
      break;
    case ModelVariant::naml:
      attention_ = make_additive_attention(store, "ue.attention", d, config_.query_dim, rng);
      break;
    case ModelVariant::nrms:
      self_attention_ = self_attention(config_.heads);
      attention_ = make_additive_attention(store, "ue.attention", d, config_.query_dim, rng);
      break;
    case ModelVariant::lstur_ini:
    case ModelVariant::lstur_con: {
      const Index hidden = config_.variant == ModelVariant::lstur_ini ? d : d / 2;
      gru_ = make_gru(store, "ue.gru", d, hidden, rng);
      long_term_ = store.add("ue.long_term", config_.num_users, hidden, Init::uniform, rng);
      long_term_.mutable_value().row(0).setZero();
      store.at("ue.long_term").frozen_padding_row = true;
      break;
    }
    case ModelVariant::cennewsrec:
      gru_ = make_gru(store, "ue.gru", d, d, rng);
      self_attention_ = self_attention(config_.heads);
      attention_ = make_additive_attention(store, "ue.attention", d, config_.query_dim, rng);
      combine_attention_ = make_additive_attention(store, "ue.combine_attention", d, config_.query_dim, rng);
      break;
    case ModelVariant::mins:
      self_attention_ = self_attention(config_.heads);
      for (Index c = 0; c < config_.mins_channels; ++c) {
        channel_grus_.push_back(make_gru(store, "ue.channel_gru.c" + std::to_string(c), d, d, rng));
      }
      attention_ = make_additive_attention(store, "ue.attention", d, config_.query_dim, rng);
      break;
    case ModelVariant::dkn:
      pair_hidden_ = make_linear(store, "ue.pair_hidden", 2 * d, config_.dkn_attention_hidden, true, rng);
      pair_output_ = make_linear(store, "ue.pair_output", config_.dkn_attention_hidden, 1, true, rng);
      break;
    case ModelVariant::caum: {
      const Index cand = config_.caum_candidate_dim;
      const Index long_range = config_.caum_heads * config_.caum_head_dim;
      candidate_projection_ = make_linear(store, "ue.candidate_projection", d, cand, true, rng);
      self_attention_ = make_multi_head_attention(store, "ue.self_attention", d, config_.caum_heads,
                                                  config_.caum_head_dim, rng, d + cand);
      aware_cnn_ = make_linear(store, "ue.aware_cnn", config_.caum_window * d + cand, config_.caum_filters, true, rng);
      click_projection_ =
          make_linear(store, "ue.click_projection", long_range + config_.caum_filters, config_.query_dim, true, rng);
      candidate_key_ = make_linear(store, "ue.candidate_key", cand, config_.query_dim, false, rng);
      aware_query_ = store.add("ue.aware_query", 1, config_.query_dim, Init::uniform, rng);
      output_projection_ = make_linear(store, "ue.output_projection", long_range + config_.caum_filters, d, true, rng);
      break;
    }
  }
}

template <typename S>
Tensor<S> UserEncoder<S>::drop(const Tensor<S>& x, const RunContext& ctx) const {
  if (!ctx.dropout_active()) return x;
  return dropout(x, config_.dropout, *ctx.rng);
}

template <typename S>
Tensor<S> UserEncoder<S>::gru_final(const Tensor<S>& seq, const Tensor<S>& h0, const GruParams<S>& gru) const {
  return gru_forward(seq, h0, gru).final;
}

template <typename S>
UserEmbedding<S> UserEncoder<S>::encode(const ClickHistory<S>& history, const Tensor<S>* candidate,
                                        const RunContext& ctx) const {
  const Index d = config_.d_model();
  const ModelVariant v = config_.variant;
  const bool aware = is_candidate_aware(v);
  if (aware && (candidate == nullptr || !candidate->defined())) {
    throw ConfigError(to_string(v) + " user encoding requires the candidate embedding");
  }
  if (history.length < 1) throw DegenerateInputError("user encoding over an empty click history");
  if (history.news_embeddings.rows() < history.length || history.news_embeddings.cols() != d) {
    throw ShapeError("click history must be [>= length, d_model]");
  }
  if (aware && (candidate->rows() != 1 || candidate->cols() != d)) throw ShapeError("candidate must be [1, d_model]");

  const Tensor<S> clicks = history.news_embeddings.rows() == history.length
                               ? history.news_embeddings
                               : block(history.news_embeddings, 0, 0, history.length, d);
  const Index n = history.length;

  UserEmbedding<S> out;
  out.candidate_aware = aware;
  switch (v) {
    case ModelVariant::npa: {
      if (!history.user_id_embedding.defined()) throw ConfigError("npa user encoding requires the user-ID embedding");
      Tensor<S> query = relu(user_query_(history.user_id_embedding));
      out.vector = personalized_attention(clicks, query, personal_projection_).output;
      break;
    }
    case ModelVariant::naml:
      out.vector = additive_attention(clicks, attention_).output;
      break;
    case ModelVariant::nrms:
      out.vector = additive_attention(drop(multi_head_self_attention(clicks, self_attention_), ctx), attention_).output;
      break;
    case ModelVariant::lstur_ini: {
      Tensor<S> h0 = lookup_long_term_user(history.user_index, long_term_, config_.lstur_mask_prob, ctx);
      out.vector = gru_final(clicks, h0, gru_);
      break;
    }
    case ModelVariant::lstur_con: {
      Tensor<S> long_term = lookup_long_term_user(history.user_index, long_term_, config_.lstur_mask_prob, ctx);
      Tensor<S> short_term = gru_final(clicks, Tensor<S>::zeros(1, d / 2), gru_);
      out.vector = concat_cols<S>({short_term, long_term});
      break;
    }
    case ModelVariant::cennewsrec: {
      Tensor<S> short_term = gru_final(clicks, Tensor<S>::zeros(1, d), gru_);
      Tensor<S> long_term =
          additive_attention(drop(multi_head_self_attention(clicks, self_attention_), ctx), attention_).output;
      out.vector = additive_attention(concat_rows<S>({short_term, long_term}), combine_attention_).output;
      break;
    }
    case ModelVariant::mins: {
      Tensor<S> context = drop(multi_head_self_attention(clicks, self_attention_), ctx);
      const Index channels = static_cast<Index>(channel_grus_.size());
      std::vector<Tensor<S>> finals;
      for (Index c = 0; c < channels && c < n; ++c) {
        std::vector<Index> rows;
        for (Index i = c; i < n; i += channels) rows.push_back(i);
        finals.push_back(gru_final(select_rows(context, std::span<const Index>(rows)), Tensor<S>::zeros(1, d),
                                   channel_grus_[static_cast<std::size_t>(c)]));
      }
      out.vector = additive_attention(concat_rows(finals), attention_).output;
      break;
    }
    case ModelVariant::dkn: {
      Tensor<S> pairs = concat_cols<S>({repeat_rows(*candidate, n), clicks});
      Tensor<S> logits = transpose(pair_output_(relu(pair_hidden_(pairs))));  // [1, N]
      out.vector = matmul(softmax(logits), clicks);
      break;
    }
    case ModelVariant::caum: {
      Tensor<S> cand = candidate_projection_(*candidate);
      Tensor<S> cand_rows = repeat_rows(cand, n);
      Tensor<S> queries = self_attention_.query(concat_cols<S>({clicks, cand_rows}));
      Tensor<S> long_range = drop(
          attention_core(queries, self_attention_.key(clicks), self_attention_.value(clicks), self_attention_.heads),
          ctx);
      const Index pad = (config_.caum_window - 1) / 2;
      Tensor<S> windows = unfold(clicks, config_.caum_window, pad, pad);
      Tensor<S> short_term = relu(aware_cnn_(concat_cols<S>({windows, cand_rows})));
      Tensor<S> merged = concat_cols<S>({long_range, short_term});
      Tensor<S> keys = tanh(add_row(click_projection_(merged), candidate_key_(cand)));
      Tensor<S> weights = softmax(transpose(matmul_nt(keys, aware_query_)));
      out.vector = output_projection_(matmul(weights, merged));
      break;
    }
  }
  return out;
}

template Tensor<float> lookup_long_term_user(int, const Tensor<float>&, double, const RunContext&);
template Tensor<double> lookup_long_term_user(int, const Tensor<double>&, double, const RunContext&);
template class UserEncoder<float>;
template class UserEncoder<double>;

}  // namespace nnr
