#include "nnr/news_encoder.hpp"

namespace nnr {

namespace {

bool uses_title_cnn(ModelVariant v) {
  return v == ModelVariant::npa || v == ModelVariant::naml || v == ModelVariant::mins || is_lstur(v) ||
         v == ModelVariant::cennewsrec;
}

bool uses_category(ModelVariant v) {
  return v == ModelVariant::naml || v == ModelVariant::mins || is_lstur(v) || v == ModelVariant::caum;
}

bool uses_entities(ModelVariant v) { return v == ModelVariant::dkn || v == ModelVariant::caum; }

}  // namespace

template <typename S>
NewsEncoder<S>::NewsEncoder(const ModelConfig& config, ParameterStore<S>& store, Rng& rng) : config_(config) {
  config_.validate();
  const ModelVariant v = config_.variant;

  word_table_ = store.add("emb.word", config_.num_words, config_.word_dim, Init::uniform, rng);
  word_table_.mutable_value().row(0).setZero();
  store.at("emb.word").frozen_padding_row = true;

  if (uses_entities(v)) {
    entity_table_ = store.add("emb.entity", config_.num_entities, config_.entity_dim, Init::uniform, rng);
    entity_table_.mutable_value().row(0).setZero();
    // Pretrained TransE rows stay fixed; the trainable projections adapt them.
    store.at("emb.entity").trainable = false;
    entity_table_.set_requires_grad(false);
  }

  if (uses_category(v)) {
    category_table_ = store.add("ne.category_embedding", config_.num_categories, config_.category_dim, Init::uniform, rng);
    category_table_.mutable_value().row(0).setZero();
    store.at("ne.category_embedding").frozen_padding_row = true;
    subcategory_table_ =
        store.add("ne.subcategory_embedding", config_.num_subcategories, config_.category_dim, Init::uniform, rng);
    subcategory_table_.mutable_value().row(0).setZero();
    store.at("ne.subcategory_embedding").frozen_padding_row = true;
    const Index cat_out =
        (v == ModelVariant::naml || v == ModelVariant::mins) ? config_.title_filters() : config_.category_out;
    category_projection_ = make_linear(store, "ne.category_projection", 2 * config_.category_dim, cat_out, true, rng);
  }

  const Index attn_out = config_.heads * config_.head_dim;
  if (uses_title_cnn(v)) {
    title_cnn_ = make_conv1d(store, "ne.title_cnn", config_.word_dim, config_.title_filters(), config_.window,
                             config_.conv_activation, rng);
  }

  switch (v) {
    case ModelVariant::naml:
    case ModelVariant::mins:
      title_attention_ = make_additive_attention(store, "ne.title_attention", config_.title_filters(),
                                                 config_.query_dim, rng);
      view_attention_ = make_additive_attention(store, "ne.view_attention", config_.title_filters(),
                                                config_.query_dim, rng);
      break;
    case ModelVariant::lstur_ini:
    case ModelVariant::lstur_con:
      title_attention_ = make_additive_attention(store, "ne.title_attention", config_.title_filters(),
                                                 config_.query_dim, rng);
      break;
    case ModelVariant::nrms:
      title_self_attention_ = make_multi_head_attention(store, "ne.title_self_attention", config_.word_dim,
                                                        config_.heads, config_.head_dim, rng);
      title_attention_ = make_additive_attention(store, "ne.title_attention", attn_out, config_.query_dim, rng);
      break;
    case ModelVariant::cennewsrec:
      title_self_attention_ = make_multi_head_attention(store, "ne.title_self_attention", config_.title_filters(),
                                                        config_.heads, config_.head_dim, rng);
      title_attention_ = make_additive_attention(store, "ne.title_attention", attn_out, config_.query_dim, rng);
      break;
    case ModelVariant::npa:
      user_query_ = make_linear(store, "ne.user_query", config_.user_id_dim, config_.query_dim, true, rng);
      personal_projection_ =
          make_linear(store, "ne.personal_projection", config_.title_filters(), config_.query_dim, true, rng);
      break;
    case ModelVariant::dkn:
      entity_alignment_ = make_linear(store, "ne.entity_alignment", config_.entity_dim, config_.word_dim, true, rng);
      for (Index w : config_.dkn_windows) {
        knowledge_cnn_.push_back(make_conv1d(store, "ne.knowledge_cnn.w" + std::to_string(w), 2 * config_.word_dim,
                                             config_.dkn_filters, w, Activation::relu, rng));
      }
      break;
    case ModelVariant::caum:
      title_self_attention_ = make_multi_head_attention(store, "ne.title_self_attention", config_.word_dim,
                                                        config_.heads, config_.head_dim, rng);
      title_attention_ = make_additive_attention(store, "ne.title_attention", attn_out, config_.query_dim, rng);
      entity_attention_ = make_additive_attention(store, "ne.entity_attention", config_.entity_dim,
                                                  config_.query_dim, rng);
      output_projection_ = make_linear(store, "ne.output_projection",
                                       attn_out + config_.entity_dim + config_.category_out, config_.caum_d_model,
                                       true, rng);
      break;
  }
}

template <typename S>
Tensor<S> NewsEncoder<S>::drop(const Tensor<S>& x, const RunContext& ctx) const {
  if (!ctx.dropout_active()) return x;
  return dropout(x, config_.dropout, *ctx.rng);
}

template <typename S>
Tensor<S> NewsEncoder<S>::lookup_word_embeddings(std::span<const int> token_ids) const {
  return gather_rows(word_table_, token_ids, true);
}

template <typename S>
Tensor<S> NewsEncoder<S>::embed_category(int category_id, int subcategory_id) const {
  if (!category_table_.defined()) throw ConfigError(to_string(config_.variant) + " does not embed categories");
  const int cat[] = {category_id};
  const int sub[] = {subcategory_id};
  Tensor<S> joined = concat_cols<S>({gather_rows(category_table_, std::span<const int>(cat), true),
                                     gather_rows(subcategory_table_, std::span<const int>(sub), true)});
  return relu(category_projection_(joined));
}

template <typename S>
void NewsEncoder<S>::check_indices(const NewsFeatures& f) const {
  if (f.title_length < 1) throw DegenerateInputError("news " + f.news_id + " has no title tokens");
  if (f.title_length > static_cast<int>(f.title_token_ids.size())) {
    throw ShapeError("news " + f.news_id + ": title_length exceeds token list");
  }
  if (uses_category(config_.variant)) {
    if (f.category_id < 0 || f.category_id >= config_.num_categories || f.subcategory_id < 0 ||
        f.subcategory_id >= config_.num_subcategories) {
      throw IndexError("news " + f.news_id + ": category id out of range");
    }
  }
  if (uses_entities(config_.variant) && static_cast<int>(f.title_entity_ids.size()) < f.title_length) {
    throw ShapeError("news " + f.news_id + ": entity ids must align with title tokens");
  }
}

template <typename S>
Tensor<S> NewsEncoder<S>::title_words(const NewsFeatures& f, const RunContext& ctx) const {
  std::span<const int> ids(f.title_token_ids.data(), static_cast<std::size_t>(f.title_length));
  return drop(lookup_word_embeddings(ids), ctx);
}

template <typename S>
Tensor<S> NewsEncoder<S>::encode(const NewsFeatures& f, const Tensor<S>* user_context, const RunContext& ctx) const {
  check_indices(f);
  const ModelVariant v = config_.variant;
  if (v == ModelVariant::npa && (user_context == nullptr || !user_context->defined())) {
    throw ConfigError("npa news encoding requires the user-ID embedding");
  }
  Tensor<S> words = title_words(f, ctx);

  switch (v) {
    case ModelVariant::naml:
    case ModelVariant::mins: {
      Tensor<S> title = drop(additive_attention(conv1d_same(words, title_cnn_), title_attention_).output, ctx);
      Tensor<S> category = embed_category(f.category_id, f.subcategory_id);
      return additive_attention(concat_rows<S>({title, category}), view_attention_).output;
    }
    case ModelVariant::nrms: {
      Tensor<S> context = drop(multi_head_self_attention(words, title_self_attention_), ctx);
      return additive_attention(context, title_attention_).output;
    }
    case ModelVariant::npa: {
      Tensor<S> query = relu(user_query_(*user_context));
      Tensor<S> context = drop(conv1d_same(words, title_cnn_), ctx);
      return personalized_attention(context, query, personal_projection_).output;
    }
    case ModelVariant::lstur_ini:
    case ModelVariant::lstur_con: {
      Tensor<S> title = drop(additive_attention(conv1d_same(words, title_cnn_), title_attention_).output, ctx);
      return concat_cols<S>({title, embed_category(f.category_id, f.subcategory_id)});
    }
    case ModelVariant::cennewsrec: {
      Tensor<S> context = drop(multi_head_self_attention(conv1d_same(words, title_cnn_), title_self_attention_), ctx);
      return additive_attention(context, title_attention_).output;
    }
    case ModelVariant::dkn: {
      std::span<const int> ents(f.title_entity_ids.data(), static_cast<std::size_t>(f.title_length));
      Tensor<S> aligned = tanh(entity_alignment_(gather_rows(entity_table_, ents, true)));
      Tensor<S> channels = concat_cols<S>({words, aligned});
      std::vector<Tensor<S>> pooled;
      for (const auto& cnn : knowledge_cnn_) pooled.push_back(max_rows(conv1d_valid(channels, cnn)));
      return concat_cols(pooled);
    }
    case ModelVariant::caum: {
      Tensor<S> title = drop(additive_attention(multi_head_self_attention(words, title_self_attention_),
                                                title_attention_).output, ctx);
      std::vector<int> ents;
      for (int i = 0; i < f.title_length; ++i) {
        const int e = f.title_entity_ids[static_cast<std::size_t>(i)];
        if (e < 0 || e >= config_.num_entities) throw IndexError("news " + f.news_id + ": entity id out of range");
        if (e != 0) ents.push_back(e);
      }
      // Titles without linked entities contribute a zero entity vector.
      Tensor<S> entity = ents.empty()
                             ? Tensor<S>::zeros(1, config_.entity_dim)
                             : additive_attention(gather_rows(entity_table_, std::span<const int>(ents), true),
                                                  entity_attention_).output;
      Tensor<S> category = embed_category(f.category_id, f.subcategory_id);
      return output_projection_(concat_cols<S>({title, entity, category}));
    }
  }
  throw ConfigError("unhandled model variant");
}

template class NewsEncoder<float>;
template class NewsEncoder<double>;

}  // namespace nnr
