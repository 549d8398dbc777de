#pragma once

#include <string>
#include <vector>

#include "nnr/ops.hpp"

namespace nnr {

enum class ModelVariant { npa, naml, nrms, lstur_ini, lstur_con, cennewsrec, mins, dkn, caum };
enum class FusionMode { early, late };

inline constexpr ModelVariant kAllVariants[] = {ModelVariant::npa,        ModelVariant::naml,      ModelVariant::nrms,
                                                ModelVariant::lstur_ini,  ModelVariant::lstur_con, ModelVariant::cennewsrec,
                                                ModelVariant::mins,       ModelVariant::dkn,       ModelVariant::caum};

std::string to_string(ModelVariant variant);
std::string to_string(FusionMode mode);
ModelVariant parse_variant(const std::string& name);
FusionMode parse_fusion(const std::string& name);

/// DKN and CAUM contextualize the user with the candidate.
bool is_candidate_aware(ModelVariant variant);
bool is_lstur(ModelVariant variant);

/// Architecture hyperparameters. Vocabulary sizes include the reserved row 0.
struct ModelConfig {
  ModelVariant variant = ModelVariant::nrms;
  FusionMode fusion = FusionMode::late;

  Index num_words = 2;
  Index num_categories = 1;
  Index num_subcategories = 1;
  Index num_entities = 1;
  Index num_users = 1;

  Index word_dim = 300;
  Index entity_dim = 100;
  Index category_dim = 100;
  Index category_out = 100;  // LSTUR/CAUM category vector; NAML/MINS use the title size
  Index query_dim = 200;
  Index heads = 16;
  Index head_dim = 16;
  Index num_filters = 0;  // 0 selects the per-variant default
  Index window = 3;
  Activation conv_activation = Activation::relu;
  double dropout = 0.2;

  Index user_id_dim = 50;         // NPA user-ID embedding
  double lstur_mask_prob = 0.5;  // LSTUR long-term masking during training
  Index mins_channels = 4;

  std::vector<Index> dkn_windows = {1, 2, 3, 4};
  Index dkn_filters = 100;
  Index dkn_attention_hidden = 100;

  Index caum_heads = 20;
  Index caum_head_dim = 20;
  Index caum_filters = 400;
  Index caum_window = 3;
  Index caum_candidate_dim = 100;
  Index caum_d_model = 400;

  /// Filter count of the title CNN for the variants that use one.
  Index title_filters() const;
  /// Embedding size shared by news and user vectors.
  Index d_model() const;
  void validate() const;
};

struct RunContext {
  bool training = false;
  Rng* rng = nullptr;

  bool dropout_active() const { return training && rng != nullptr; }
};

}  // namespace nnr
