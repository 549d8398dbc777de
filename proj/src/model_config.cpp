#include "nnr/model_config.hpp"

namespace nnr {

std::string to_string(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::npa: return "npa";
    case ModelVariant::naml: return "naml";
    case ModelVariant::nrms: return "nrms";
    case ModelVariant::lstur_ini: return "lstur_ini";
    case ModelVariant::lstur_con: return "lstur_con";
    case ModelVariant::cennewsrec: return "cennewsrec";
    case ModelVariant::mins: return "mins";
    case ModelVariant::dkn: return "dkn";
    case ModelVariant::caum: return "caum";
  }
  return "unknown";
}

std::string to_string(FusionMode mode) { return mode == FusionMode::early ? "early" : "late"; }

ModelVariant parse_variant(const std::string& name) {
  for (ModelVariant v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  if (name == "lstur") return ModelVariant::lstur_ini;
  throw ConfigError("unknown model variant: " + name);
}

FusionMode parse_fusion(const std::string& name) {
  if (name == "early" || name == "ef") return FusionMode::early;
  if (name == "late" || name == "lf") return FusionMode::late;
  throw ConfigError("unknown fusion mode: " + name);
}

bool is_candidate_aware(ModelVariant variant) {
  return variant == ModelVariant::dkn || variant == ModelVariant::caum;
}

bool is_lstur(ModelVariant variant) {
  return variant == ModelVariant::lstur_ini || variant == ModelVariant::lstur_con;
}

Index ModelConfig::title_filters() const {
  if (num_filters > 0) return num_filters;
  switch (variant) {
    case ModelVariant::npa:
    case ModelVariant::naml:
    case ModelVariant::cennewsrec:
      return 400;
    case ModelVariant::lstur_ini:
    case ModelVariant::lstur_con:
      return 300;
    case ModelVariant::mins:
      return 256;
    default:
      return 0;
  }
}

Index ModelConfig::d_model() const {
  switch (variant) {
    case ModelVariant::npa:
    case ModelVariant::naml:
    case ModelVariant::mins:
      return title_filters();
    case ModelVariant::lstur_ini:
    case ModelVariant::lstur_con:
      return title_filters() + category_out;
    case ModelVariant::nrms:
    case ModelVariant::cennewsrec:
      return heads * head_dim;
    case ModelVariant::dkn:
      return static_cast<Index>(dkn_windows.size()) * dkn_filters;
    case ModelVariant::caum:
      return caum_d_model;
  }
  return 0;
}

void ModelConfig::validate() const {
  if (num_words < 2) throw ConfigError("word vocabulary must hold padding and unknown rows");
  if (word_dim < 1 || query_dim < 1 || heads < 1 || head_dim < 1) throw ConfigError("non-positive model dimension");
  if (window % 2 == 0) throw ConfigError("title CNN window must be odd");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (variant == ModelVariant::lstur_con && d_model() % 2 != 0) {
    throw ConfigError("lstur_con needs an even embedding size to split short- and long-term halves");
  }
  if (variant == ModelVariant::mins && fusion == FusionMode::early && mins_channels < 1) {
    throw ConfigError("mins needs at least one GRU channel");
  }
  if (variant == ModelVariant::dkn && dkn_windows.empty()) throw ConfigError("dkn needs at least one window");
  if (variant == ModelVariant::caum && caum_window % 2 == 0) throw ConfigError("caum CNN window must be odd");
}

}  // namespace nnr
