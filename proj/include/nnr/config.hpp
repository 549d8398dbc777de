#pragma once

// Experiment configuration: protocol settings, data paths and architecture
// sizes, read from a key = value file and command-line overrides.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nnr/dataset.hpp"
#include "nnr/model_config.hpp"
#include "nnr/objectives.hpp"

namespace nnr {

enum class Precision { float32, float64 };
std::string to_string(Precision precision);
Precision parse_precision(const std::string& name);

/// The twelve temperatures 0.08, 0.10, ..., 0.30.
std::vector<double> default_tau_grid();

struct ExperimentConfig {
  ModelVariant model = ModelVariant::nrms;
  FusionMode fusion = FusionMode::late;
  Objective objective = Objective::ce;
  double tau = 0.1;
  std::vector<double> tau_grid = default_tau_grid();

  int batch_size = 0;  // 0 selects the per-model default
  int epochs = 25;
  double learning_rate = 1e-4;
  int negatives = 4;
  double clip_norm = 5.0;  // global gradient norm; 0 disables clipping
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  Precision precision = Precision::float32;

  std::filesystem::path data_dir;
  std::filesystem::path word_embeddings;
  std::filesystem::path entity_embeddings;
  std::filesystem::path out_dir;
  double subsample_fraction = 1.0;
  std::size_t max_impressions = 0;
  std::uint64_t subsample_seed = 0;
  std::size_t max_history = 50;
  int max_title_length = 30;
  int min_word_freq = 1;
  int train_days = 4;

  Index word_dim = 300;
  Index entity_dim = 100;
  Index category_dim = 100;
  Index query_dim = 200;
  Index heads = 16;
  Index head_dim = 16;
  Index num_filters = 0;
  double dropout = 0.2;

  /// 512 for candidate-agnostic models, 256 for DKN, 64 for CAUM.
  int effective_batch_size() const;
  void validate() const;
};

/// Sets one field from its textual key and value; ConfigError on an unknown
/// key or unparsable value.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Reads "key = value" lines ('#' starts a comment) on top of `base`.
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

/// Every field as "key = value" lines, in a fixed order; parses back with
/// load_config_file.
std::string serialize(const ExperimentConfig& config);

/// FNV-1a over the serialized fields that define a trained artifact. Seeds,
/// epoch budget, sweep grid and output directory are excluded.
std::uint64_t config_hash(const ExperimentConfig& config);

DataOptions data_options(const ExperimentConfig& config);
ModelConfig model_config(const ExperimentConfig& config, const Dataset& dataset);

}  // namespace nnr
