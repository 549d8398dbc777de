#pragma once

// Training and evaluation orchestration: seeded epochs over sampled training
// instances, Adam updates, validation-AUC model selection, checkpointing,
// multi-seed test reports and the SCL temperature sweep.

#include <filesystem>
#include <ostream>
#include <vector>

#include "nnr/checkpoint.hpp"
#include "nnr/config.hpp"
#include "nnr/dataset.hpp"
#include "nnr/metrics.hpp"
#include "nnr/model.hpp"

namespace nnr {

struct TrainingLog {
  std::vector<double> batch_losses;  // every batch of every epoch run in this call
  std::vector<EpochRecord> epochs;   // including epochs restored from a checkpoint
};

struct TrainingOptions {
  const Checkpoint* resume = nullptr;  // continue from this state
  int stop_after_epoch = 0;            // stop once this many epochs are complete; 0 = full budget
  std::filesystem::path checkpoint_path;  // rewritten after every epoch when set
  std::filesystem::path dump_dir;         // diagnostics for non-finite losses; defaults to out_dir
};

struct TrainingResult {
  Checkpoint checkpoint;
  TrainingLog log;
};

/// Trains one seed. Throws NumericError, after writing a diagnostic dump of
/// the offending batch, when a batch loss is not finite.
TrainingResult run_training(const ExperimentConfig& config, const Dataset& dataset, std::uint64_t seed,
                            const TrainingOptions& options = {});

/// Builds the model for `config` with the given seed, loading pretrained
/// tables for the dataset when present.
template <typename S>
Recommender<S> build_model(const ExperimentConfig& config, const Dataset& dataset, Rng& rng);

/// Per-impression metrics over one split, in split order.
template <typename S>
RunMetrics evaluate_split(const Recommender<S>& model, const Dataset& dataset, SplitLabel split);

/// Restores the selected (best-validation) parameters of a checkpoint and
/// evaluates them. Refuses with ConfigError when the checkpoint was produced
/// under a different configuration hash or precision.
RunMetrics evaluate_checkpoint(const ExperimentConfig& config, const Dataset& dataset, const Checkpoint& checkpoint,
                               SplitLabel split = SplitLabel::test);

MetricReport report_metadata(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds);

/// Test-split report aggregated over the given checkpoint files.
MetricReport run_evaluation(const ExperimentConfig& config, const Dataset& dataset,
                            const std::vector<std::filesystem::path>& checkpoints);

struct SeedRun {
  std::uint64_t seed = 0;
  TrainingLog log;
  Checkpoint checkpoint;
  RunMetrics test;
};

struct ExperimentResult {
  std::vector<SeedRun> runs;
  MetricReport report;
};

/// Trains and tests every seed of the config. With out_dir set, writes
/// per-seed checkpoints, logs and per-impression metrics plus the report.
ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset& dataset);

struct SweepResult {
  std::vector<double> taus;
  std::vector<double> validation_auc;
  double best_tau = 0.0;
};

/// Index of the best validation AUC; ties go to the smaller temperature.
std::size_t select_temperature(const std::vector<double>& taus, const std::vector<double>& validation_auc);

/// One SCL training run per grid temperature on the first seed.
SweepResult sweep_scl_temperature(const ExperimentConfig& config, const Dataset& dataset);
void write_sweep_table(std::ostream& out, const SweepResult& sweep);

void write_training_log(std::ostream& out, const TrainingLog& log);
void write_impression_metrics(std::ostream& out, const RunMetrics& metrics);

void save_report_json(const MetricReport& report, const std::filesystem::path& path);
MetricReport load_report_json(const std::filesystem::path& path);

}  // namespace nnr
