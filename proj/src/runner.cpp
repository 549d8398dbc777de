#include "nnr/runner.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "nnr/optimizer.hpp"

namespace nnr {

namespace {

std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

void restore_rng(Rng& rng, const std::string& state) {
  std::istringstream in(state);
  in >> rng;
  if (!in) throw IoError("checkpoint holds an unreadable rng state");
}

template <typename S>
std::vector<NamedMatrix> export_values(const ParameterStore<S>& store) {
  std::vector<NamedMatrix> out;
  for (const auto& p : store.all()) out.push_back({p.name, p.tensor.value().template cast<double>()});
  return out;
}

template <typename S>
void import_values(ParameterStore<S>& store, const std::vector<NamedMatrix>& values) {
  auto& params = store.all();
  if (params.size() != values.size()) throw ConfigError("checkpoint parameter count does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedMatrix& v = values[i];
    auto& p = params[i];
    if (p.name != v.name || p.tensor.rows() != v.values.rows() || p.tensor.cols() != v.values.cols()) {
      throw ConfigError("checkpoint tensor '" + v.name + "' does not match model parameter '" + p.name + "'");
    }
    p.tensor.mutable_value() = v.values.template cast<S>();
  }
}

template <typename S>
std::vector<NamedMatrix> export_moments(const ParameterStore<S>& store, const std::vector<Matrix<S>>& moments) {
  std::vector<NamedMatrix> out;
  for (std::size_t i = 0; i < moments.size(); ++i) out.push_back({store.all()[i].name, moments[i].template cast<double>()});
  return out;
}

template <typename S>
void import_moments(std::vector<Matrix<S>>& moments, const std::vector<NamedMatrix>& values) {
  if (moments.size() != values.size()) throw ConfigError("checkpoint optimizer state does not match the model");
  for (std::size_t i = 0; i < moments.size(); ++i) {
    if (moments[i].rows() != values[i].values.rows() || moments[i].cols() != values[i].values.cols()) {
      throw ConfigError("checkpoint moment '" + values[i].name + "' has the wrong shape");
    }
    moments[i] = values[i].values.template cast<S>();
  }
}

/// Lazily encoded news embeddings, keyed per user when encoding depends on it.
template <typename S>
class NewsCache {
 public:
  NewsCache(const Recommender<S>& model, const Dataset& ds, const RunContext& ctx) : model_(model), ds_(ds), ctx_(ctx) {}

  const Tensor<S>& get(int news, int user) {
    const std::int64_t key = model_.news_depends_on_user()
                                 ? static_cast<std::int64_t>(user) * static_cast<std::int64_t>(ds_.news.size()) + news
                                 : news;
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(key, model_.encode_news(ds_.news[static_cast<std::size_t>(news)], user, ctx_)).first->second;
  }

  Tensor<S> stack(const std::vector<int>& ids, int user) {
    std::vector<Tensor<S>> rows;
    rows.reserve(ids.size());
    for (int id : ids) rows.push_back(get(id, user));
    return concat_rows(rows);
  }

 private:
  const Recommender<S>& model_;
  const Dataset& ds_;
  const RunContext& ctx_;
  std::unordered_map<std::int64_t, Tensor<S>> cache_;
};

template <typename S>
Tensor<S> history_matrix(NewsCache<S>& cache, const std::vector<int>& history, int user, Index d) {
  if (history.empty()) return Tensor<S>::zeros(1, d);
  return cache.stack(history, user);
}

void fisher_yates(std::vector<TrainingSample>& samples, Rng& rng) {
  for (std::size_t i = samples.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(samples[i - 1], samples[pick(rng)]);
  }
}

std::filesystem::path write_dump(const std::filesystem::path& dir, std::uint64_t seed, int epoch, std::size_t batch,
                                 const std::string& body) {
  const std::filesystem::path base = dir.empty() ? std::filesystem::temp_directory_path() : dir;
  std::filesystem::create_directories(base);
  const auto path = base / fmt::format("nonfinite_seed{}_epoch{}_batch{}.txt", seed, epoch, batch);
  std::ofstream(path) << body;
  return path;
}

template <typename S>
TrainingResult train_impl(const ExperimentConfig& config, const Dataset& ds, std::uint64_t seed,
                          const TrainingOptions& options) {
  config.validate();
  Rng rng(seed);
  Recommender<S> model = build_model<S>(config, ds, rng);
  ParameterStore<S>& store = model.parameters();
  AdamOptions adam_options;
  adam_options.learning_rate = config.learning_rate;
  adam_options.clip_norm = config.clip_norm;
  Adam<S> adam(store, adam_options);

  Checkpoint state;
  state.precision = config.precision;
  state.config_hash = config_hash(config);
  state.seed = seed;
  if (options.resume) {
    const Checkpoint& r = *options.resume;
    if (r.config_hash != state.config_hash) throw ConfigError("cannot resume: checkpoint config hash differs");
    if (r.precision != config.precision) throw ConfigError("cannot resume: checkpoint precision differs");
    if (r.seed != seed) throw ConfigError("cannot resume: checkpoint seed differs");
    import_values(store, r.parameters);
    import_moments(adam.first_moments(), r.first_moments);
    import_moments(adam.second_moments(), r.second_moments);
    adam.set_steps(r.optimizer_steps);
    restore_rng(rng, r.rng_state);
    state = r;
  } else {
    state.best_validation_auc = -1.0;
    state.best_parameters = export_values(store);
  }

  TrainingLog log;
  log.epochs = state.epochs;
  const int last_epoch = options.stop_after_epoch > 0 ? std::min(options.stop_after_epoch, config.epochs) : config.epochs;
  const auto batch_size = static_cast<std::size_t>(config.effective_batch_size());
  const Index d = model.config().d_model();
  const std::filesystem::path dump_dir = options.dump_dir.empty() ? config.out_dir : options.dump_dir;

  for (int epoch = state.epochs_completed; epoch < last_epoch; ++epoch) {
    std::vector<TrainingSample> samples = make_training_samples(ds.train, config.negatives, rng);
    fisher_yates(samples, rng);
    if (samples.empty()) throw DegenerateInputError("training split yields no samples");

    EpochRecord record;
    record.epoch = epoch + 1;
    double loss_sum = 0.0;
    const RunContext ctx{true, &rng};
    for (std::size_t start = 0, batch = 0; start < samples.size(); start += batch_size, ++batch) {
      const std::size_t end = std::min(samples.size(), start + batch_size);
      store.zero_grad();
      NewsCache<S> cache(model, ds, ctx);
      std::vector<Tensor<S>> losses;
      losses.reserve(end - start);
      std::ostringstream trace;
      try {
        for (std::size_t i = start; i < end; ++i) {
          const TrainingSample& s = samples[i];
          const IndexedImpression& imp = ds.train[s.impression];
          const std::vector<int> cand_ids = s.candidates();
          trace << imp.impression_id << "\tuser=" << imp.user_index << "\tcandidates=";
          for (int c : cand_ids) trace << ds.news[static_cast<std::size_t>(c)].news_id << ',';
          Tensor<S> history = history_matrix(cache, imp.history, imp.user_index, d);
          Tensor<S> candidates = cache.stack(cand_ids, imp.user_index);
          Tensor<S> scores = model.score(history, static_cast<Index>(imp.history.size()), imp.user_index, candidates, ctx);
          trace << "\tscores=";
          for (Index j = 0; j < scores.cols(); ++j) trace << fmt::format("{} ", static_cast<double>(scores.value()(0, j)));
          trace << '\n';
          if (config.objective == Objective::ce) {
            losses.push_back(ce_ns_loss(scores, 0));
          } else {
            std::vector<std::uint8_t> labels(cand_ids.size(), 0);
            labels[0] = 1;
            losses.push_back(scl_loss(scores, labels, config.tau));
          }
        }
        Tensor<S> batch_loss = mean_loss(losses);
        const double value = static_cast<double>(batch_loss.item());
        if (!std::isfinite(value)) throw NumericError(fmt::format("batch loss is {}", value));
        batch_loss.backward();
        if (adam.step()) ++record.clipped_batches;
        for (const auto& l : losses) loss_sum += static_cast<double>(l.item());
        log.batch_losses.push_back(value);
        spdlog::debug("epoch {} batch {} loss {:.6f} grad norm {:.4g}", epoch + 1, batch, value,
                      adam.last_gradient_norm());
      } catch (const NumericError& e) {
        const auto path = write_dump(dump_dir, seed, epoch + 1, batch,
                                     fmt::format("# {}\n# epoch {} batch {} samples {}..{}\n{}", e.what(), epoch + 1,
                                                 batch, start, end - 1, trace.str()));
        spdlog::error("non-finite training state at epoch {} batch {}: {} (dump: {})", epoch + 1, batch, e.what(),
                      path.string());
        throw NumericError(fmt::format("{} at epoch {} batch {}; diagnostic dump written to {}", e.what(), epoch + 1,
                                       batch, path.string()));
      }
    }
    record.samples = samples.size();
    record.mean_loss = loss_sum / static_cast<double>(samples.size());
    record.validation_auc = evaluate_split(model, ds, SplitLabel::validation).auc;
    if (record.clipped_batches > 0) {
      spdlog::info("epoch {}: gradient clipping triggered in {} batches", record.epoch, record.clipped_batches);
    }
    spdlog::info("seed {} epoch {}/{}: mean loss {:.5f}, validation AUC {:.5f}", seed, record.epoch, config.epochs,
                 record.mean_loss, record.validation_auc);

    if (record.validation_auc > state.best_validation_auc) {
      state.best_validation_auc = record.validation_auc;
      state.best_epoch = record.epoch;
      state.best_parameters = export_values(store);
    }
    state.epochs.push_back(record);
    log.epochs.push_back(record);
    state.epochs_completed = epoch + 1;
    state.optimizer_steps = adam.steps();
    state.rng_state = rng_state(rng);
    state.parameters = export_values(store);
    state.first_moments = export_moments(store, adam.first_moments());
    state.second_moments = export_moments(store, adam.second_moments());
    if (!options.checkpoint_path.empty()) save_checkpoint(state, options.checkpoint_path);
  }
  if (state.parameters.empty()) {
    state.rng_state = rng_state(rng);
    state.parameters = export_values(store);
    state.first_moments = export_moments(store, adam.first_moments());
    state.second_moments = export_moments(store, adam.second_moments());
  }
  return {std::move(state), std::move(log)};
}

template <typename S>
RunMetrics evaluate_checkpoint_impl(const ExperimentConfig& config, const Dataset& ds, const Checkpoint& checkpoint,
                                    SplitLabel split) {
  Rng rng(checkpoint.seed);
  Recommender<S> model(model_config(config, ds), rng);
  import_values(model.parameters(), checkpoint.best_parameters.empty() ? checkpoint.parameters
                                                                       : checkpoint.best_parameters);
  return evaluate_split(model, ds, split);
}

nlohmann::json summary_json(const MetricSummary& s) {
  nlohmann::json j;
  j["mean"] = s.mean;
  j["std"] = s.std ? nlohmann::json(*s.std) : nlohmann::json(nullptr);
  j["per_seed"] = s.per_seed;
  return j;
}

MetricSummary summary_from_json(const nlohmann::json& j) {
  MetricSummary s;
  s.mean = j.at("mean").get<double>();
  if (!j.at("std").is_null()) s.std = j.at("std").get<double>();
  s.per_seed = j.at("per_seed").get<std::vector<double>>();
  return s;
}

}  // namespace

template <typename S>
Recommender<S> build_model(const ExperimentConfig& config, const Dataset& ds, Rng& rng) {
  Recommender<S> model(model_config(config, ds), rng);
  ParameterStore<S>& store = model.parameters();
  if (!ds.word_embeddings.empty()) {
    PretrainedTable<S> table = load_word_embeddings<S>(ds.word_embeddings, ds.words, rng, static_cast<int>(config.word_dim));
    store.at("emb.word").tensor.mutable_value() = table.values;
  }
  if (!ds.entity_embeddings.empty() && store.contains("emb.entity")) {
    PretrainedTable<S> table =
        load_entity_embeddings<S>(ds.entity_embeddings, ds.entities, static_cast<int>(config.entity_dim));
    store.at("emb.entity").tensor.mutable_value() = table.values;
  }
  return model;
}

template <typename S>
RunMetrics evaluate_split(const Recommender<S>& model, const Dataset& ds, SplitLabel split) {
  NoGradGuard no_grad;
  const RunContext ctx{false, nullptr};
  NewsCache<S> cache(model, ds, ctx);
  const Index d = model.config().d_model();
  std::vector<ImpressionMetrics> per;
  const auto& impressions = ds.split(split);
  per.reserve(impressions.size());
  for (const IndexedImpression& imp : impressions) {
    if (imp.candidates.empty()) {
      per.push_back(impression_metrics(imp.impression_id, {}, {}));
      continue;
    }
    Tensor<S> history = history_matrix(cache, imp.history, imp.user_index, d);
    Tensor<S> candidates = cache.stack(imp.candidates, imp.user_index);
    const Tensor<S> scores =
        model.score(history, static_cast<Index>(imp.history.size()), imp.user_index, candidates, ctx);
    std::vector<double> values(static_cast<std::size_t>(scores.cols()));
    for (Index j = 0; j < scores.cols(); ++j) values[static_cast<std::size_t>(j)] = static_cast<double>(scores.value()(0, j));
    per.push_back(impression_metrics(imp.impression_id, values, imp.labels));
  }
  return aggregate_impressions(std::move(per));
}

template Recommender<float> build_model<float>(const ExperimentConfig&, const Dataset&, Rng&);
template Recommender<double> build_model<double>(const ExperimentConfig&, const Dataset&, Rng&);
template RunMetrics evaluate_split<float>(const Recommender<float>&, const Dataset&, SplitLabel);
template RunMetrics evaluate_split<double>(const Recommender<double>&, const Dataset&, SplitLabel);

TrainingResult run_training(const ExperimentConfig& config, const Dataset& ds, std::uint64_t seed,
                            const TrainingOptions& options) {
  return config.precision == Precision::float64 ? train_impl<double>(config, ds, seed, options)
                                                : train_impl<float>(config, ds, seed, options);
}

RunMetrics evaluate_checkpoint(const ExperimentConfig& config, const Dataset& ds, const Checkpoint& checkpoint,
                               SplitLabel split) {
  if (checkpoint.config_hash != config_hash(config)) {
    throw ConfigError(fmt::format("config hash mismatch: checkpoint {:016x}, config {:016x}; refusing to evaluate",
                                  checkpoint.config_hash, config_hash(config)));
  }
  if (checkpoint.precision != config.precision) throw ConfigError("checkpoint precision differs from the config");
  return config.precision == Precision::float64 ? evaluate_checkpoint_impl<double>(config, ds, checkpoint, split)
                                                : evaluate_checkpoint_impl<float>(config, ds, checkpoint, split);
}

MetricReport report_metadata(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds) {
  MetricReport r;
  r.model = to_string(config.model);
  r.fusion = to_string(config.fusion);
  r.objective = to_string(config.objective);
  r.tau = config.tau;
  r.seeds = seeds;
  r.split = to_string(SplitLabel::test);
  return r;
}

MetricReport run_evaluation(const ExperimentConfig& config, const Dataset& ds,
                            const std::vector<std::filesystem::path>& checkpoints) {
  if (checkpoints.empty()) throw ConfigError("no checkpoints to evaluate");
  std::vector<RunMetrics> runs;
  std::vector<std::uint64_t> seeds;
  for (const auto& path : checkpoints) {
    const Checkpoint c = load_checkpoint(path);
    runs.push_back(evaluate_checkpoint(config, ds, c, SplitLabel::test));
    seeds.push_back(c.seed);
    spdlog::info("{}: test AUC {:.5f} ({} impressions without both classes)", path.string(), runs.back().auc,
                 runs.back().auc_excluded);
  }
  return aggregate_seeds(runs, report_metadata(config, seeds));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset& ds) {
  config.validate();
  ExperimentResult result;
  std::vector<RunMetrics> tests;
  const bool write = !config.out_dir.empty();
  if (write) {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream(config.out_dir / "config.txt") << serialize(config);
    std::ofstream(config.out_dir / "split_manifest.txt") << split_manifest(ds);
  }
  for (std::uint64_t seed : config.seeds) {
    TrainingOptions options;
    const std::filesystem::path seed_dir = config.out_dir / fmt::format("seed_{}", seed);
    if (write) {
      std::filesystem::create_directories(seed_dir);
      options.checkpoint_path = seed_dir / "checkpoint.bin";
    }
    SeedRun run;
    run.seed = seed;
    TrainingResult trained = run_training(config, ds, seed, options);
    run.log = std::move(trained.log);
    run.checkpoint = std::move(trained.checkpoint);
    run.test = evaluate_checkpoint(config, ds, run.checkpoint, SplitLabel::test);
    spdlog::info("seed {}: best epoch {} (validation AUC {:.5f}), test AUC {:.5f}", seed, run.checkpoint.best_epoch,
                 run.checkpoint.best_validation_auc, run.test.auc);
    if (write) {
      std::ofstream log_file(seed_dir / "train_log.tsv");
      write_training_log(log_file, run.log);
      std::ofstream imp_file(seed_dir / "test_impressions.tsv");
      write_impression_metrics(imp_file, run.test);
    }
    tests.push_back(run.test);
    result.runs.push_back(std::move(run));
  }
  result.report = aggregate_seeds(tests, report_metadata(config, config.seeds));
  if (write) {
    std::ofstream table(config.out_dir / "report.tsv");
    write_report_table(table, {result.report});
    std::ofstream(config.out_dir / "summary.txt") << format_summary(result.report);
    save_report_json(result.report, config.out_dir / "report.json");
  }
  return result;
}

std::size_t select_temperature(const std::vector<double>& taus, const std::vector<double>& validation_auc) {
  if (taus.empty()) throw ConfigError("empty temperature grid");
  if (taus.size() != validation_auc.size()) throw ShapeError("one validation AUC per temperature is required");
  std::size_t best = 0;
  for (std::size_t i = 1; i < taus.size(); ++i) {
    if (validation_auc[i] > validation_auc[best] || (validation_auc[i] == validation_auc[best] && taus[i] < taus[best])) {
      best = i;
    }
  }
  return best;
}

SweepResult sweep_scl_temperature(const ExperimentConfig& config, const Dataset& ds) {
  if (config.objective != Objective::scl) throw ConfigError("the temperature sweep requires objective = scl");
  if (config.tau_grid.empty()) throw ConfigError("empty temperature grid");
  SweepResult sweep;
  for (double tau : config.tau_grid) {
    ExperimentConfig point = config;
    point.tau = tau;
    const TrainingResult r = run_training(point, ds, config.seeds.front());
    sweep.taus.push_back(tau);
    sweep.validation_auc.push_back(r.checkpoint.best_validation_auc);
    spdlog::info("sweep tau {:.2f}: validation AUC {:.5f}", tau, sweep.validation_auc.back());
  }
  sweep.best_tau = sweep.taus[select_temperature(sweep.taus, sweep.validation_auc)];
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream out(config.out_dir / "sweep.tsv");
    write_sweep_table(out, sweep);
  }
  return sweep;
}

void write_sweep_table(std::ostream& out, const SweepResult& sweep) {
  out << "tau\tvalidation_auc\tselected\n";
  for (std::size_t i = 0; i < sweep.taus.size(); ++i) {
    out << fmt::format("{:.2f}\t{:.6f}\t{}\n", sweep.taus[i], sweep.validation_auc[i],
                       sweep.taus[i] == sweep.best_tau ? "*" : "");
  }
}

void write_training_log(std::ostream& out, const TrainingLog& log) {
  out << "# epoch\tmean_loss\tvalidation_auc\tsamples\tclipped_batches\n";
  for (const EpochRecord& e : log.epochs) {
    out << fmt::format("epoch\t{}\t{:.8f}\t{:.6f}\t{}\t{}\n", e.epoch, e.mean_loss, e.validation_auc, e.samples,
                       e.clipped_batches);
  }
  for (std::size_t i = 0; i < log.batch_losses.size(); ++i) {
    out << fmt::format("batch\t{}\t{:.8f}\n", i, log.batch_losses[i]);
  }
}

void write_impression_metrics(std::ostream& out, const RunMetrics& metrics) {
  auto text = [](const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string("-"); };
  out << "impression_id\tauc\tmrr\tndcg5\tndcg10\n";
  for (const ImpressionMetrics& m : metrics.per_impression) {
    out << m.impression_id << '\t' << text(m.auc) << '\t' << text(m.mrr) << '\t' << text(m.ndcg5) << '\t'
        << text(m.ndcg10) << '\n';
  }
  out << fmt::format("# mean\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\n", metrics.auc, metrics.mrr, metrics.ndcg5,
                     metrics.ndcg10);
  out << "# excluded\tauc=" << metrics.auc_excluded << "\trank=" << metrics.rank_excluded << '\n';
}

void save_report_json(const MetricReport& r, const std::filesystem::path& path) {
  nlohmann::json j;
  j["model"] = r.model;
  j["fusion"] = r.fusion;
  j["objective"] = r.objective;
  j["tau"] = r.tau;
  j["seeds"] = r.seeds;
  j["split"] = r.split;
  j["auc"] = summary_json(r.auc);
  j["mrr"] = summary_json(r.mrr);
  j["ndcg5"] = summary_json(r.ndcg5);
  j["ndcg10"] = summary_json(r.ndcg10);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

MetricReport load_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    MetricReport r;
    r.model = j.at("model").get<std::string>();
    r.fusion = j.at("fusion").get<std::string>();
    r.objective = j.at("objective").get<std::string>();
    r.tau = j.at("tau").get<double>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.split = j.at("split").get<std::string>();
    r.auc = summary_from_json(j.at("auc"));
    r.mrr = summary_from_json(j.at("mrr"));
    r.ndcg5 = summary_from_json(j.at("ndcg5"));
    r.ndcg10 = summary_from_json(j.at("ndcg10"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace nnr
