// Command-line front end: train, evaluate, sweep, report, synth.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <spdlog/spdlog.h>

#include "nnr/runner.hpp"
#include "nnr/synthetic.hpp"

namespace fs = std::filesystem;
using namespace nnr;

namespace {

struct CommonFlags {
  std::string config_file;
  std::map<std::string, std::string> values;  // setting key -> flag value
  std::vector<std::string> overrides;         // raw key=value
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "Config file of key = value lines")->check(CLI::ExistingFile);
  const std::vector<std::pair<std::string, std::string>> mapped = {
      {"--model", "model"},         {"--fusion", "fusion"},           {"--objective", "objective"},
      {"--tau", "tau"},             {"--seed", "seeds"},              {"--seeds", "seeds"},
      {"--epochs", "epochs"},       {"--batch-size", "batch_size"},   {"--data-dir", "data_dir"},
      {"--subsample", "subsample"}, {"--out", "out_dir"},             {"--precision", "precision"},
      {"--max-impressions", "max_impressions"}, {"--lr", "learning_rate"}};
  for (const auto& [flag, key] : mapped) {
    cmd->add_option_function<std::string>(flag, [&flags, key = key](const std::string& v) { flags.values[key] = v; },
                                          "Sets '" + key + "'");
  }
  cmd->add_option("--set", flags.overrides, "Any config key as key=value (repeatable)");
}

ExperimentConfig resolve(const CommonFlags& flags) {
  ExperimentConfig config;
  if (!flags.config_file.empty()) config = load_config_file(flags.config_file);
  for (const auto& [key, value] : flags.values) apply_setting(config, key, value);
  for (const std::string& kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

Dataset load(const ExperimentConfig& config) {
  if (config.data_dir.empty()) throw ConfigError("a data directory is required (--data-dir)");
  Dataset ds = load_dataset(data_options(config));
  spdlog::info("loaded {} news, {} training users; {} train / {} validation / {} test impressions", ds.news.size() - 1,
               ds.users.size(), ds.train.size(), ds.validation.size(), ds.test.size());
  return ds;
}

std::vector<fs::path> find_files(const fs::path& root, const std::string& name) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(root)) return {root};
  if (!fs::is_directory(root)) throw IoError("no such file or directory: " + root.string());
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == name) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural news recommendation: training, evaluation and reporting"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();

  CommonFlags train_flags, eval_flags, sweep_flags;
  CLI::App* train = app.add_subcommand("train", "Train every configured seed and report test metrics");
  add_common(train, train_flags);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate checkpoints on the test split");
  add_common(evaluate, eval_flags);
  std::vector<std::string> checkpoints;
  evaluate->add_option("--checkpoint", checkpoints, "Checkpoint files or run directories (default: --out)");

  CLI::App* sweep = app.add_subcommand("sweep", "Sweep the SCL temperature on validation AUC");
  add_common(sweep, sweep_flags);

  CLI::App* report = app.add_subcommand("report", "Collect report.json files into one table");
  std::vector<std::string> report_inputs;
  std::string report_out;
  report->add_option("inputs", report_inputs, "Run directories or report.json files")->required();
  report->add_option("--out", report_out, "Write the table here instead of stdout");

  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic MIND-format corpus");
  SyntheticOptions synth_options;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output root")->required();
  synth->add_option("--seed", synth_options.seed)->capture_default_str();
  synth->add_option("--users", synth_options.users)->capture_default_str();
  synth->add_option("--train-impressions", synth_options.train_impressions)->capture_default_str();
  synth->add_option("--test-impressions", synth_options.test_impressions)->capture_default_str();
  synth->add_option("--days", synth_options.days)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*train) {
      const ExperimentConfig config = resolve(train_flags);
      const Dataset ds = load(config);
      const ExperimentResult result = run_experiment(config, ds);
      std::cout << format_summary(result.report);
      write_report_table(std::cout, {result.report});
    } else if (*evaluate) {
      const ExperimentConfig config = resolve(eval_flags);
      std::vector<fs::path> paths;
      if (checkpoints.empty()) {
        if (config.out_dir.empty()) throw ConfigError("give --checkpoint or --out");
        checkpoints.push_back(config.out_dir.string());
      }
      for (const std::string& c : checkpoints) {
        for (const fs::path& p : find_files(c, "checkpoint.bin")) paths.push_back(p);
      }
      if (paths.empty()) throw IoError("no checkpoint.bin found");
      const Dataset ds = load(config);
      const MetricReport r = run_evaluation(config, ds, paths);
      std::cout << format_summary(r);
      write_report_table(std::cout, {r});
    } else if (*sweep) {
      const ExperimentConfig config = resolve(sweep_flags);
      const Dataset ds = load(config);
      const SweepResult result = sweep_scl_temperature(config, ds);
      write_sweep_table(std::cout, result);
      std::cout << "best tau " << result.best_tau << '\n';
    } else if (*report) {
      std::vector<MetricReport> reports;
      for (const std::string& input : report_inputs) {
        for (const fs::path& p : find_files(input, "report.json")) reports.push_back(load_report_json(p));
      }
      if (reports.empty()) throw IoError("no report.json found");
      if (report_out.empty()) {
        write_report_table(std::cout, reports);
      } else {
        std::ofstream out(report_out);
        if (!out) throw IoError("cannot write " + report_out);
        write_report_table(out, reports);
      }
    } else if (*synth) {
      write_synthetic_mind(synth_out, synth_options);
      std::cout << "wrote synthetic corpus to " << synth_out << '\n';
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
