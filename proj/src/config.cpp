#include "nnr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace nnr {

std::string to_string(Precision precision) { return precision == Precision::float32 ? "float" : "double"; }

Precision parse_precision(const std::string& name) {
  if (name == "float" || name == "float32") return Precision::float32;
  if (name == "double" || name == "float64") return Precision::float64;
  throw ConfigError("unknown precision '" + name + "' (expected float or double)");
}

std::vector<double> default_tau_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 12; ++i) grid.push_back((8.0 + 2.0 * i) / 100.0);
  return grid;
}

int ExperimentConfig::effective_batch_size() const {
  if (batch_size > 0) return batch_size;
  if (model == ModelVariant::caum) return 64;
  if (model == ModelVariant::dkn) return 256;
  return 512;
}

void ExperimentConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  for (double t : tau_grid) {
    if (!(t > 0.0)) throw ConfigError("tau grid entries must be positive");
  }
  if (batch_size < 0) throw ConfigError("batch_size must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
  if (negatives < 1) throw ConfigError("negatives must be >= 1");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) throw ConfigError("subsample must lie in (0, 1]");
  if (max_history < 1) throw ConfigError("max_history must be >= 1");
  if (max_title_length < 1) throw ConfigError("max_title_length must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + value + "' for " + key);
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt::format("{}", values[i]);
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  Setter set;
  Getter get;
  bool hashed = true;
};

template <typename T, typename M>
Field number(M member, bool hashed = true) {
  return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); },
          [member](const ExperimentConfig& c) { return fmt::format("{}", c.*member); }, hashed};
}

template <typename M>
Field path(M member, bool hashed = true) {
  return {[member](ExperimentConfig& c, const std::string&, const std::string& v) { c.*member = v; },
          [member](const ExperimentConfig& c) { return (c.*member).string(); }, hashed};
}

// Ordered so serialization is stable.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"model",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.model = parse_variant(v); },
        [](const ExperimentConfig& c) { return to_string(c.model); }}},
      {"fusion",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.fusion = parse_fusion(v); },
        [](const ExperimentConfig& c) { return to_string(c.fusion); }}},
      {"objective",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.objective = parse_objective(v); },
        [](const ExperimentConfig& c) { return to_string(c.objective); }}},
      {"tau", number<double>(&ExperimentConfig::tau)},
      {"tau_grid",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.tau_grid.clear();
          for (const auto& part : split_list(v)) c.tau_grid.push_back(parse_number<double>(k, part));
        },
        [](const ExperimentConfig& c) { return join(c.tau_grid); }, false}},
      {"batch_size", number<int>(&ExperimentConfig::batch_size)},
      {"epochs", number<int>(&ExperimentConfig::epochs, false)},
      {"learning_rate", number<double>(&ExperimentConfig::learning_rate)},
      {"negatives", number<int>(&ExperimentConfig::negatives)},
      {"clip_norm", number<double>(&ExperimentConfig::clip_norm)},
      {"seeds",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.seeds.clear();
          for (const auto& part : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>(k, part));
        },
        [](const ExperimentConfig& c) { return join(c.seeds); }, false}},
      {"precision",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.precision = parse_precision(v); },
        [](const ExperimentConfig& c) { return to_string(c.precision); }}},
      {"data_dir", path(&ExperimentConfig::data_dir)},
      {"word_embeddings", path(&ExperimentConfig::word_embeddings)},
      {"entity_embeddings", path(&ExperimentConfig::entity_embeddings)},
      {"out_dir", path(&ExperimentConfig::out_dir, false)},
      {"subsample", number<double>(&ExperimentConfig::subsample_fraction)},
      {"max_impressions", number<std::size_t>(&ExperimentConfig::max_impressions)},
      {"subsample_seed", number<std::uint64_t>(&ExperimentConfig::subsample_seed)},
      {"max_history", number<std::size_t>(&ExperimentConfig::max_history)},
      {"max_title_length", number<int>(&ExperimentConfig::max_title_length)},
      {"min_word_freq", number<int>(&ExperimentConfig::min_word_freq)},
      {"train_days", number<int>(&ExperimentConfig::train_days)},
      {"word_dim", number<Index>(&ExperimentConfig::word_dim)},
      {"entity_dim", number<Index>(&ExperimentConfig::entity_dim)},
      {"category_dim", number<Index>(&ExperimentConfig::category_dim)},
      {"query_dim", number<Index>(&ExperimentConfig::query_dim)},
      {"heads", number<Index>(&ExperimentConfig::heads)},
      {"head_dim", number<Index>(&ExperimentConfig::head_dim)},
      {"num_filters", number<Index>(&ExperimentConfig::num_filters)},
      {"dropout", number<double>(&ExperimentConfig::dropout)},
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  field(trim(key)).set(config, trim(key), trim(value));
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value'", path.string(), number));
    }
    try {
      apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", path.string(), number, e.what()));
    }
  }
  return base;
}

std::string serialize(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(config) + "\n";
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::string canonical;
  for (const auto& [name, f] : fields()) {
    if (f.hashed) canonical += name + "=" + f.get(config) + "\n";
  }
  return fnv1a(canonical);
}

DataOptions data_options(const ExperimentConfig& c) {
  DataOptions o;
  o.data_dir = c.data_dir;
  o.word_embeddings = c.word_embeddings;
  o.entity_embeddings = c.entity_embeddings;
  o.subsample_fraction = c.subsample_fraction;
  o.max_impressions = c.max_impressions;
  o.subsample_seed = c.subsample_seed;
  o.max_title_length = c.max_title_length;
  o.max_history = c.max_history;
  o.min_word_freq = c.min_word_freq;
  o.train_days = c.train_days;
  o.word_dim = static_cast<int>(c.word_dim);
  o.entity_dim = static_cast<int>(c.entity_dim);
  return o;
}

ModelConfig model_config(const ExperimentConfig& c, const Dataset& ds) {
  ModelConfig m;
  m.variant = c.model;
  m.fusion = c.fusion;
  m.num_words = ds.words.size();
  m.num_categories = static_cast<Index>(ds.categories.size());
  m.num_subcategories = static_cast<Index>(ds.subcategories.size());
  m.num_entities = static_cast<Index>(ds.entities.size());
  m.num_users = ds.num_users();
  m.word_dim = c.word_dim;
  m.entity_dim = c.entity_dim;
  m.category_dim = c.category_dim;
  m.query_dim = c.query_dim;
  m.heads = c.heads;
  m.head_dim = c.head_dim;
  m.num_filters = c.num_filters;
  m.dropout = c.dropout;
  m.validate();
  return m;
}

}  // namespace nnr
