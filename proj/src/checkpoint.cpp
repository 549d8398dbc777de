#include "nnr/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace nnr {

namespace {

constexpr std::array<char, 8> kMagic = {'N', 'N', 'R', 'C', 'K', 'P', 'T', '1'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw IoError("cannot write checkpoint " + path.string());
  }

  template <typename T>
  void pod(const T& value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void string(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void group(const std::vector<NamedMatrix>& tensors, Precision precision) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
    for (const NamedMatrix& t : tensors) {
      string(t.name);
      pod<std::int64_t>(t.values.rows());
      pod<std::int64_t>(t.values.cols());
      if (precision == Precision::float64) {
        out_.write(reinterpret_cast<const char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * 8));
      } else {
        const Matrix<float> narrow = t.values.cast<float>();
        out_.write(reinterpret_cast<const char*>(narrow.data()), static_cast<std::streamsize>(narrow.size() * 4));
      }
    }
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("failed writing checkpoint " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open checkpoint " + path.string());
  }

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError("truncated checkpoint " + path_.string());
  }
  template <typename T>
  T pod() {
    T value{};
    bytes(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
  }
  std::string string() {
    const auto n = pod<std::uint64_t>();
    if (n > (1u << 30)) throw IoError("corrupt string length in checkpoint " + path_.string());
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::vector<NamedMatrix> group(Precision precision) {
    const auto count = pod<std::uint32_t>();
    std::vector<NamedMatrix> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      NamedMatrix t;
      t.name = string();
      const auto rows = pod<std::int64_t>();
      const auto cols = pod<std::int64_t>();
      if (rows < 0 || cols < 0 || rows * cols > (std::int64_t{1} << 34)) {
        throw IoError("corrupt tensor shape in checkpoint " + path_.string());
      }
      if (precision == Precision::float64) {
        t.values.resize(rows, cols);
        bytes(reinterpret_cast<char*>(t.values.data()), static_cast<std::size_t>(rows * cols) * 8);
      } else {
        Matrix<float> narrow(rows, cols);
        bytes(reinterpret_cast<char*>(narrow.data()), static_cast<std::size_t>(rows * cols) * 4);
        t.values = narrow.cast<double>();
      }
      out.push_back(std::move(t));
    }
    return out;
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  Writer w(path);
  for (char ch : kMagic) w.pod(ch);
  w.pod<std::uint32_t>(kCheckpointVersion);
  w.pod<std::uint32_t>(c.precision == Precision::float64 ? 8u : 4u);
  w.pod<std::uint64_t>(c.config_hash);
  w.pod<std::uint64_t>(c.seed);
  w.pod<std::int32_t>(c.epochs_completed);
  w.pod<std::int32_t>(c.best_epoch);
  w.pod<double>(c.best_validation_auc);
  w.pod<std::uint64_t>(c.optimizer_steps);
  w.string(c.rng_state);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(c.epochs.size()));
  for (const EpochRecord& e : c.epochs) {
    w.pod<std::int32_t>(e.epoch);
    w.pod<double>(e.mean_loss);
    w.pod<double>(e.validation_auc);
    w.pod<std::uint64_t>(e.samples);
    w.pod<std::uint64_t>(e.clipped_batches);
  }
  w.group(c.parameters, c.precision);
  w.group(c.first_moments, c.precision);
  w.group(c.second_moments, c.precision);
  w.group(c.best_parameters, c.precision);
  w.finish();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw IoError(path.string() + " is not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint " + path.string() + " has unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  const auto width = r.pod<std::uint32_t>();
  if (width == 8) c.precision = Precision::float64;
  else if (width == 4) c.precision = Precision::float32;
  else throw IoError("checkpoint " + path.string() + " has unknown scalar width");
  c.config_hash = r.pod<std::uint64_t>();
  c.seed = r.pod<std::uint64_t>();
  c.epochs_completed = r.pod<std::int32_t>();
  c.best_epoch = r.pod<std::int32_t>();
  c.best_validation_auc = r.pod<double>();
  c.optimizer_steps = r.pod<std::uint64_t>();
  c.rng_state = r.string();
  const auto records = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < records; ++i) {
    EpochRecord e;
    e.epoch = r.pod<std::int32_t>();
    e.mean_loss = r.pod<double>();
    e.validation_auc = r.pod<double>();
    e.samples = r.pod<std::uint64_t>();
    e.clipped_batches = r.pod<std::uint64_t>();
    c.epochs.push_back(e);
  }
  c.parameters = r.group(c.precision);
  c.first_moments = r.group(c.precision);
  c.second_moments = r.group(c.precision);
  c.best_parameters = r.group(c.precision);
  return c;
}

}  // namespace nnr
