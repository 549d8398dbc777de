#pragma once

// Binary training checkpoints.
//
// Layout (little-endian host order):
//   magic "NNRCKPT1"            8 bytes
//   version                     u32
//   scalar width                u32   4 = float, 8 = double
//   config hash                 u64
//   seed                        u64
//   epochs completed            i32
//   best epoch                  i32   -1 before any validation
//   best validation AUC         f64
//   optimizer steps             u64
//   rng state                   string
//   epoch records               u32 count, then per record: i32 epoch,
//                               f64 mean loss, f64 validation AUC, u64 samples,
//                               u64 clipped batches
//   4 tensor groups, each       u32 count, then per tensor: string name,
//                               i64 rows, i64 cols, rows*cols scalars
//     (parameters, first moments, second moments, best parameters)
// Strings are a u64 byte length followed by the bytes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nnr/config.hpp"
#include "nnr/tensor.hpp"

namespace nnr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double validation_auc = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t clipped_batches = 0;

  bool operator==(const EpochRecord&) const = default;
};

struct NamedMatrix {
  std::string name;
  Matrix<double> values;  // float checkpoints widen losslessly

  bool operator==(const NamedMatrix&) const = default;
};

struct Checkpoint {
  Precision precision = Precision::float64;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int epochs_completed = 0;
  int best_epoch = -1;
  double best_validation_auc = 0.0;
  std::uint64_t optimizer_steps = 0;
  std::string rng_state;
  std::vector<EpochRecord> epochs;
  std::vector<NamedMatrix> parameters;
  std::vector<NamedMatrix> first_moments;
  std::vector<NamedMatrix> second_moments;
  std::vector<NamedMatrix> best_parameters;

  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// Throws IoError on a missing file, bad magic, unknown version or truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nnr
