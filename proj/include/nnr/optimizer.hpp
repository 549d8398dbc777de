#pragma once

#include <vector>

#include "nnr/layers.hpp"

namespace nnr {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // 0 disables clipping
};

/// Adam over the trainable parameters of a store. Parameters without a
/// gradient this step are treated as having a zero gradient; rows marked as
/// frozen padding rows are never written.
template <typename S>
class Adam {
 public:
  Adam(ParameterStore<S>& store, AdamOptions options);

  /// Applies one update from the accumulated gradients. Returns true when the
  /// global gradient norm exceeded clip_norm and was rescaled.
  bool step();

  double last_gradient_norm() const { return last_norm_; }
  std::uint64_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

  /// Moment buffers in store order, one per parameter (empty for frozen ones).
  std::vector<Matrix<S>>& first_moments() { return m_; }
  std::vector<Matrix<S>>& second_moments() { return v_; }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  ParameterStore<S>* store_;
  AdamOptions options_;
  std::vector<Matrix<S>> m_;
  std::vector<Matrix<S>> v_;
  std::uint64_t t_ = 0;
  double last_norm_ = 0.0;
};

}  // namespace nnr
