#pragma once

// Central finite-difference oracle for the analytic gradients. Lives in test
// code; it only ever evaluates forward values.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nnr/layers.hpp"

namespace nnr::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

struct GradLeaf {
  Tensor<double> tensor;
  std::string name;
  bool skip_row0 = false;
};

/// Relative error; below 1e-5 in magnitude the comparison becomes absolute so
/// exactly-zero gradients are not judged against round-off noise.
inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
  return std::abs(analytic - numeric) / denom;
}

/// Compares analytic gradients of loss_fn() w.r.t. every leaf against
/// (f(x + eps) - f(x - eps)) / (2 eps). When max_coords > 0 only that many
/// random coordinates per leaf are probed. fourth_order switches to the
/// five-point stencil, which tolerates a larger eps and so less round-off.
inline GradCheckResult gradient_check(const std::vector<GradLeaf>& leaves,
                                      const std::function<Tensor<double>()>& loss_fn, Rng& rng,
                                      double eps = 1e-5, std::size_t max_coords = 0, bool fourth_order = false) {
  for (const auto& leaf : leaves) {
    auto t = leaf.tensor;
    t.zero_grad();
  }
  Tensor<double> loss = loss_fn();
  loss.backward();
  std::vector<Matrix<double>> analytic;
  for (const auto& leaf : leaves) {
    analytic.push_back(leaf.tensor.has_grad() ? leaf.tensor.grad()
                                              : Matrix<double>::Zero(leaf.tensor.rows(), leaf.tensor.cols()));
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor<double> t = leaves[li].tensor;
    const Index start = leaves[li].skip_row0 ? t.cols() : 0;
    const Index total = t.size();
    if (total <= start) continue;
    std::vector<Index> coords;
    if (max_coords == 0 || static_cast<std::size_t>(total - start) <= max_coords) {
      for (Index i = start; i < total; ++i) coords.push_back(i);
    } else {
      std::uniform_int_distribution<Index> pick(start, total - 1);
      for (std::size_t i = 0; i < max_coords; ++i) coords.push_back(pick(rng));
    }
    for (Index i : coords) {
      double& x = t.mutable_value().data()[i];
      const double saved = x;
      auto at = [&](double offset) {
        x = saved + offset;
        return loss_fn().item();
      };
      const double numeric =
          fourth_order ? (-at(2 * eps) + 8 * at(eps) - 8 * at(-eps) + at(-2 * eps)) / (12.0 * eps)
                       : (at(eps) - at(-eps)) / (2.0 * eps);
      x = saved;
      const double a = analytic[li].data()[i];
      const double err = relative_error(a, numeric);
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = leaves[li].name + "[" + std::to_string(i) + "] analytic=" + std::to_string(a) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return result;
}

/// Every trainable parameter of a store as a leaf; padding rows are skipped.
inline std::vector<GradLeaf> trainable_leaves(const ParameterStore<double>& store) {
  std::vector<GradLeaf> leaves;
  for (const auto& p : store.all()) {
    if (!p.trainable) continue;
    leaves.push_back({p.tensor, p.name, p.frozen_padding_row});
  }
  return leaves;
}

/// A random projection of an output tensor to a scalar, so every output
/// coordinate contributes to the checked loss.
inline Tensor<double> random_readout(const Tensor<double>& out, const Matrix<double>& weights) {
  return sum(hadamard(out, Tensor<double>(weights)));
}

inline Matrix<double> random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace nnr::testing
