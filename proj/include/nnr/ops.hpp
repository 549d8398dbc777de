#pragma once

// Differentiable free functions over nnr::Tensor. Each op validates shapes,
// computes its forward value with Eigen and, when recording, attaches a
// closure that propagates the output gradient to its inputs.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nnr/tensor.hpp"

namespace nnr {

using Rng = std::mt19937_64;

/// Per-key keep flags for attention; 1 = attend, 0 = padded.
using KeyMask = std::vector<std::uint8_t>;

enum class Activation { identity, relu, tanh };

template <typename S> Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);
/// a * b^T
template <typename S> Tensor<S> matmul_nt(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> transpose(const Tensor<S>& a);

template <typename S> Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> hadamard(const Tensor<S>& a, const Tensor<S>& b);
/// Adds a 1 x c row to every row of a.
template <typename S> Tensor<S> add_row(const Tensor<S>& a, const Tensor<S>& row);
/// alpha * a + beta, elementwise.
template <typename S> Tensor<S> affine(const Tensor<S>& a, S alpha, S beta);
template <typename S> Tensor<S> scale(const Tensor<S>& a, S alpha) { return affine(a, alpha, S(0)); }

template <typename S> Tensor<S> tanh(const Tensor<S>& a);
template <typename S> Tensor<S> sigmoid(const Tensor<S>& a);
template <typename S> Tensor<S> relu(const Tensor<S>& a);
template <typename S> Tensor<S> activate(const Tensor<S>& a, Activation act);

/// Row-wise softmax with max-subtraction. Masked-out entries (mask == false)
/// are exactly zero; a row with no unmasked entry is rejected.
template <typename S> Tensor<S> softmax(const Tensor<S>& x, const BoolMatrix* mask = nullptr);
template <typename S> Tensor<S> log_softmax(const Tensor<S>& x);

template <typename S> Tensor<S> block(const Tensor<S>& a, Index row0, Index col0, Index rows, Index cols);
template <typename S> Tensor<S> row_of(const Tensor<S>& a, Index r) { return block(a, r, 0, 1, a.cols()); }
template <typename S> Tensor<S> pick(const Tensor<S>& a, Index r, Index c) { return block(a, r, c, 1, 1); }
template <typename S> Tensor<S> concat_cols(std::span<const Tensor<S>> parts);
template <typename S> Tensor<S> concat_rows(std::span<const Tensor<S>> parts);
template <typename S> Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
  return concat_cols(std::span<const Tensor<S>>(parts));
}
template <typename S> Tensor<S> concat_rows(const std::vector<Tensor<S>>& parts) {
  return concat_rows(std::span<const Tensor<S>>(parts));
}
/// Rows of a at the given indices, in order (indices may repeat).
template <typename S> Tensor<S> select_rows(const Tensor<S>& a, std::span<const Index> indices);
/// Embedding lookup. With freeze_row0 the padding row never receives gradient.
template <typename S>
Tensor<S> gather_rows(const Tensor<S>& table, std::span<const int> ids, bool freeze_row0);
template <typename S> Tensor<S> repeat_rows(const Tensor<S>& row, Index n);

template <typename S> Tensor<S> sum(const Tensor<S>& a);
template <typename S> Tensor<S> mean_rows(const Tensor<S>& a);
/// Column-wise maximum over rows (max-over-time pooling).
template <typename S> Tensor<S> max_rows(const Tensor<S>& a);
template <typename S> Tensor<S> dot(const Tensor<S>& a, const Tensor<S>& b);

/// Sliding windows over the row axis with zero padding: output row t is the
/// concatenation of padded rows t .. t+window-1, giving [L', window * d].
template <typename S>
Tensor<S> unfold(const Tensor<S>& seq, Index window, Index pad_before, Index pad_after);

/// Inverted dropout; identity when rate == 0.
template <typename S> Tensor<S> dropout(const Tensor<S>& a, double rate, Rng& rng);

/// y = x W^T + b, W is [out, in], b is [1, out] (may be undefined).
template <typename S> Tensor<S> linear(const Tensor<S>& x, const Tensor<S>& weight, const Tensor<S>& bias);

/// Scaled dot-product attention split over heads along the feature axis.
/// Q is [Lq, h*dh], K and V are [Lk, h*dh]; weights per head are
/// softmax(Q_h K_h^T / sqrt(dh)) with masked keys excluded.
template <typename S>
Tensor<S> attention_core(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v, Index heads,
                         const KeyMask* key_mask = nullptr, std::vector<Matrix<S>>* weights_out = nullptr);

}  // namespace nnr
