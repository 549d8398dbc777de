#pragma once

// Candidate relevance under early fusion (user vector . candidate) and late
// fusion (mean over clicks of candidate . click). Late fusion is a
// parameterless user encoder: the mean of dots equals the dot with the mean.

#include "nnr/ops.hpp"
#include "nnr/model_config.hpp"

namespace nnr {

template <typename S>
struct RelevanceScore {
  Tensor<S> value;  // [1, 1]
  FusionMode fusion_mode;

  S item() const { return value.item(); }
};

/// u . c for two [1, d] rows.
template <typename S>
RelevanceScore<S> score_early(const Tensor<S>& user, const Tensor<S>& candidate) {
  if (user.rows() != 1 || candidate.rows() != 1 || user.cols() != candidate.cols()) {
    throw ShapeError("score_early: expected two [1, d] rows of equal width");
  }
  return {dot(user, candidate), FusionMode::early};
}

/// (1/N) sum_i c . h_i over the first `length` rows of history. An empty
/// history scores 0.
template <typename S>
RelevanceScore<S> score_late(const Tensor<S>& history, Index length, const Tensor<S>& candidate) {
  if (candidate.rows() != 1 || history.cols() != candidate.cols()) {
    throw ShapeError("score_late: candidate must be [1, d] matching history width");
  }
  if (length < 0 || length > history.rows()) throw ShapeError("score_late: length outside history");
  if (length == 0) return {Tensor<S>::zeros(1, 1), FusionMode::late};
  Tensor<S> clicks = length == history.rows() ? history : block(history, 0, 0, length, history.cols());
  return {mean_rows(matmul_nt(clicks, candidate)), FusionMode::late};
}

/// Late-fusion scores of M stacked candidates [M, d] at once, as a [1, M] row.
template <typename S>
Tensor<S> score_late_all(const Tensor<S>& history, Index length, const Tensor<S>& candidates) {
  if (history.cols() != candidates.cols()) throw ShapeError("score_late_all: width mismatch");
  if (length < 0 || length > history.rows()) throw ShapeError("score_late_all: length outside history");
  if (length == 0) return Tensor<S>::zeros(1, candidates.rows());
  Tensor<S> clicks = length == history.rows() ? history : block(history, 0, 0, length, history.cols());
  return mean_rows(matmul_nt(clicks, candidates));
}

/// Coordinate-wise mean of the first `length` clicked-news rows.
template <typename S>
Tensor<S> user_embedding_late(const Tensor<S>& history, Index length) {
  if (length < 1) throw DegenerateInputError("late-fusion user embedding of an empty history");
  if (length > history.rows()) throw ShapeError("user_embedding_late: length outside history");
  Tensor<S> clicks = length == history.rows() ? history : block(history, 0, 0, length, history.cols());
  return mean_rows(clicks);
}

}  // namespace nnr
