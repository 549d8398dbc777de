#pragma once

// Training objectives over per-sample candidate scores: cross-entropy with
// sampled negatives and the supervised contrastive loss, plus the negative
// sampler that builds the samples.

#include <cmath>
#include <cstdint>
#include <spdlog/spdlog.h>
#include <vector>

#include "nnr/ops.hpp"

namespace nnr {

enum class Objective { ce, scl };

std::string to_string(Objective objective);
Objective parse_objective(const std::string& name);

template <typename Id>
struct LabeledCandidate {
  Id news;
  bool clicked = false;

  bool operator==(const LabeledCandidate&) const = default;
};

template <typename Id>
struct NegativeSample {
  Id positive;
  std::vector<Id> negatives;
};

/// One sample per clicked candidate, each with k negatives drawn uniformly
/// from the non-clicked candidates: without replacement when at least k
/// exist, with replacement otherwise. Candidate lists with no clicks or no
/// non-clicks yield nothing.
template <typename Id>
std::vector<NegativeSample<Id>> sample_negatives(const std::vector<LabeledCandidate<Id>>& candidates, int k,
                                                 Rng& rng) {
  if (k < 1) throw ConfigError("negative sampling requires k >= 1");
  std::vector<NegativeSample<Id>> out;
  if (candidates.empty()) {
    spdlog::warn("skipping impression with zero candidates");
    return out;
  }
  std::vector<Id> positives;
  std::vector<Id> pool;
  for (const auto& c : candidates) (c.clicked ? positives : pool).push_back(c.news);
  if (positives.empty()) return out;
  if (pool.empty()) {
    spdlog::warn("skipping impression without non-clicked candidates");
    return out;
  }
  const auto kk = static_cast<std::size_t>(k);
  for (const Id& pos : positives) {
    NegativeSample<Id> s{pos, {}};
    if (pool.size() >= kk) {
      std::vector<Id> shuffled = pool;
      for (std::size_t i = 0; i < kk; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, shuffled.size() - 1);
        std::swap(shuffled[i], shuffled[pick(rng)]);
      }
      s.negatives.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(kk));
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (std::size_t i = 0; i < kk; ++i) s.negatives.push_back(pool[pick(rng)]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {
template <typename S>
void require_finite_scores(const Tensor<S>& scores) {
  if (!scores.value().allFinite()) throw NumericError("loss received non-finite scores");
}
}  // namespace detail

/// -log softmax(scores)[positive_index] for a [1, 1+K] score row.
template <typename S>
Tensor<S> ce_ns_loss(const Tensor<S>& scores, Index positive_index) {
  if (scores.rows() != 1) throw ShapeError("ce_ns_loss expects a single score row");
  if (positive_index < 0 || positive_index >= scores.cols()) throw IndexError("ce_ns_loss: positive index");
  detail::require_finite_scores(scores);
  return scale(pick(log_softmax(scores), 0, positive_index), S(-1));
}

/// -(1/|P|) sum_{p in P} log( exp(s_p / tau) / sum_a exp(s_a / tau) ).
template <typename S>
Tensor<S> scl_loss(const Tensor<S>& scores, const std::vector<std::uint8_t>& labels, double tau) {
  if (scores.rows() != 1 || static_cast<Index>(labels.size()) != scores.cols()) {
    throw ShapeError("scl_loss expects one score row with one label per candidate");
  }
  if (!(tau > 0.0)) throw ConfigError("scl temperature must be positive");
  detail::require_finite_scores(scores);
  Matrix<S> positive_mask = Matrix<S>::Zero(1, scores.cols());
  Index positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      positive_mask(0, static_cast<Index>(i)) = S(1);
      ++positives;
    }
  }
  if (positives == 0 || positives == scores.cols()) {
    throw DegenerateInputError("scl_loss needs at least one positive and one negative");
  }
  Tensor<S> log_probs = log_softmax(scale(scores, static_cast<S>(1.0 / tau)));
  Tensor<S> picked = sum(hadamard(log_probs, Tensor<S>(std::move(positive_mask))));
  return scale(picked, S(-1) / static_cast<S>(positives));
}

/// Mean of per-sample scalar losses, summed in sample order.
template <typename S>
Tensor<S> mean_loss(const std::vector<Tensor<S>>& losses) {
  if (losses.empty()) throw DegenerateInputError("mean over an empty batch");
  return scale(sum(concat_cols(losses)), S(1) / static_cast<S>(losses.size()));
}

}  // namespace nnr
