#pragma once

// Brute-force references written directly from the textbook formulas with
// explicit loops. They share no code with the library implementations.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nnr/tensor.hpp"

namespace nnr::testing {

using Mat = Matrix<double>;

/// out[t][o] = b[o] + sum_k sum_c x[t + k - pad][c] * filt[o][k][c], zero outside.
inline Mat naive_conv1d_same(const Mat& x, const Mat& filters, const Mat& bias, int window) {
  const int length = static_cast<int>(x.rows());
  const int d_in = static_cast<int>(x.cols());
  const int d_out = static_cast<int>(filters.rows());
  const int pad = (window - 1) / 2;
  Mat out(length, d_out);
  for (int t = 0; t < length; ++t) {
    for (int o = 0; o < d_out; ++o) {
      double acc = bias(0, o);
      for (int k = 0; k < window; ++k) {
        const int src = t + k - pad;
        if (src < 0 || src >= length) continue;
        for (int c = 0; c < d_in; ++c) acc += x(src, c) * filters(o, k * d_in + c);
      }
      out(t, o) = acc;
    }
  }
  return out;
}

inline Mat naive_linear(const Mat& x, const Mat& w, const Mat* b) {
  Mat out(x.rows(), w.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < w.rows(); ++j) {
      double acc = b ? (*b)(0, j) : 0.0;
      for (Index k = 0; k < x.cols(); ++k) acc += x(i, k) * w(j, k);
      out(i, j) = acc;
    }
  }
  return out;
}

/// Per-head loop; mask entries of 0 exclude keys.
inline Mat naive_attention(const Mat& q, const Mat& k, const Mat& v, int heads, const std::vector<int>* mask) {
  const int dh = static_cast<int>(q.cols()) / heads;
  Mat out = Mat::Zero(q.rows(), q.cols());
  for (int h = 0; h < heads; ++h) {
    for (Index i = 0; i < q.rows(); ++i) {
      std::vector<double> w(static_cast<std::size_t>(k.rows()), 0.0);
      double total = 0.0;
      for (Index j = 0; j < k.rows(); ++j) {
        if (mask && (*mask)[static_cast<std::size_t>(j)] == 0) continue;
        double s = 0.0;
        for (int c = 0; c < dh; ++c) s += q(i, h * dh + c) * k(j, h * dh + c);
        w[static_cast<std::size_t>(j)] = std::exp(s / std::sqrt(static_cast<double>(dh)));
        total += w[static_cast<std::size_t>(j)];
      }
      for (Index j = 0; j < k.rows(); ++j) {
        for (int c = 0; c < dh; ++c) out(i, h * dh + c) += w[static_cast<std::size_t>(j)] / total * v(j, h * dh + c);
      }
    }
  }
  return out;
}

/// alpha_i = softmax_i(q . tanh(W x_i + b)); returns sum_i alpha_i x_i.
inline Mat naive_additive_attention(const Mat& seq, const Mat& w, const Mat& b, const Mat& query,
                                    std::vector<double>* alpha_out = nullptr) {
  std::vector<double> e(static_cast<std::size_t>(seq.rows()));
  for (Index i = 0; i < seq.rows(); ++i) {
    double s = 0.0;
    for (Index j = 0; j < w.rows(); ++j) {
      double pre = b(0, j);
      for (Index c = 0; c < seq.cols(); ++c) pre += w(j, c) * seq(i, c);
      s += query(0, j) * std::tanh(pre);
    }
    e[static_cast<std::size_t>(i)] = std::exp(s);
  }
  const double total = std::accumulate(e.begin(), e.end(), 0.0);
  Mat out = Mat::Zero(1, seq.cols());
  for (Index i = 0; i < seq.rows(); ++i) out += (e[static_cast<std::size_t>(i)] / total) * seq.row(i);
  if (alpha_out) {
    alpha_out->clear();
    for (double x : e) alpha_out->push_back(x / total);
  }
  return out;
}

/// Fraction of (positive, negative) pairs ordered correctly, ties count 1/2.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double good = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) good += 1.0;
      else if (scores[i] == scores[j]) good += 0.5;
    }
  }
  return good / pairs;
}

/// 1-based rank of item i: 1 + #items scoring higher + #earlier items tied.
inline int stable_rank(const std::vector<double>& scores, std::size_t i) {
  int rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++rank;
  }
  return rank;
}

inline double direct_mrr(const std::vector<double>& scores, const std::vector<int>& labels) {
  double total = 0.0;
  int positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    total += 1.0 / stable_rank(scores, i);
    ++positives;
  }
  return total / positives;
}

inline double direct_ndcg(const std::vector<double>& scores, const std::vector<int>& labels, int k) {
  double dcg = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int r = stable_rank(scores, i);
    if (labels[i] && r <= k) dcg += 1.0 / std::log2(r + 1.0);
  }
  const int positives = static_cast<int>(std::count(labels.begin(), labels.end(), 1));
  double ideal = 0.0;
  for (int r = 1; r <= std::min(k, positives); ++r) ideal += 1.0 / std::log2(r + 1.0);
  return dcg / ideal;
}

}  // namespace nnr::testing
