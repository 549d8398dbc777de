#pragma once

// Named parameters and the attention / convolution / recurrent building
// blocks shared by the news and user encoders.

#include <string>
#include <unordered_map>
#include <vector>

#include "nnr/ops.hpp"

namespace nnr {

// uniform draws from U(-0.1, 0.1); xavier_uniform from U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
enum class Init { zeros, uniform, xavier_uniform };

template <typename S>
struct Parameter {
  std::string name;            // hierarchical, e.g. "ue.gru.w_hidden"
  std::vector<Index> shape;    // logical shape; storage is 2-D
  Tensor<S> tensor;
  bool trainable = true;
  bool frozen_padding_row = false;  // row 0 never changes when set

  Index size() const { return tensor.size(); }
};

/// Owns every parameter of a model, in registration order.
template <typename S>
class ParameterStore {
 public:
  /// Registers a [rows, cols] parameter. Throws ConfigError on a duplicate name.
  Tensor<S> add(const std::string& name, Index rows, Index cols, Init init, Rng& rng,
                std::vector<Index> logical_shape = {});

  Parameter<S>& at(const std::string& name);
  const Parameter<S>& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Parameter<S>>& all() { return params_; }
  const std::vector<Parameter<S>>& all() const { return params_; }

  Index total_size() const;
  void zero_grad();

 private:
  std::vector<Parameter<S>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

template <typename S>
struct LinearLayer {
  Tensor<S> weight;  // [out, in]
  Tensor<S> bias;    // [1, out], may be undefined

  Tensor<S> operator()(const Tensor<S>& x) const { return linear(x, weight, bias); }
  Index in_features() const { return weight.cols(); }
  Index out_features() const { return weight.rows(); }
};

template <typename S>
LinearLayer<S> make_linear(ParameterStore<S>& store, const std::string& name, Index in, Index out, bool bias,
                           Rng& rng);

/// q^T tanh(W x_i + b) scoring followed by softmax pooling over rows.
template <typename S>
struct AdditiveAttentionParams {
  LinearLayer<S> projection;  // [query_dim, d]
  Tensor<S> query;            // [1, query_dim]
};

template <typename S>
AdditiveAttentionParams<S> make_additive_attention(ParameterStore<S>& store, const std::string& name, Index d,
                                                   Index query_dim, Rng& rng);

template <typename S>
struct AttentionOutput {
  Tensor<S> output;   // [1, d]
  Tensor<S> weights;  // [1, L]
};

template <typename S>
AttentionOutput<S> additive_attention(const Tensor<S>& seq, const AdditiveAttentionParams<S>& params,
                                      const KeyMask* mask = nullptr);

/// Additive attention with an externally supplied query vector [1, query_dim].
template <typename S>
AttentionOutput<S> personalized_attention(const Tensor<S>& seq, const Tensor<S>& query,
                                          const LinearLayer<S>& projection, const KeyMask* mask = nullptr);

template <typename S>
struct MultiHeadAttentionParams {
  LinearLayer<S> query;
  LinearLayer<S> key;
  LinearLayer<S> value;
  Index heads = 1;

  Index output_dim() const { return value.out_features(); }
};

template <typename S>
MultiHeadAttentionParams<S> make_multi_head_attention(ParameterStore<S>& store, const std::string& name, Index d_in,
                                                      Index heads, Index head_dim, Rng& rng,
                                                      Index query_in = -1);

template <typename S>
Tensor<S> multi_head_self_attention(const Tensor<S>& seq, const MultiHeadAttentionParams<S>& params,
                                    const KeyMask* mask = nullptr);

template <typename S>
struct Conv1dParams {
  Tensor<S> filters;  // logical [d_out, window, d_in], stored [d_out, window * d_in]
  Tensor<S> bias;     // [1, d_out]
  Index window = 1;
  Activation activation = Activation::relu;
};

template <typename S>
Conv1dParams<S> make_conv1d(ParameterStore<S>& store, const std::string& name, Index d_in, Index d_out,
                            Index window, Activation activation, Rng& rng);

/// Length-preserving cross-correlation (odd window, zero padding) + activation.
template <typename S>
Tensor<S> conv1d_same(const Tensor<S>& seq, const Conv1dParams<S>& params);

/// Unpadded cross-correlation; sequences shorter than the window are
/// zero-extended to one full window.
template <typename S>
Tensor<S> conv1d_valid(const Tensor<S>& seq, const Conv1dParams<S>& params);

/// Gate order in the stacked weights: reset, update, candidate.
template <typename S>
struct GruParams {
  LinearLayer<S> input;   // [3h, d_in]
  LinearLayer<S> hidden;  // [3h, h]

  Index hidden_dim() const { return hidden.in_features(); }
};

template <typename S>
GruParams<S> make_gru(ParameterStore<S>& store, const std::string& name, Index d_in, Index hidden, Rng& rng);

template <typename S>
struct GruOutput {
  Tensor<S> states;  // [L, h]; zero rows when L == 0
  Tensor<S> final;   // [1, h]
};

/// r = sig(W_ir x + b_ir + W_hr h + b_hr), z likewise,
/// n = tanh(W_in x + b_in + r * (W_hn h + b_hn)), h' = (1 - z) * n + z * h.
template <typename S>
GruOutput<S> gru_forward(const Tensor<S>& seq, const Tensor<S>& h0, const GruParams<S>& params);

}  // namespace nnr
