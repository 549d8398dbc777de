#include "nnr/layers.hpp"

#include <cmath>

namespace nnr {

template <typename S>
Tensor<S> ParameterStore<S>::add(const std::string& name, Index rows, Index cols, Init init, Rng& rng,
                                 std::vector<Index> logical_shape) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  if (rows < 1 || cols < 1) throw ConfigError("parameter " + name + " must have positive dimensions");
  Matrix<S> value = Matrix<S>::Zero(rows, cols);
  if (init != Init::zeros) {
    double limit = 0.1;
    if (init == Init::xavier_uniform) {
      // For conv filters fan_in covers the whole window.
      limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    }
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index i = 0; i < value.size(); ++i) value.data()[i] = static_cast<S>(dist(rng));
  }
  Parameter<S> p;
  p.name = name;
  p.shape = logical_shape.empty() ? std::vector<Index>{rows, cols} : std::move(logical_shape);
  p.tensor = Tensor<S>(std::move(value), true);
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return params_.back().tensor;
}

template <typename S>
Parameter<S>& ParameterStore<S>::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw IndexError("unknown parameter: " + name);
  return params_[it->second];
}

template <typename S>
const Parameter<S>& ParameterStore<S>::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw IndexError("unknown parameter: " + name);
  return params_[it->second];
}

template <typename S>
Index ParameterStore<S>::total_size() const {
  Index total = 0;
  for (const auto& p : params_) total += p.size();
  return total;
}

template <typename S>
void ParameterStore<S>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template <typename S>
LinearLayer<S> make_linear(ParameterStore<S>& store, const std::string& name, Index in, Index out, bool bias,
                           Rng& rng) {
  LinearLayer<S> layer;
  layer.weight = store.add(name + ".weight", out, in, Init::xavier_uniform, rng);
  if (bias) layer.bias = store.add(name + ".bias", 1, out, Init::zeros, rng);
  return layer;
}

template <typename S>
AdditiveAttentionParams<S> make_additive_attention(ParameterStore<S>& store, const std::string& name, Index d,
                                                   Index query_dim, Rng& rng) {
  AdditiveAttentionParams<S> params;
  params.projection = make_linear(store, name + ".projection", d, query_dim, true, rng);
  params.query = store.add(name + ".query", 1, query_dim, Init::uniform, rng);
  return params;
}

namespace {

template <typename S>
AttentionOutput<S> pool_with_query(const Tensor<S>& seq, const Tensor<S>& query, const LinearLayer<S>& projection,
                                   const KeyMask* mask) {
  if (seq.rows() < 1) throw DegenerateInputError("attention pooling over an empty sequence");
  if (query.rows() != 1 || query.cols() != projection.out_features()) {
    throw ShapeError("attention query must be [1, " + std::to_string(projection.out_features()) + "]");
  }
  if (mask && static_cast<Index>(mask->size()) != seq.rows()) throw ShapeError("attention mask length");
  Tensor<S> keys = tanh(projection(seq));
  Tensor<S> logits = transpose(matmul_nt(keys, query));  // [1, L]
  AttentionOutput<S> out;
  if (mask) {
    BoolMatrix m(1, seq.rows());
    for (Index i = 0; i < seq.rows(); ++i) m(0, i) = (*mask)[static_cast<std::size_t>(i)] != 0;
    out.weights = softmax(logits, &m);
  } else {
    out.weights = softmax(logits);
  }
  out.output = matmul(out.weights, seq);
  return out;
}

}  // namespace

template <typename S>
AttentionOutput<S> additive_attention(const Tensor<S>& seq, const AdditiveAttentionParams<S>& params,
                                      const KeyMask* mask) {
  return pool_with_query(seq, params.query, params.projection, mask);
}

template <typename S>
AttentionOutput<S> personalized_attention(const Tensor<S>& seq, const Tensor<S>& query,
                                          const LinearLayer<S>& projection, const KeyMask* mask) {
  return pool_with_query(seq, query, projection, mask);
}

template <typename S>
MultiHeadAttentionParams<S> make_multi_head_attention(ParameterStore<S>& store, const std::string& name, Index d_in,
                                                      Index heads, Index head_dim, Rng& rng, Index query_in) {
  if (heads < 1) throw ConfigError(name + ": number of heads must be positive");
  const Index d_out = heads * head_dim;
  MultiHeadAttentionParams<S> p;
  p.query = make_linear(store, name + ".query", query_in > 0 ? query_in : d_in, d_out, true, rng);
  p.key = make_linear(store, name + ".key", d_in, d_out, true, rng);
  p.value = make_linear(store, name + ".value", d_in, d_out, true, rng);
  p.heads = heads;
  return p;
}

template <typename S>
Tensor<S> multi_head_self_attention(const Tensor<S>& seq, const MultiHeadAttentionParams<S>& params,
                                    const KeyMask* mask) {
  if (params.heads < 1) throw ConfigError("multi-head attention with zero heads");
  if (seq.rows() < 1) throw DegenerateInputError("self-attention over an empty sequence");
  return attention_core(params.query(seq), params.key(seq), params.value(seq), params.heads, mask);
}

template <typename S>
Conv1dParams<S> make_conv1d(ParameterStore<S>& store, const std::string& name, Index d_in, Index d_out,
                            Index window, Activation activation, Rng& rng) {
  if (window < 1) throw ConfigError(name + ": window must be positive");
  Conv1dParams<S> p;
  p.filters = store.add(name + ".filters", d_out, window * d_in, Init::xavier_uniform, rng, {d_out, window, d_in});
  p.bias = store.add(name + ".bias", 1, d_out, Init::zeros, rng);
  p.window = window;
  p.activation = activation;
  return p;
}

template <typename S>
Tensor<S> conv1d_same(const Tensor<S>& seq, const Conv1dParams<S>& params) {
  if (params.window % 2 == 0) throw ConfigError("conv1d_same requires an odd window");
  if (seq.rows() < 1) throw DegenerateInputError("conv1d over an empty sequence");
  if (params.filters.cols() != params.window * seq.cols()) throw ShapeError("conv1d: input feature size mismatch");
  const Index pad = (params.window - 1) / 2;
  return activate(linear(unfold(seq, params.window, pad, pad), params.filters, params.bias), params.activation);
}

template <typename S>
Tensor<S> conv1d_valid(const Tensor<S>& seq, const Conv1dParams<S>& params) {
  if (seq.rows() < 1) throw DegenerateInputError("conv1d over an empty sequence");
  if (params.filters.cols() != params.window * seq.cols()) throw ShapeError("conv1d: input feature size mismatch");
  const Index pad_after = seq.rows() < params.window ? params.window - seq.rows() : 0;
  return activate(linear(unfold(seq, params.window, 0, pad_after), params.filters, params.bias), params.activation);
}

template <typename S>
GruParams<S> make_gru(ParameterStore<S>& store, const std::string& name, Index d_in, Index hidden, Rng& rng) {
  GruParams<S> p;
  p.input = make_linear(store, name + ".input", d_in, 3 * hidden, true, rng);
  p.hidden = make_linear(store, name + ".hidden", hidden, 3 * hidden, true, rng);
  return p;
}

template <typename S>
GruOutput<S> gru_forward(const Tensor<S>& seq, const Tensor<S>& h0, const GruParams<S>& params) {
  const Index h = params.hidden_dim();
  if (h0.rows() != 1 || h0.cols() != h) throw ShapeError("gru: initial state must be [1, hidden]");
  if (seq.rows() > 0 && seq.cols() != params.input.in_features()) throw ShapeError("gru: input feature size");
  GruOutput<S> out;
  if (seq.rows() == 0) {
    out.states = Tensor<S>::zeros(0, h);
    out.final = h0;
    return out;
  }
  Tensor<S> projected = params.input(seq);  // all steps at once
  std::vector<Tensor<S>> states;
  states.reserve(static_cast<std::size_t>(seq.rows()));
  Tensor<S> state = h0;
  for (Index t = 0; t < seq.rows(); ++t) {
    Tensor<S> xi = row_of(projected, t);
    Tensor<S> hh = params.hidden(state);
    Tensor<S> r = sigmoid(add(block(xi, 0, 0, 1, h), block(hh, 0, 0, 1, h)));
    Tensor<S> z = sigmoid(add(block(xi, 0, h, 1, h), block(hh, 0, h, 1, h)));
    Tensor<S> n = tanh(add(block(xi, 0, 2 * h, 1, h), hadamard(r, block(hh, 0, 2 * h, 1, h))));
    state = add(hadamard(affine(z, S(-1), S(1)), n), hadamard(z, state));
    states.push_back(state);
  }
  out.states = concat_rows(states);
  out.final = state;
  return out;
}

#define NNR_INSTANTIATE_LAYERS(S)                                                                            \
  template class ParameterStore<S>;                                                                          \
  template LinearLayer<S> make_linear(ParameterStore<S>&, const std::string&, Index, Index, bool, Rng&);    \
  template AdditiveAttentionParams<S> make_additive_attention(ParameterStore<S>&, const std::string&, Index, \
                                                              Index, Rng&);                                 \
  template AttentionOutput<S> additive_attention(const Tensor<S>&, const AdditiveAttentionParams<S>&,        \
                                                 const KeyMask*);                                            \
  template AttentionOutput<S> personalized_attention(const Tensor<S>&, const Tensor<S>&,                     \
                                                     const LinearLayer<S>&, const KeyMask*);                 \
  template MultiHeadAttentionParams<S> make_multi_head_attention(ParameterStore<S>&, const std::string&,     \
                                                                 Index, Index, Index, Rng&, Index);          \
  template Tensor<S> multi_head_self_attention(const Tensor<S>&, const MultiHeadAttentionParams<S>&,         \
                                               const KeyMask*);                                              \
  template Conv1dParams<S> make_conv1d(ParameterStore<S>&, const std::string&, Index, Index, Index,          \
                                       Activation, Rng&);                                                    \
  template Tensor<S> conv1d_same(const Tensor<S>&, const Conv1dParams<S>&);                                  \
  template Tensor<S> conv1d_valid(const Tensor<S>&, const Conv1dParams<S>&);                                 \
  template GruParams<S> make_gru(ParameterStore<S>&, const std::string&, Index, Index, Rng&);               \
  template GruOutput<S> gru_forward(const Tensor<S>&, const Tensor<S>&, const GruParams<S>&);

NNR_INSTANTIATE_LAYERS(float)
NNR_INSTANTIATE_LAYERS(double)

#undef NNR_INSTANTIATE_LAYERS

}  // namespace nnr
