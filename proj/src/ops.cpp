#include "nnr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nnr {

namespace {

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch [" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + "] vs [" + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + "]");
  }
}

template <typename S>
Node<S>& parent(Node<S>& n, std::size_t i) {
  return *n.parents[i];
}

}  // namespace

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix<S> out = a.value() * b.value();
  return Tensor<S>::from_op(std::move(out), {a, b}, [](Node<S>& n) {
    Node<S>& pa = parent(n, 0);
    Node<S>& pb = parent(n, 1);
    if (pa.requires_grad) pa.accumulate(n.grad * pb.value.transpose());
    if (pb.requires_grad) pb.accumulate(pa.value.transpose() * n.grad);
  });
}

template <typename S>
Tensor<S> matmul_nt(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: trailing dimensions differ");
  Matrix<S> out = a.value() * b.value().transpose();
  return Tensor<S>::from_op(std::move(out), {a, b}, [](Node<S>& n) {
    Node<S>& pa = parent(n, 0);
    Node<S>& pb = parent(n, 1);
    if (pa.requires_grad) pa.accumulate(n.grad * pb.value);
    if (pb.requires_grad) pb.accumulate(n.grad.transpose() * pa.value);
  });
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& a) {
  Matrix<S> out = a.value().transpose();
  return Tensor<S>::from_op(std::move(out), {a},
                            [](Node<S>& n) { parent(n, 0).accumulate(n.grad.transpose()); });
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape(a, b, "add");
  Matrix<S> out = a.value() + b.value();
  return Tensor<S>::from_op(std::move(out), {a, b}, [](Node<S>& n) {
    parent(n, 0).accumulate(n.grad);
    parent(n, 1).accumulate(n.grad);
  });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape(a, b, "sub");
  Matrix<S> out = a.value() - b.value();
  return Tensor<S>::from_op(std::move(out), {a, b}, [](Node<S>& n) {
    parent(n, 0).accumulate(n.grad);
    parent(n, 1).accumulate(-n.grad);
  });
}

template <typename S>
Tensor<S> hadamard(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape(a, b, "hadamard");
  Matrix<S> out = a.value().cwiseProduct(b.value());
  return Tensor<S>::from_op(std::move(out), {a, b}, [](Node<S>& n) {
    Node<S>& pa = parent(n, 0);
    Node<S>& pb = parent(n, 1);
    if (pa.requires_grad) pa.accumulate(n.grad.cwiseProduct(pb.value));
    if (pb.requires_grad) pb.accumulate(n.grad.cwiseProduct(pa.value));
  });
}

template <typename S>
Tensor<S> add_row(const Tensor<S>& a, const Tensor<S>& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("add_row: row must be [1, cols(a)]");
  Matrix<S> out = a.value().rowwise() + row.value().row(0);
  return Tensor<S>::from_op(std::move(out), {a, row}, [](Node<S>& n) {
    parent(n, 0).accumulate(n.grad);
    Node<S>& pr = parent(n, 1);
    if (pr.requires_grad) pr.accumulate(n.grad.colwise().sum());
  });
}

template <typename S>
Tensor<S> affine(const Tensor<S>& a, S alpha, S beta) {
  Matrix<S> out = (alpha * a.value().array() + beta).matrix();
  return Tensor<S>::from_op(std::move(out), {a},
                            [alpha](Node<S>& n) { parent(n, 0).accumulate(alpha * n.grad); });
}

template <typename S>
Tensor<S> tanh(const Tensor<S>& a) {
  Matrix<S> out = a.value().array().tanh().matrix();
  return Tensor<S>::from_op(std::move(out), {a}, [](Node<S>& n) {
    parent(n, 0).accumulate((n.grad.array() * (S(1) - n.value.array().square())).matrix());
  });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a) {
  Matrix<S> out = (S(1) / (S(1) + (-a.value().array()).exp())).matrix();
  return Tensor<S>::from_op(std::move(out), {a}, [](Node<S>& n) {
    parent(n, 0).accumulate((n.grad.array() * n.value.array() * (S(1) - n.value.array())).matrix());
  });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
  Matrix<S> out = a.value().cwiseMax(S(0));
  return Tensor<S>::from_op(std::move(out), {a}, [](Node<S>& n) {
    const Matrix<S>& x = parent(n, 0).value;
    parent(n, 0).accumulate((x.array() > S(0)).select(n.grad.array(), S(0)).matrix());
  });
}

template <typename S>
Tensor<S> activate(const Tensor<S>& a, Activation act) {
  switch (act) {
    case Activation::relu:
      return relu(a);
    case Activation::tanh:
      return tanh(a);
    case Activation::identity:
      break;
  }
  return a;
}

template <typename S>
Tensor<S> softmax(const Tensor<S>& x, const BoolMatrix* mask) {
  if (x.cols() < 1) throw ShapeError("softmax: empty rows");
  if (mask && (mask->rows() != x.rows() || mask->cols() != x.cols())) throw ShapeError("softmax: mask shape");
  Matrix<S> out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    S max_v = -std::numeric_limits<S>::infinity();
    bool any = false;
    for (Index c = 0; c < x.cols(); ++c) {
      if (mask && !(*mask)(r, c)) continue;
      max_v = std::max(max_v, x.value()(r, c));
      any = true;
    }
    if (!any) throw DegenerateInputError("softmax: fully masked row " + std::to_string(r));
    S total = 0;
    for (Index c = 0; c < x.cols(); ++c) {
      if (mask && !(*mask)(r, c)) {
        out(r, c) = 0;
        continue;
      }
      out(r, c) = std::exp(x.value()(r, c) - max_v);
      total += out(r, c);
    }
    out.row(r) /= total;
  }
  return Tensor<S>::from_op(std::move(out), {x}, [](Node<S>& n) {
    // dx = y * (g - <g, y>) row-wise; masked entries have y == 0.
    Matrix<S> inner = n.grad.cwiseProduct(n.value).rowwise().sum();
    Matrix<S> g = n.value.cwiseProduct((n.grad.colwise() - inner.col(0)));
    parent(n, 0).accumulate(g);
  });
}

template <typename S>
Tensor<S> log_softmax(const Tensor<S>& x) {
  if (x.cols() < 1) throw ShapeError("log_softmax: empty rows");
  Matrix<S> out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const S max_v = x.value().row(r).maxCoeff();
    const S lse = max_v + std::log((x.value().row(r).array() - max_v).exp().sum());
    out.row(r) = (x.value().row(r).array() - lse).matrix();
  }
  return Tensor<S>::from_op(std::move(out), {x}, [](Node<S>& n) {
    Matrix<S> probs = n.value.array().exp().matrix();
    Matrix<S> gsum = n.grad.rowwise().sum();
    Matrix<S> g = n.grad - (probs.array().colwise() * gsum.col(0).array()).matrix();
    parent(n, 0).accumulate(g);
  });
}

template <typename S>
Tensor<S> block(const Tensor<S>& a, Index row0, Index col0, Index rows, Index cols) {
  if (row0 < 0 || col0 < 0 || rows < 0 || cols < 0 || row0 + rows > a.rows() || col0 + cols > a.cols()) {
    throw ShapeError("block: range outside tensor");
  }
  Matrix<S> out = a.value().block(row0, col0, rows, cols);
  return Tensor<S>::from_op(std::move(out), {a}, [row0, col0](Node<S>& n) {
    Node<S>& p = parent(n, 0);
    if (!p.requires_grad) return;
    p.grad_buffer().block(row0, col0, n.grad.rows(), n.grad.cols()) += n.grad;
  });
}

template <typename S>
Tensor<S> concat_cols(std::span<const Tensor<S>> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix<S> out(rows, cols);
  std::vector<Index> offsets;
  Index at = 0;
  for (const auto& p : parts) {
    offsets.push_back(at);
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return Tensor<S>::from_op(std::move(out), std::vector<Tensor<S>>(parts.begin(), parts.end()),
                            [offsets](Node<S>& n) {
                              for (std::size_t i = 0; i < n.parents.size(); ++i) {
                                Node<S>& p = *n.parents[i];
                                if (p.requires_grad) p.accumulate(n.grad.middleCols(offsets[i], p.value.cols()));
                              }
                            });
}

template <typename S>
Tensor<S> concat_rows(std::span<const Tensor<S>> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const Index cols = parts[0].cols();
  Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix<S> out(rows, cols);
  std::vector<Index> offsets;
  Index at = 0;
  for (const auto& p : parts) {
    offsets.push_back(at);
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return Tensor<S>::from_op(std::move(out), std::vector<Tensor<S>>(parts.begin(), parts.end()),
                            [offsets](Node<S>& n) {
                              for (std::size_t i = 0; i < n.parents.size(); ++i) {
                                Node<S>& p = *n.parents[i];
                                if (p.requires_grad) p.accumulate(n.grad.middleRows(offsets[i], p.value.rows()));
                              }
                            });
}

template <typename S>
Tensor<S> select_rows(const Tensor<S>& a, std::span<const Index> indices) {
  Matrix<S> out(static_cast<Index>(indices.size()), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= a.rows()) throw IndexError("select_rows: index out of range");
    out.row(static_cast<Index>(i)) = a.value().row(indices[i]);
  }
  std::vector<Index> idx(indices.begin(), indices.end());
  return Tensor<S>::from_op(std::move(out), {a}, [idx = std::move(idx)](Node<S>& n) {
    Node<S>& p = parent(n, 0);
    if (!p.requires_grad) return;
    Matrix<S>& g = p.grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += n.grad.row(static_cast<Index>(i));
  });
}

template <typename S>
Tensor<S> gather_rows(const Tensor<S>& table, std::span<const int> ids, bool freeze_row0) {
  Matrix<S> out(static_cast<Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw IndexError("embedding lookup: id " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(table.rows()) + " rows");
    }
    out.row(static_cast<Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return Tensor<S>::from_op(std::move(out), {table}, [idx = std::move(idx), freeze_row0](Node<S>& n) {
    Node<S>& p = parent(n, 0);
    if (!p.requires_grad) return;
    Matrix<S>& g = p.grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (freeze_row0 && idx[i] == 0) continue;
      g.row(idx[i]) += n.grad.row(static_cast<Index>(i));
    }
  });
}

template <typename S>
Tensor<S> repeat_rows(const Tensor<S>& row, Index n_rows) {
  if (row.rows() != 1) throw ShapeError("repeat_rows: input must be a single row");
  Matrix<S> out = row.value().replicate(n_rows, 1);
  return Tensor<S>::from_op(std::move(out), {row},
                            [](Node<S>& n) { parent(n, 0).accumulate(n.grad.colwise().sum()); });
}

template <typename S>
Tensor<S> sum(const Tensor<S>& a) {
  Matrix<S> out(1, 1);
  out(0, 0) = a.value().sum();
  return Tensor<S>::from_op(std::move(out), {a}, [](Node<S>& n) {
    Node<S>& p = parent(n, 0);
    p.accumulate(Matrix<S>::Constant(p.value.rows(), p.value.cols(), n.grad(0, 0)));
  });
}

template <typename S>
Tensor<S> mean_rows(const Tensor<S>& a) {
  if (a.rows() == 0) throw DegenerateInputError("mean_rows: no rows");
  const S inv = S(1) / static_cast<S>(a.rows());
  Matrix<S> out = a.value().colwise().sum() * inv;
  return Tensor<S>::from_op(std::move(out), {a}, [inv](Node<S>& n) {
    Node<S>& p = parent(n, 0);
    p.accumulate((n.grad * inv).replicate(p.value.rows(), 1));
  });
}

template <typename S>
Tensor<S> max_rows(const Tensor<S>& a) {
  if (a.rows() == 0) throw DegenerateInputError("max_rows: no rows");
  Matrix<S> out(1, a.cols());
  std::vector<Index> arg(static_cast<std::size_t>(a.cols()));
  for (Index c = 0; c < a.cols(); ++c) {
    Index best = 0;
    for (Index r = 1; r < a.rows(); ++r) {
      if (a.value()(r, c) > a.value()(best, c)) best = r;
    }
    arg[static_cast<std::size_t>(c)] = best;
    out(0, c) = a.value()(best, c);
  }
  return Tensor<S>::from_op(std::move(out), {a}, [arg = std::move(arg)](Node<S>& n) {
    Node<S>& p = parent(n, 0);
    if (!p.requires_grad) return;
    Matrix<S>& g = p.grad_buffer();
    for (std::size_t c = 0; c < arg.size(); ++c) g(arg[c], static_cast<Index>(c)) += n.grad(0, static_cast<Index>(c));
  });
}

template <typename S>
Tensor<S> dot(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape(a, b, "dot");
  Matrix<S> out(1, 1);
  out(0, 0) = a.value().cwiseProduct(b.value()).sum();
  return Tensor<S>::from_op(std::move(out), {a, b}, [](Node<S>& n) {
    const S g = n.grad(0, 0);
    Node<S>& pa = parent(n, 0);
    Node<S>& pb = parent(n, 1);
    if (pa.requires_grad) pa.accumulate(g * pb.value);
    if (pb.requires_grad) pb.accumulate(g * pa.value);
  });
}

template <typename S>
Tensor<S> unfold(const Tensor<S>& seq, Index window, Index pad_before, Index pad_after) {
  if (window < 1) throw ConfigError("unfold: window must be positive");
  const Index length = seq.rows();
  const Index d = seq.cols();
  const Index padded = length + pad_before + pad_after;
  const Index out_rows = padded - window + 1;
  if (out_rows < 1) throw ShapeError("unfold: sequence shorter than window after padding");
  Matrix<S> out = Matrix<S>::Zero(out_rows, window * d);
  for (Index t = 0; t < out_rows; ++t) {
    for (Index k = 0; k < window; ++k) {
      const Index src = t + k - pad_before;
      if (src >= 0 && src < length) out.block(t, k * d, 1, d) = seq.value().row(src);
    }
  }
  return Tensor<S>::from_op(std::move(out), {seq}, [window, pad_before, length, d](Node<S>& n) {
    Node<S>& p = parent(n, 0);
    if (!p.requires_grad) return;
    Matrix<S>& g = p.grad_buffer();
    for (Index t = 0; t < n.grad.rows(); ++t) {
      for (Index k = 0; k < window; ++k) {
        const Index src = t + k - pad_before;
        if (src >= 0 && src < length) g.row(src) += n.grad.block(t, k * d, 1, d);
      }
    }
  });
}

template <typename S>
Tensor<S> dropout(const Tensor<S>& a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  const S inv = static_cast<S>(1.0 / (1.0 - rate));
  Matrix<S> mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? inv : S(0);
  Matrix<S> out = a.value().cwiseProduct(mask);
  return Tensor<S>::from_op(std::move(out), {a}, [mask = std::move(mask)](Node<S>& n) {
    parent(n, 0).accumulate(n.grad.cwiseProduct(mask));
  });
}

template <typename S>
Tensor<S> linear(const Tensor<S>& x, const Tensor<S>& weight, const Tensor<S>& bias) {
  if (x.cols() != weight.cols()) {
    throw ShapeError("linear: input has " + std::to_string(x.cols()) + " features, weight expects " +
                     std::to_string(weight.cols()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rows() != 1 || bias.cols() != weight.rows())) throw ShapeError("linear: bias shape");
  Matrix<S> out = x.value() * weight.value().transpose();
  if (has_bias) out.rowwise() += bias.value().row(0);
  std::vector<Tensor<S>> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return Tensor<S>::from_op(std::move(out), std::move(parents), [](Node<S>& n) {
    Node<S>& px = parent(n, 0);
    Node<S>& pw = parent(n, 1);
    if (px.requires_grad) px.accumulate(n.grad * pw.value);
    if (pw.requires_grad) pw.accumulate(n.grad.transpose() * px.value);
    if (n.parents.size() > 2) {
      Node<S>& pb = parent(n, 2);
      if (pb.requires_grad) pb.accumulate(n.grad.colwise().sum());
    }
  });
}

template <typename S>
Tensor<S> attention_core(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v, Index heads,
                         const KeyMask* key_mask, std::vector<Matrix<S>>* weights_out) {
  if (heads < 1) throw ConfigError("attention: number of heads must be positive");
  if (q.cols() != k.cols() || k.cols() != v.cols() || k.rows() != v.rows()) {
    throw ShapeError("attention: Q/K/V shapes incompatible");
  }
  if (q.cols() % heads != 0) throw ConfigError("attention: feature size not divisible by heads");
  if (k.rows() < 1) throw DegenerateInputError("attention: no keys");
  if (key_mask && static_cast<Index>(key_mask->size()) != k.rows()) throw ShapeError("attention: mask length");
  if (key_mask && std::none_of(key_mask->begin(), key_mask->end(), [](auto m) { return m != 0; })) {
    throw DegenerateInputError("attention: every key is masked");
  }
  const Index dh = q.cols() / heads;
  const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(dh));
  const Index lq = q.rows();
  const Index lk = k.rows();

  Matrix<S> out(lq, q.cols());
  std::vector<Matrix<S>> weights(static_cast<std::size_t>(heads));
  for (Index h = 0; h < heads; ++h) {
    Matrix<S> scores = q.value().middleCols(h * dh, dh) * k.value().middleCols(h * dh, dh).transpose() * inv_sqrt;
    Matrix<S>& a = weights[static_cast<std::size_t>(h)];
    a.resize(lq, lk);
    for (Index r = 0; r < lq; ++r) {
      S max_v = -std::numeric_limits<S>::infinity();
      for (Index c = 0; c < lk; ++c) {
        if (!key_mask || (*key_mask)[static_cast<std::size_t>(c)]) max_v = std::max(max_v, scores(r, c));
      }
      S total = 0;
      for (Index c = 0; c < lk; ++c) {
        const bool keep = !key_mask || (*key_mask)[static_cast<std::size_t>(c)];
        a(r, c) = keep ? std::exp(scores(r, c) - max_v) : S(0);
        total += a(r, c);
      }
      a.row(r) /= total;
    }
    out.middleCols(h * dh, dh) = a * v.value().middleCols(h * dh, dh);
  }
  if (weights_out) *weights_out = weights;
  return Tensor<S>::from_op(std::move(out), {q, k, v},
                            [weights = std::move(weights), heads, dh, inv_sqrt](Node<S>& n) {
                              Node<S>& pq = parent(n, 0);
                              Node<S>& pk = parent(n, 1);
                              Node<S>& pv = parent(n, 2);
                              Matrix<S> gq = Matrix<S>::Zero(pq.value.rows(), pq.value.cols());
                              Matrix<S> gk = Matrix<S>::Zero(pk.value.rows(), pk.value.cols());
                              Matrix<S> gv = Matrix<S>::Zero(pv.value.rows(), pv.value.cols());
                              for (Index h = 0; h < heads; ++h) {
                                const Matrix<S>& a = weights[static_cast<std::size_t>(h)];
                                const auto go = n.grad.middleCols(h * dh, dh);
                                gv.middleCols(h * dh, dh) += a.transpose() * go;
                                Matrix<S> ga = go * pv.value.middleCols(h * dh, dh).transpose();
                                Matrix<S> inner = ga.cwiseProduct(a).rowwise().sum();
                                Matrix<S> gs = a.cwiseProduct(ga.colwise() - inner.col(0)) * inv_sqrt;
                                gq.middleCols(h * dh, dh) += gs * pk.value.middleCols(h * dh, dh);
                                gk.middleCols(h * dh, dh) += gs.transpose() * pq.value.middleCols(h * dh, dh);
                              }
                              if (pq.requires_grad) pq.accumulate(gq);
                              if (pk.requires_grad) pk.accumulate(gk);
                              if (pv.requires_grad) pv.accumulate(gv);
                            });
}

#define NNR_INSTANTIATE_OPS(S)                                                                           \
  template Tensor<S> matmul(const Tensor<S>&, const Tensor<S>&);                                       \
  template Tensor<S> matmul_nt(const Tensor<S>&, const Tensor<S>&);                                    \
  template Tensor<S> transpose(const Tensor<S>&);                                                      \
  template Tensor<S> add(const Tensor<S>&, const Tensor<S>&);                                          \
  template Tensor<S> sub(const Tensor<S>&, const Tensor<S>&);                                          \
  template Tensor<S> hadamard(const Tensor<S>&, const Tensor<S>&);                                     \
  template Tensor<S> add_row(const Tensor<S>&, const Tensor<S>&);                                      \
  template Tensor<S> affine(const Tensor<S>&, S, S);                                                   \
  template Tensor<S> tanh(const Tensor<S>&);                                                           \
  template Tensor<S> sigmoid(const Tensor<S>&);                                                        \
  template Tensor<S> relu(const Tensor<S>&);                                                           \
  template Tensor<S> activate(const Tensor<S>&, Activation);                                           \
  template Tensor<S> softmax(const Tensor<S>&, const BoolMatrix*);                                     \
  template Tensor<S> log_softmax(const Tensor<S>&);                                                    \
  template Tensor<S> block(const Tensor<S>&, Index, Index, Index, Index);                              \
  template Tensor<S> concat_cols(std::span<const Tensor<S>>);                                          \
  template Tensor<S> concat_rows(std::span<const Tensor<S>>);                                          \
  template Tensor<S> select_rows(const Tensor<S>&, std::span<const Index>);                            \
  template Tensor<S> gather_rows(const Tensor<S>&, std::span<const int>, bool);                        \
  template Tensor<S> repeat_rows(const Tensor<S>&, Index);                                             \
  template Tensor<S> sum(const Tensor<S>&);                                                            \
  template Tensor<S> mean_rows(const Tensor<S>&);                                                      \
  template Tensor<S> max_rows(const Tensor<S>&);                                                       \
  template Tensor<S> dot(const Tensor<S>&, const Tensor<S>&);                                          \
  template Tensor<S> unfold(const Tensor<S>&, Index, Index, Index);                                    \
  template Tensor<S> dropout(const Tensor<S>&, double, Rng&);                                          \
  template Tensor<S> linear(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);                     \
  template Tensor<S> attention_core(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, Index,       \
                                    const KeyMask*, std::vector<Matrix<S>>*);

NNR_INSTANTIATE_OPS(float)
NNR_INSTANTIATE_OPS(double)

#undef NNR_INSTANTIATE_OPS

}  // namespace nnr
