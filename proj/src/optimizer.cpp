#include "nnr/optimizer.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

namespace nnr {

template <typename S>
Adam<S>::Adam(ParameterStore<S>& store, AdamOptions options) : store_(&store), options_(options) {
  for (const auto& p : store.all()) {
    if (p.trainable) {
      m_.push_back(Matrix<S>::Zero(p.tensor.rows(), p.tensor.cols()));
      v_.push_back(Matrix<S>::Zero(p.tensor.rows(), p.tensor.cols()));
    } else {
      m_.emplace_back();
      v_.emplace_back();
    }
  }
}

template <typename S>
bool Adam<S>::step() {
  auto& params = store_->all();
  if (params.size() != m_.size()) throw ShapeError("optimizer state does not match the parameter store");

  double sq = 0.0;
  for (auto& p : params) {
    if (!p.trainable || !p.tensor.has_grad()) continue;
    if (p.frozen_padding_row) p.tensor.mutable_grad().row(0).setZero();
    sq += p.tensor.grad().template cast<double>().squaredNorm();
  }
  last_norm_ = std::sqrt(sq);
  if (!std::isfinite(last_norm_)) throw NumericError("non-finite gradient norm");
  const bool clipped = options_.clip_norm > 0.0 && last_norm_ > options_.clip_norm;
  const S grad_scale = clipped ? static_cast<S>(options_.clip_norm / last_norm_) : S(1);
  if (clipped) spdlog::debug("gradient norm {:.4g} clipped to {:.4g}", last_norm_, options_.clip_norm);

  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const S lr_t = static_cast<S>(options_.learning_rate * std::sqrt(1.0 - std::pow(b2, static_cast<double>(t_))) /
                                (1.0 - std::pow(b1, static_cast<double>(t_))));
  const S eps_t = static_cast<S>(options_.epsilon * std::sqrt(1.0 - std::pow(b2, static_cast<double>(t_))));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    Matrix<S>& m = m_[i];
    Matrix<S>& v = v_[i];
    if (p.tensor.has_grad()) {
      const Matrix<S> g = p.tensor.grad() * grad_scale;
      m = static_cast<S>(b1) * m + static_cast<S>(1.0 - b1) * g;
      v = static_cast<S>(b2) * v + static_cast<S>(1.0 - b2) * g.cwiseProduct(g);
    } else {
      m *= static_cast<S>(b1);
      v *= static_cast<S>(b2);
    }
    if (options_.learning_rate == 0.0) continue;
    Matrix<S> update = lr_t * (m.array() / (v.array().sqrt() + eps_t)).matrix();
    if (p.frozen_padding_row) update.row(0).setZero();
    p.tensor.mutable_value() -= update;
  }
  return clipped;
}

template class Adam<float>;
template class Adam<double>;

}  // namespace nnr
