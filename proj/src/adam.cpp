#include "mpf/adam.hpp"

#include <cmath>

namespace mpf::ad {

AdamState::AdamState(const Params& params, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.push_back(Tensor::zeros(params.value(i).shape));
    v_.push_back(Tensor::zeros(params.value(i).shape));
  }
}

void AdamState::step(Params& params, const std::vector<Tensor>& grads) {
  if (grads.size() != m_.size() || params.size() != m_.size()) {
    throw ShapeError("adam: expected " + std::to_string(m_.size()) + " gradients, got " +
                     std::to_string(grads.size()));
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!same_shape(grads[i].shape, m_[i].shape)) {
      throw ShapeError("adam: gradient shape " + shape_str(grads[i].shape) +
                       " does not match parameter " + params.name(i) + " shape " +
                       shape_str(m_[i].shape));
    }
    if (!all_finite(grads[i])) {
      throw NumericError("adam: non-finite gradient for parameter " + params.name(i));
    }
  }

  t_ += 1;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    double* p = params.value(i).data.data();
    double* m = m_[i].data.data();
    double* v = v_[i].data.data();
    const double* g = grads[i].data.data();
    const std::size_t n = m_[i].data.size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace mpf::ad
