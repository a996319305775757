#include "mpf/replay.hpp"

#include <cmath>
#include <cstring>

namespace mpf::sac {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim,
                           std::size_t context_dim)
    : capacity_(capacity), obs_dim_(obs_dim), action_dim_(action_dim),
      context_dim_(context_dim) {
  if (capacity == 0) throw ConfigError("replay buffer: capacity must be positive");
}

void ReplayBuffer::push(std::span<const double> s, std::span<const double> a, double r,
                        std::span<const double> sp, std::span<const double> c, bool done) {
  if (s.size() != obs_dim_ || sp.size() != obs_dim_ || a.size() != action_dim_ ||
      c.size() != context_dim_) {
    throw ShapeError("replay buffer: transition dims do not match buffer layout");
  }
  if (!std::isfinite(r)) throw NumericError("replay buffer: non-finite reward");

  if (size_ < capacity_) {
    s_.insert(s_.end(), s.begin(), s.end());
    a_.insert(a_.end(), a.begin(), a.end());
    sp_.insert(sp_.end(), sp.begin(), sp.end());
    c_.insert(c_.end(), c.begin(), c.end());
    r_.push_back(r);
    done_.push_back(done ? 1 : 0);
    size_ += 1;
    return;
  }
  // Full: overwrite the oldest slot.
  std::memcpy(s_.data() + write_ * obs_dim_, s.data(), obs_dim_ * sizeof(double));
  std::memcpy(a_.data() + write_ * action_dim_, a.data(), action_dim_ * sizeof(double));
  std::memcpy(sp_.data() + write_ * obs_dim_, sp.data(), obs_dim_ * sizeof(double));
  std::memcpy(c_.data() + write_ * context_dim_, c.data(), context_dim_ * sizeof(double));
  r_[write_] = r;
  done_[write_] = done ? 1 : 0;
  write_ = (write_ + 1) % capacity_;
}

std::size_t ReplayBuffer::slot_of(std::size_t logical) const {
  if (logical >= size_) throw ConfigError("replay buffer: index out of range");
  if (size_ < capacity_) return logical;
  return (write_ + logical) % capacity_;
}

Transition ReplayBuffer::get(std::size_t i) const {
  const std::size_t k = slot_of(i);
  Transition t;
  t.s.assign(s_.begin() + k * obs_dim_, s_.begin() + (k + 1) * obs_dim_);
  t.a.assign(a_.begin() + k * action_dim_, a_.begin() + (k + 1) * action_dim_);
  t.sp.assign(sp_.begin() + k * obs_dim_, sp_.begin() + (k + 1) * obs_dim_);
  t.c.assign(c_.begin() + k * context_dim_, c_.begin() + (k + 1) * context_dim_);
  t.r = r_[k];
  t.done = done_[k] != 0;
  return t;
}

ReplayBuffer::Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (size_ == 0) throw ConfigError("replay buffer: sample() on empty buffer");
  Batch b;
  b.n = n;
  b.s = ad::Tensor::zeros({n, obs_dim_});
  b.a = ad::Tensor::zeros({n, action_dim_});
  b.sp = ad::Tensor::zeros({n, obs_dim_});
  b.c = ad::Tensor::zeros({n, context_dim_});
  b.r = ad::Tensor::zeros({n, 1});
  b.not_done = ad::Tensor::zeros({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = rng.index(size_);
    std::memcpy(b.s.data.data() + i * obs_dim_, s_.data() + k * obs_dim_,
                obs_dim_ * sizeof(double));
    std::memcpy(b.a.data.data() + i * action_dim_, a_.data() + k * action_dim_,
                action_dim_ * sizeof(double));
    std::memcpy(b.sp.data.data() + i * obs_dim_, sp_.data() + k * obs_dim_,
                obs_dim_ * sizeof(double));
    std::memcpy(b.c.data.data() + i * context_dim_, c_.data() + k * context_dim_,
                context_dim_ * sizeof(double));
    b.r.data[i] = r_[k];
    b.not_done.data[i] = done_[k] != 0 ? 0.0 : 1.0;
  }
  return b;
}

}  // namespace mpf::sac
