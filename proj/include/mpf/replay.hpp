#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mpf/common.hpp"
#include "mpf/tensor.hpp"

namespace mpf::sac {

struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> sp;
  std::vector<double> c;
  bool done = false;
};

// FIFO ring buffer with uniform sampling over occupied slots. Storage grows on
// demand up to capacity, then wraps.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim,
               std::size_t context_dim);

  void push(std::span<const double> s, std::span<const double> a, double r,
            std::span<const double> sp, std::span<const double> c, bool done);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  // i-th oldest transition still present (0 = oldest).
  Transition get(std::size_t i) const;

  struct Batch {
    ad::Tensor s;         // [n, obs]
    ad::Tensor a;         // [n, act]
    ad::Tensor r;         // [n, 1]
    ad::Tensor sp;        // [n, obs]
    ad::Tensor c;         // [n, ctx]
    ad::Tensor not_done;  // [n, 1], 1 - done mask
    std::size_t n = 0;
  };
  // Uniform sample with replacement from occupied slots.
  Batch sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t slot_of(std::size_t logical) const;

  std::size_t capacity_, obs_dim_, action_dim_, context_dim_;
  std::size_t size_ = 0;
  std::size_t write_ = 0;  // next slot to overwrite once full
  std::vector<double> s_, a_, sp_, c_, r_;
  std::vector<std::uint8_t> done_;
};

}  // namespace mpf::sac
