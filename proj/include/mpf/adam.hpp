#pragma once

#include <cstdint>
#include <vector>

#include "mpf/params.hpp"
#include "mpf/tensor.hpp"

namespace mpf::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction over one parameter bundle. First and
// second moments mirror the parameter shapes; t increases by one per step.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const Params& params, AdamConfig cfg);

  // Applies one update in place. Throws NumericError (before mutating
  // anything) if a gradient is non-finite, ShapeError on mismatch.
  void step(Params& params, const std::vector<Tensor>& grads);

  std::int64_t t() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

}  // namespace mpf::ad
