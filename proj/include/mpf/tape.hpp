#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "mpf/tensor.hpp"

namespace mpf::ad {

// Closed primitive set. Every entry has a local gradient rule in backward();
// there is no fallback path, so adding a kind means adding its rule.
enum class OpKind : std::uint8_t {
  kLeaf,      // differentiable input (parameter); no inputs
  kConst,     // interned constant; no inputs, no gradient
  kAffine,    // x·W + b
  kTanh,
  kExp,
  kLog,
  kNeg,
  kAdd,
  kSub,
  kMul,       // elementwise
  kScale,     // x * k, k a compile-time constant scalar
  kSquare,
  kSum,       // all elements -> scalar
  kMean,      // all elements -> scalar
  kRowSum,    // sum over last axis: [n,d] -> [n,1]
  kMinimum,   // elementwise min of two tensors
  kConcat,    // along last axis
  kSoftplus,
};

const char* op_name(OpKind k);

using GradMap = std::unordered_map<std::int64_t, Tensor>;

// Define-by-run tape. Holds the value of every recorded node so backward can
// apply local gradient rules; rebuilt for every forward pass.
class Tape {
 public:
  // Registers a differentiable leaf; returns a tracked copy of v.
  Tensor leaf(const Tensor& v);

  // Registers a non-differentiable constant; returns a tracked copy.
  Tensor constant(const Tensor& v);

  std::size_t num_nodes() const { return values_.size(); }
  std::size_t num_entries() const { return entries_.size(); }
  const Tensor& value(std::int64_t node) const { return values_[static_cast<std::size_t>(node)]; }
  const std::vector<std::int64_t>& leaves() const { return leaves_; }

  // Reverse pass from a scalar root. Returns gradients for every leaf
  // (zero tensors for leaves the root does not depend on).
  GradMap backward(const Tensor& root) const;

  void clear();

 private:
  friend Tensor record(Tape& t, OpKind kind, std::array<const Tensor*, 3> ins, Tensor out,
                       double k);

  struct Entry {
    OpKind kind;
    std::int64_t out;
    std::array<std::int64_t, 3> in{kNoNode, kNoNode, kNoNode};
    double k = 0.0;
  };

  std::int64_t intern(const Tensor& v, OpKind kind, bool needs_grad);

  std::vector<Tensor> values_;
  std::vector<std::uint8_t> needs_grad_;
  std::vector<Entry> entries_;
  std::vector<std::int64_t> leaves_;
};

// Primitive operations. Untracked operands are interned as constants; tracked
// operands must belong to `t`.
Tensor affine(Tape& t, const Tensor& x, const Tensor& w, const Tensor& b);
Tensor tanh_op(Tape& t, const Tensor& x);
Tensor exp_op(Tape& t, const Tensor& x);
Tensor log_op(Tape& t, const Tensor& x);
Tensor neg(Tape& t, const Tensor& x);
Tensor add(Tape& t, const Tensor& a, const Tensor& b);
Tensor sub(Tape& t, const Tensor& a, const Tensor& b);
Tensor mul(Tape& t, const Tensor& a, const Tensor& b);
Tensor scale(Tape& t, const Tensor& x, double k);
Tensor square(Tape& t, const Tensor& x);
Tensor sum(Tape& t, const Tensor& x);
Tensor mean(Tape& t, const Tensor& x);
Tensor row_sum(Tape& t, const Tensor& x);
Tensor minimum(Tape& t, const Tensor& a, const Tensor& b);
Tensor concat(Tape& t, const Tensor& a, const Tensor& b);
Tensor softplus(Tape& t, const Tensor& x);

// Composites built from the primitive set.
Tensor add_scalar(Tape& t, const Tensor& x, double c);    // x + c
Tensor clamp(Tape& t, const Tensor& x, double lo, double hi);

}  // namespace mpf::ad
