#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mpf/common.hpp"

namespace mpf::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);
bool same_shape(const Shape& a, const Shape& b);

inline constexpr std::int64_t kNoNode = -1;

// Dense float64 tensor in row-major order. `node` is the handle of the tape
// entry that produced it; kNoNode means the value is not being traced.
struct Tensor {
  Shape shape;
  std::vector<double> data;
  std::int64_t node = kNoNode;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> d);

  static Tensor zeros(Shape s);
  static Tensor full(Shape s, double v);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> d);              // shape [n]
  static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> d);

  bool tracked() const { return node != kNoNode; }
  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool is_scalar() const { return data.size() == 1; }

  // Scalar accessor; throws ShapeError if numel != 1.
  double value() const;

  // Number of rows / columns treating rank-1 tensors as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
};

// Throws NumericError naming `what` if any entry is NaN or infinite.
void check_finite(const Tensor& t, std::string_view what);
bool all_finite(const Tensor& t);

}  // namespace mpf::ad
