#include "mpf/tensor.hpp"

#include <cmath>

namespace mpf::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (numel(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not match data length " +
                     std::to_string(data.size()));
  }
}

Tensor Tensor::zeros(Shape s) {
  std::size_t n = numel(s);
  return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape s, double v) {
  std::size_t n = numel(s);
  return Tensor(std::move(s), std::vector<double>(n, v));
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

Tensor Tensor::row(std::vector<double> d) {
  Shape s{d.size()};
  return Tensor(std::move(s), std::move(d));
}

Tensor Tensor::matrix(std::size_t r, std::size_t c, std::vector<double> d) {
  return Tensor(Shape{r, c}, std::move(d));
}

double Tensor::value() const {
  if (data.size() != 1) {
    throw ShapeError("tensor: value() on non-scalar shape " + shape_str(shape));
  }
  return data[0];
}

std::size_t Tensor::rows() const {
  if (shape.size() <= 1) return 1;
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (shape.empty()) return 1;
  return shape.back();
}

bool all_finite(const Tensor& t) {
  // NaN/Inf propagate through the sum, so one isfinite test covers the tensor.
  double acc = 0.0;
  for (double v : t.data) acc += v;
  return std::isfinite(acc);
}

void check_finite(const Tensor& t, std::string_view what) {
  if (!all_finite(t)) {
    throw NumericError("non-finite values in " + std::string(what) + " shape " +
                       shape_str(t.shape));
  }
}

}  // namespace mpf::ad
