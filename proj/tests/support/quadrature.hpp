#pragma once

// Composite Simpson quadrature for the numeric-integration oracles.

#include <cmath>
#include <functional>

namespace mpf::test {

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t intervals) {
  if (intervals % 2 == 1) intervals += 1;
  const double h = (b - a) / static_cast<double>(intervals);
  double acc = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i) {
    const double x = a + h * static_cast<double>(i);
    acc += f(x) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

inline double normal_pdf(double x, double mu, double sigma) {
  const double d = (x - mu) / sigma;
  return std::exp(-0.5 * d * d) / (sigma * std::sqrt(2.0 * M_PI));
}

}  // namespace mpf::test
