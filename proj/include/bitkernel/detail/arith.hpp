#pragma once

// Shared scalar steps of the forward passes. Scalar and batched code paths
// both go through these so their results agree bit-for-bit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace bitkernel::detail {

// Must stay branch-free: gates and output signs are unpredictable.
inline double relu(double z) noexcept { return std::max(z, 0.0); }

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

inline double add_signed(double acc, int sign, double v) noexcept {
  return acc + static_cast<double>(sign) * v;
}

inline double inv_sqrt_width(std::size_t m) noexcept {
  return 1.0 / std::sqrt(static_cast<double>(m));
}

// κ·((1/√m)·acc); linear in κ for a fixed accumulator.
inline double scale_output(double acc, double kappa, std::size_t m) noexcept {
  return kappa * (inv_sqrt_width(m) * acc);
}

}  // namespace bitkernel::detail
