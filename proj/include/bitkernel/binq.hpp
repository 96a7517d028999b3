#pragma once

// Sign quantization of weight vectors and the addition-only inner products
// that run on the packed result.
//
// A vector w of length d is summarised by its mean E(w), its scale
// sqrt((1/d)·||w - E(w)·1||²) and the sign bits of w - E(w)·1 (ties map to +1).
// Dequantizing a binary inner product is the affine correction
//   scale·<bits, x> + mean·<1, x>,
// which equals <w, x> + <u(w), x> for the quantization error vector u(w).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bitkernel/bits.hpp"
#include "bitkernel/matrix.hpp"

namespace bitkernel::binq {

// Packed ±1 symbols: a set bit is +1, a clear bit is -1.
class BinaryVector {
 public:
  BinaryVector() = default;
  // All symbols -1.
  explicit BinaryVector(std::size_t length)
      : length_(length), words_(words_for(length), 0) {}

  static BinaryVector pack(std::span<const int> signs);

  std::size_t size() const noexcept { return length_; }
  bool positive(std::size_t k) const noexcept {
    return (words_[k / kWordBits] >> (k % kWordBits)) & 1U;
  }
  int symbol(std::size_t k) const noexcept { return positive(k) ? 1 : -1; }
  void set(std::size_t k, bool positive) noexcept;

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::vector<int> unpack() const;
  BinaryVector negated() const;

  bool operator==(const BinaryVector&) const = default;

 private:
  std::size_t length_ = 0;
  std::vector<std::uint64_t> words_;
};

struct QuantScale {
  double mean = 0.0;
  double scale = 0.0;

  bool operator==(const QuantScale&) const = default;
};

struct QuantizedVector {
  BinaryVector bits;
  QuantScale stats;

  std::size_t dim() const noexcept { return bits.size(); }
};

QuantizedVector quantize(std::span<const double> w);

// Σ_k s_k·x_k accumulated left to right with one add or subtract per entry.
double binary_dot(const BinaryVector& b, std::span<const double> x);

// scale·binary_dot(bits, x) + mean·Σx.
double dequantize_dot(const QuantizedVector& qv, std::span<const double> x);

// u(w) = scale·bits + mean·1 - w.
std::vector<double> quant_error_vector(std::span<const double> w);

// Left-to-right sum of x; the same reduction dequantize_dot uses.
double plain_sum(std::span<const double> x) noexcept;

// binary_dot results of one input x for every bit pattern, for d <= kMaxDim.
// Entry p equals binary_dot(b, x) bit-for-bit where b's single word is p.
class SignedSumTable {
 public:
  static constexpr std::size_t kMaxDim = 10;

  SignedSumTable() = default;
  explicit SignedSumTable(std::span<const double> x);

  double operator[](std::uint64_t pattern) const noexcept {
    return table_[static_cast<std::size_t>(pattern)];
  }
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> table_;
};

// Quantization of every row of a matrix, stored structure-of-arrays.
class QuantizedRows {
 public:
  QuantizedRows() = default;
  explicit QuantizedRows(const Matrix& rows);

  std::size_t size() const noexcept { return means_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t stride() const noexcept { return stride_; }

  std::span<const std::uint64_t> bits(std::size_t r) const noexcept {
    return {words_.data() + r * stride_, stride_};
  }
  double mean(std::size_t r) const noexcept { return means_[r]; }
  double scale(std::size_t r) const noexcept { return scales_[r]; }
  std::span<const double> means() const noexcept { return means_; }
  std::span<const double> scales() const noexcept { return scales_; }

  // Same arithmetic as dequantize_dot(quantize(rows.row(r)), x).
  double dequantize_dot(std::size_t r, std::span<const double> x,
                        double x_sum) const noexcept;

 private:
  std::size_t dim_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<double> means_;
  std::vector<double> scales_;
};

}  // namespace bitkernel::binq
