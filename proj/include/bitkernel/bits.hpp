#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bitkernel {

inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for(std::size_t bits) noexcept {
  return (bits + kWordBits - 1) / kWordBits;
}

// Row-packed boolean matrix. Bits are little-endian within each 64-bit word;
// padding bits past `cols` are always zero.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows),
        cols_(cols),
        stride_(words_for(cols)),
        words_(rows * stride_, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t stride() const noexcept { return stride_; }

  bool get(std::size_t r, std::size_t c) const noexcept {
    return (words_[r * stride_ + c / kWordBits] >> (c % kWordBits)) & 1U;
  }
  void set(std::size_t r, std::size_t c, bool value) noexcept {
    std::uint64_t& w = words_[r * stride_ + c / kWordBits];
    const std::uint64_t mask = std::uint64_t{1} << (c % kWordBits);
    w = value ? (w | mask) : (w & ~mask);
  }

  std::span<const std::uint64_t> row(std::size_t r) const noexcept {
    return {words_.data() + r * stride_, stride_};
  }
  std::span<std::uint64_t> row(std::size_t r) noexcept {
    return {words_.data() + r * stride_, stride_};
  }

  std::size_t row_count(std::size_t r) const noexcept {
    std::size_t n = 0;
    for (std::uint64_t w : row(r)) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool operator==(const BitMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint64_t> words_;
};

// Number of positions set in both rows.
inline std::size_t and_count(std::span<const std::uint64_t> a,
                             std::span<const std::uint64_t> b) noexcept {
  std::size_t n = 0;
  for (std::size_t w = 0; w < a.size(); ++w) {
    n += static_cast<std::size_t>(std::popcount(a[w] & b[w]));
  }
  return n;
}

// Number of positions set in all three rows.
inline std::size_t and_count(std::span<const std::uint64_t> a,
                             std::span<const std::uint64_t> b,
                             std::span<const std::uint64_t> c) noexcept {
  std::size_t n = 0;
  for (std::size_t w = 0; w < a.size(); ++w) {
    n += static_cast<std::size_t>(std::popcount(a[w] & b[w] & c[w]));
  }
  return n;
}

inline std::size_t xor_count(std::span<const std::uint64_t> a,
                             std::span<const std::uint64_t> b) noexcept {
  std::size_t n = 0;
  for (std::size_t w = 0; w < a.size(); ++w) {
    n += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
  }
  return n;
}

}  // namespace bitkernel
