#include "bitkernel/binq.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bitkernel::binq {
namespace {

void check_input(std::span<const double> w) {
  if (w.empty()) throw InvalidInputError("quantize: empty vector");
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!std::isfinite(w[k])) {
      throw InvalidInputError("quantize: non-finite entry at index " +
                              std::to_string(k));
    }
  }
}

// Writes sign bits into `words` (already zeroed) and returns the statistics.
QuantScale quantize_into(std::span<const double> w, std::uint64_t* words) {
  const std::size_t d = w.size();
  const bool constant =
      std::all_of(w.begin() + 1, w.end(), [&](double v) { return v == w[0]; });
  if (constant) {
    // Zero variance: the normalized vector is taken as 0, so every sign is +1
    // and the reconstruction is exact.
    for (std::size_t k = 0; k < d; ++k) {
      words[k / kWordBits] |= std::uint64_t{1} << (k % kWordBits);
    }
    return {w[0], 0.0};
  }
  const double mean = plain_sum(w) / static_cast<double>(d);
  double ss = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double c = w[k] - mean;
    ss += c * c;
    if (c >= 0.0) words[k / kWordBits] |= std::uint64_t{1} << (k % kWordBits);
  }
  return {mean, std::sqrt(ss / static_cast<double>(d))};
}

double signed_sum(const std::uint64_t* words, std::span<const double> x) noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const bool pos = (words[k / kWordBits] >> (k % kWordBits)) & 1U;
    acc = pos ? acc + x[k] : acc - x[k];
  }
  return acc;
}

}  // namespace

BinaryVector BinaryVector::pack(std::span<const int> signs) {
  BinaryVector b(signs.size());
  for (std::size_t k = 0; k < signs.size(); ++k) {
    if (signs[k] != 1 && signs[k] != -1) {
      throw InvalidInputError("BinaryVector::pack: symbols must be +1 or -1");
    }
    b.set(k, signs[k] == 1);
  }
  return b;
}

void BinaryVector::set(std::size_t k, bool positive) noexcept {
  std::uint64_t& w = words_[k / kWordBits];
  const std::uint64_t mask = std::uint64_t{1} << (k % kWordBits);
  w = positive ? (w | mask) : (w & ~mask);
}

std::vector<int> BinaryVector::unpack() const {
  std::vector<int> out(length_);
  for (std::size_t k = 0; k < length_; ++k) out[k] = symbol(k);
  return out;
}

BinaryVector BinaryVector::negated() const {
  BinaryVector out(*this);
  for (std::size_t k = 0; k < length_; ++k) out.set(k, !positive(k));
  return out;
}

double plain_sum(std::span<const double> x) noexcept {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

QuantizedVector quantize(std::span<const double> w) {
  check_input(w);
  QuantizedVector qv;
  qv.bits = BinaryVector(w.size());
  std::vector<std::uint64_t> words(words_for(w.size()), 0);
  qv.stats = quantize_into(w, words.data());
  for (std::size_t k = 0; k < w.size(); ++k) {
    qv.bits.set(k, (words[k / kWordBits] >> (k % kWordBits)) & 1U);
  }
  return qv;
}

double binary_dot(const BinaryVector& b, std::span<const double> x) {
  if (b.size() != x.size()) {
    throw DimensionError("binary_dot: length " + std::to_string(b.size()) +
                         " vs " + std::to_string(x.size()));
  }
  return signed_sum(b.words().data(), x);
}

double dequantize_dot(const QuantizedVector& qv, std::span<const double> x) {
  const double bd = binary_dot(qv.bits, x);
  return qv.stats.scale * bd + qv.stats.mean * plain_sum(x);
}

std::vector<double> quant_error_vector(std::span<const double> w) {
  const QuantizedVector qv = quantize(w);
  std::vector<double> u(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double s = qv.bits.positive(k) ? qv.stats.scale : -qv.stats.scale;
    u[k] = (s + qv.stats.mean) - w[k];
  }
  return u;
}

SignedSumTable::SignedSumTable(std::span<const double> x) : dim_(x.size()) {
  if (dim_ == 0 || dim_ > kMaxDim) {
    throw DimensionError("SignedSumTable: dimension must be in [1, " +
                         std::to_string(kMaxDim) + "]");
  }
  const std::size_t patterns = std::size_t{1} << dim_;
  table_.resize(patterns);
  for (std::size_t p = 0; p < patterns; ++p) {
    const std::uint64_t word = p;
    table_[p] = signed_sum(&word, x);
  }
}

QuantizedRows::QuantizedRows(const Matrix& rows)
    : dim_(rows.cols()),
      stride_(words_for(rows.cols())),
      words_(rows.rows() * stride_, 0),
      means_(rows.rows()),
      scales_(rows.rows()) {
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto w = rows.row(r);
    check_input(w);
    const QuantScale s = quantize_into(w, words_.data() + r * stride_);
    means_[r] = s.mean;
    scales_[r] = s.scale;
  }
}

double QuantizedRows::dequantize_dot(std::size_t r, std::span<const double> x,
                                     double x_sum) const noexcept {
  const double bd = signed_sum(words_.data() + r * stride_, x);
  return scales_[r] * bd + means_[r] * x_sum;
}

}  // namespace bitkernel::binq
