#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bitkernel/binq.hpp"
#include "bitkernel/errors.hpp"

using namespace bitkernel;
using namespace bitkernel::binq;

namespace {

// Reference statistics computed the long way.
struct RefStats {
  double mean;
  double scale;
  std::vector<int> signs;
};

RefStats reference_quantize(const std::vector<double>& w) {
  long double s = 0;
  for (double v : w) s += v;
  const long double mean = s / w.size();
  long double ss = 0;
  for (double v : w) ss += (v - mean) * (v - mean);
  RefStats r{static_cast<double>(mean), static_cast<double>(std::sqrt(ss / w.size())), {}};
  for (double v : w) r.signs.push_back(v - static_cast<double>(mean) >= 0 ? 1 : -1);
  return r;
}

double naive_dot(const std::vector<int>& s, const std::vector<double>& x) {
  double acc = 0;
  for (std::size_t k = 0; k < s.size(); ++k) acc += static_cast<double>(s[k]) * x[k];
  return acc;
}

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t d, double spread = 1.0) {
  std::normal_distribution<double> normal(0.0, spread);
  std::vector<double> v(d);
  for (double& x : v) x = normal(gen);
  return v;
}

}  // namespace

TEST(Quantize, SymmetricExample) {
  const std::vector<double> w = {3, 1, -1, -3};
  const auto q = quantize(w);
  EXPECT_EQ(q.stats.mean, 0.0);
  EXPECT_NEAR(q.stats.scale, std::sqrt(5.0), 1e-15);
  EXPECT_EQ(q.bits.unpack(), (std::vector<int>{1, 1, -1, -1}));
  EXPECT_EQ(q.dim(), 4u);
}

TEST(Quantize, TieMapsToPlusOne) {
  const std::vector<double> w = {2, 4, 6};
  const auto q = quantize(w);
  EXPECT_EQ(q.stats.mean, 4.0);
  EXPECT_NEAR(q.stats.scale, std::sqrt(8.0 / 3.0), 1e-15);
  EXPECT_NEAR(q.stats.scale, 1.63299, 1e-5);
  EXPECT_EQ(q.bits.unpack(), (std::vector<int>{-1, 1, 1}));
}

TEST(Quantize, ConstantVector) {
  for (double c : {0.0, 0.1, -7.25, 1e300}) {
    const std::vector<double> w(13, c);
    const auto q = quantize(w);
    EXPECT_EQ(q.stats.mean, c);
    EXPECT_EQ(q.stats.scale, 0.0);
    EXPECT_EQ(q.bits.unpack(), std::vector<int>(13, 1));
  }
}

TEST(Quantize, RejectsBadInput) {
  EXPECT_THROW(quantize(std::vector<double>{}), InvalidInputError);
  EXPECT_THROW(quantize(std::vector<double>{1.0, NAN}), InvalidInputError);
  EXPECT_THROW(quantize(std::vector<double>{INFINITY, 1.0}), InvalidInputError);
}

TEST(Quantize, MatchesReferenceStatistics) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + trial % 130;
    const auto w = random_vector(gen, d, 3.0);
    const auto ref = reference_quantize(w);
    const auto q = quantize(w);
    EXPECT_NEAR(q.stats.mean, ref.mean, 1e-14 * (1 + std::abs(ref.mean)));
    EXPECT_NEAR(q.stats.scale, ref.scale, 1e-13 * (1 + ref.scale));
    if (d > 1) {
      EXPECT_EQ(q.bits.unpack(), ref.signs);
    }
  }
}

TEST(Quantize, ScaleInvarianceOfBits) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = random_vector(gen, 2 + trial % 70);
    for (double c : {0.5, 2.0, 64.0}) {
      std::vector<double> cw(w);
      for (double& v : cw) v *= c;
      EXPECT_EQ(quantize(cw).bits, quantize(w).bits);
    }
  }
}

TEST(Quantize, SignAntisymmetryOffTies) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto w = random_vector(gen, 1 + trial % 90);
    const double mean = quantize(w).stats.mean;
    for (double& v : w) v -= mean;
    const auto centred = quantize(w);
    bool tie = false;
    for (double v : w) tie |= (v - centred.stats.mean) == 0.0;
    if (tie || centred.stats.scale == 0.0) continue;
    std::vector<double> neg(w);
    for (double& v : neg) v = -v;
    EXPECT_EQ(quantize(neg).bits, centred.bits.negated());
  }
}

TEST(BinaryVector, PackUnpackRoundTrip) {
  std::mt19937_64 gen(9);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t d : {1u, 63u, 64u, 65u, 127u, 128u, 200u}) {
    std::vector<int> s(d);
    for (int& v : s) v = coin(gen) ? 1 : -1;
    const auto b = BinaryVector::pack(s);
    EXPECT_EQ(b.unpack(), s);
    EXPECT_EQ(b.size(), d);
    // Padding bits stay clear.
    const auto words = b.words();
    if (d % kWordBits) {
      EXPECT_EQ(words.back() >> (d % kWordBits), 0u);
    }
  }
  EXPECT_THROW(BinaryVector::pack(std::vector<int>{1, 0}), InvalidInputError);
}

TEST(BinaryDot, Examples) {
  const auto b = BinaryVector::pack(std::vector<int>{1, -1, 1});
  EXPECT_EQ(binary_dot(b, std::vector<double>{0.5, 0.25, -0.125}), 0.125);

  const std::vector<double> x = {0.3, -1.7, 2.2, 9.0};
  const auto ones = BinaryVector::pack(std::vector<int>(4, 1));
  EXPECT_EQ(binary_dot(ones, x), plain_sum(x));
}

TEST(BinaryDot, MatchesExpandedFloatDot) {
  std::mt19937_64 gen(21);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> s(64);
    for (int& v : s) v = coin(gen) ? 1 : -1;
    const auto x = random_vector(gen, 64);
    EXPECT_NEAR(binary_dot(BinaryVector::pack(s), x), naive_dot(s, x), 1e-12);
  }
}

TEST(BinaryDot, DimensionMismatch) {
  const auto b = BinaryVector::pack(std::vector<int>{1, 1});
  EXPECT_THROW(binary_dot(b, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(DequantizeDot, Examples) {
  const auto q = quantize(std::vector<double>{3, 1, -1, -3});
  EXPECT_NEAR(dequantize_dot(q, std::vector<double>{1, 0, 0, 0}), std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(dequantize_dot(q, std::vector<double>{1, 1, 1, 1}), 0.0, 1e-15);

  const std::vector<double> c(5, 1.75);
  const std::vector<double> x = {0.5, -0.25, 2, 1, -3};
  double ref = 0;
  for (double v : x) ref += 1.75 * v;
  EXPECT_NEAR(dequantize_dot(quantize(c), x), ref, 1e-15);
  EXPECT_THROW(dequantize_dot(q, std::vector<double>{1, 2}), DimensionError);
}

TEST(QuantErrorVector, Examples) {
  const auto u = quant_error_vector(std::vector<double>{3, 1, -1, -3});
  const double s5 = std::sqrt(5.0);
  const std::vector<double> ref = {s5 - 3, s5 - 1, 1 - s5, 3 - s5};
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(u[k], ref[k], 1e-15);
  EXPECT_NEAR(u[0], -0.76393, 1e-5);
  EXPECT_NEAR(u[1], 1.23607, 1e-5);

  for (double v : quant_error_vector(std::vector<double>(7, -2.5))) EXPECT_EQ(v, 0.0);
}

TEST(QuantErrorVector, ReconstructionIdentity) {
  std::mt19937_64 gen(33);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t d = 16;
    const auto w = random_vector(gen, d, 2.0);
    auto x = random_vector(gen, d);
    double norm = 0;
    for (double v : x) norm += v * v;
    for (double& v : x) v /= std::sqrt(norm);

    const auto u = quant_error_vector(w);
    double wx = 0, ux = 0, scale = 0;
    for (std::size_t k = 0; k < d; ++k) {
      wx += w[k] * x[k];
      ux += u[k] * x[k];
      scale += std::abs(w[k] * x[k]) + std::abs(u[k] * x[k]);
    }
    const double dq = dequantize_dot(quantize(w), x);
    EXPECT_LE(std::abs(dq - wx - ux), 1e-12 * std::max(1.0, scale));
  }
}

TEST(SignedSumTable, BitIdenticalToBinaryDot) {
  std::mt19937_64 gen(17);
  for (std::size_t d = 1; d <= SignedSumTable::kMaxDim; ++d) {
    const auto x = random_vector(gen, d);
    const SignedSumTable table(x);
    for (std::uint64_t p = 0; p < (std::uint64_t{1} << d); ++p) {
      BinaryVector b(d);
      for (std::size_t k = 0; k < d; ++k) b.set(k, (p >> k) & 1U);
      EXPECT_EQ(table[p], binary_dot(b, x));
    }
  }
  EXPECT_THROW(SignedSumTable(std::vector<double>(11, 1.0)), DimensionError);
}

TEST(QuantizedRows, AgreesWithPerVectorPath) {
  std::mt19937_64 gen(41);
  for (std::size_t d : {1u, 3u, 64u, 65u, 150u}) {
    Matrix w(20, d);
    for (double& v : w.data()) v = std::normal_distribution<double>()(gen);
    w(3, 0) = w(3, d - 1);  // exercise constant rows when d == 1
    const QuantizedRows rows(w);
    const auto x = random_vector(gen, d);
    const double sx = plain_sum(x);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const auto q = quantize(w.row(r));
      EXPECT_EQ(rows.mean(r), q.stats.mean);
      EXPECT_EQ(rows.scale(r), q.stats.scale);
      EXPECT_EQ(rows.dequantize_dot(r, x, sx), dequantize_dot(q, x));
    }
  }
}
