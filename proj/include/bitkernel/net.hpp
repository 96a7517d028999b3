#pragma once

// Two-layer network with a frozen ±1 output layer, evaluated three ways:
//   one_bit         f(x)     = κ/√m Σ_r a_r ReLU(dq(<q(w_r), x>))
//   full_precision  f'(x)    = κ/√m Σ_r a_r ReLU(<w_r, x>)
//   ste             f_ste(x) = κ/√m Σ_r a_r 1{dq(<q(w_r), x>) >= 0} <w_r, x>
// A preactivation of exactly 0 counts as active.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bitkernel/binq.hpp"
#include "bitkernel/bits.hpp"
#include "bitkernel/matrix.hpp"

namespace bitkernel::net {

enum class GateMode { one_bit, full_precision };
enum class ForwardMode { one_bit, full_precision, ste };

const char* to_string(GateMode mode) noexcept;
const char* to_string(ForwardMode mode) noexcept;

struct NetworkState {
  // m × d, neuron-major: row r is the hidden weight vector w_r (column r of
  // the d × m weight matrix).
  Matrix weights;
  // Output layer a, each entry ±1; fixed after initialization.
  std::vector<int> output_signs;
  double kappa = 1.0;
  // Standard deviation used to draw the initial weights.
  double sigma = 1.0;

  std::size_t width() const noexcept { return weights.rows(); }
  std::size_t input_dim() const noexcept { return weights.cols(); }
  std::span<const double> neuron(std::size_t r) const noexcept {
    return weights.row(r);
  }

  // Same state with a different output scale.
  NetworkState with_kappa(double k) const;

  bool operator==(const NetworkState&) const = default;
};

// W entries i.i.d. N(0, sigma²), a entries i.i.d. uniform on {-1, +1}, both
// drawn from a single mt19937_64 seeded with `seed` (W first, then a).
NetworkState init_network(std::size_t d, std::size_t m, double kappa,
                          std::uint64_t seed, double sigma = 1.0);

// Throws InvalidInputError / ConfigError when the state breaks its invariants.
void validate(const NetworkState& net);

double forward_1bit(std::span<const double> x, const NetworkState& net);
double forward_fp(std::span<const double> x, const NetworkState& net);
double forward_ste(std::span<const double> x, const NetworkState& net);
double forward(std::span<const double> x, const NetworkState& net, ForwardMode mode);

// Gate indicators, one row per input and one bit per neuron.
struct ActivationPattern {
  BitMatrix indicators;
  std::size_t step = 0;
  GateMode mode = GateMode::one_bit;

  std::size_t samples() const noexcept { return indicators.rows(); }
  std::size_t width() const noexcept { return indicators.cols(); }
  bool active(std::size_t i, std::size_t r) const noexcept {
    return indicators.get(i, r);
  }
};

// Inputs plus the per-row data reused by every batched pass: row sums and,
// for small d, the signed-sum lookup tables.
class InputBatch {
 public:
  InputBatch() = default;
  explicit InputBatch(Matrix x);

  const Matrix& inputs() const noexcept { return x_; }
  std::size_t size() const noexcept { return x_.rows(); }
  std::size_t dim() const noexcept { return x_.cols(); }
  std::span<const double> row(std::size_t i) const noexcept { return x_.row(i); }
  double row_sum(std::size_t i) const noexcept { return sums_[i]; }
  bool has_tables() const noexcept { return !tables_.empty(); }
  const binq::SignedSumTable& table(std::size_t i) const noexcept {
    return tables_[i];
  }

 private:
  Matrix x_;
  std::vector<double> sums_;
  std::vector<binq::SignedSumTable> tables_;
};

// Outputs and gate bytes (row-major n × m) of one batched pass.
struct BatchPass {
  std::vector<double> outputs;
  std::vector<std::uint8_t> gates;
  std::size_t width = 0;

  bool gate(std::size_t i, std::size_t r) const noexcept {
    return gates[i * width + r] != 0;
  }
};

BatchPass evaluate(const InputBatch& batch, const NetworkState& net, ForwardMode mode);

std::vector<double> batch_forward(const Matrix& x, const NetworkState& net,
                                  ForwardMode mode);
std::vector<double> batch_forward(const InputBatch& batch, const NetworkState& net,
                                  ForwardMode mode);

ActivationPattern activation_pattern(const Matrix& x, const NetworkState& net,
                                     GateMode mode, std::size_t step = 0);
ActivationPattern activation_pattern(const InputBatch& batch, const NetworkState& net,
                                     GateMode mode, std::size_t step = 0);
ActivationPattern pattern_from_pass(const BatchPass& pass, GateMode mode,
                                    std::size_t step);

}  // namespace bitkernel::net
