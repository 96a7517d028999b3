#include "bitkernel/net.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bitkernel/detail/arith.hpp"
#include "bitkernel/errors.hpp"

namespace bitkernel::net {
namespace {

void check_dim(std::size_t got, const NetworkState& net, const char* where) {
  if (got != net.input_dim()) {
    throw DimensionError(std::string(where) + ": input dimension " +
                         std::to_string(got) + " does not match network dimension " +
                         std::to_string(net.input_dim()));
  }
}

void check_kappa(double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw ConfigError("kappa", "must lie in (0, 1], got " + std::to_string(kappa));
  }
}

}  // namespace

const char* to_string(GateMode mode) noexcept {
  return mode == GateMode::one_bit ? "one_bit" : "full_precision";
}

const char* to_string(ForwardMode mode) noexcept {
  switch (mode) {
    case ForwardMode::one_bit: return "one_bit";
    case ForwardMode::full_precision: return "full_precision";
    case ForwardMode::ste: return "ste";
  }
  return "?";
}

NetworkState NetworkState::with_kappa(double k) const {
  NetworkState out(*this);
  out.kappa = k;
  return out;
}

NetworkState init_network(std::size_t d, std::size_t m, double kappa,
                          std::uint64_t seed, double sigma) {
  if (d == 0) throw ConfigError("d", "input dimension must be positive");
  if (m == 0) throw ConfigError("width", "width must be positive");
  check_kappa(kappa);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("sigma", "must be a positive finite value");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  std::bernoulli_distribution coin(0.5);

  NetworkState net;
  net.kappa = kappa;
  net.sigma = sigma;
  net.weights = Matrix(m, d);
  for (double& w : net.weights.data()) w = normal(rng);
  net.output_signs.resize(m);
  for (int& a : net.output_signs) a = coin(rng) ? 1 : -1;
  return net;
}

void validate(const NetworkState& net) {
  if (net.width() == 0 || net.input_dim() == 0) {
    throw InvalidInputError("network has an empty weight matrix");
  }
  if (net.output_signs.size() != net.width()) {
    throw DimensionError("output layer length does not match width");
  }
  for (int a : net.output_signs) {
    if (a != 1 && a != -1) throw InvalidInputError("output signs must be +1 or -1");
  }
  for (double w : net.weights.data()) {
    if (!std::isfinite(w)) throw InvalidInputError("non-finite hidden weight");
  }
  check_kappa(net.kappa);
}

double forward_1bit(std::span<const double> x, const NetworkState& net) {
  check_dim(x.size(), net, "forward_1bit");
  double acc = 0.0;
  for (std::size_t r = 0; r < net.width(); ++r) {
    const double dq = binq::dequantize_dot(binq::quantize(net.neuron(r)), x);
    acc = detail::add_signed(acc, net.output_signs[r], detail::relu(dq));
  }
  return detail::scale_output(acc, net.kappa, net.width());
}

double forward_fp(std::span<const double> x, const NetworkState& net) {
  check_dim(x.size(), net, "forward_fp");
  double acc = 0.0;
  for (std::size_t r = 0; r < net.width(); ++r) {
    const double pre = detail::dot(net.neuron(r), x);
    acc = detail::add_signed(acc, net.output_signs[r], detail::relu(pre));
  }
  return detail::scale_output(acc, net.kappa, net.width());
}

double forward_ste(std::span<const double> x, const NetworkState& net) {
  check_dim(x.size(), net, "forward_ste");
  double acc = 0.0;
  for (std::size_t r = 0; r < net.width(); ++r) {
    const double dq = binq::dequantize_dot(binq::quantize(net.neuron(r)), x);
    if (dq >= 0.0) {
      acc = detail::add_signed(acc, net.output_signs[r], detail::dot(net.neuron(r), x));
    }
  }
  return detail::scale_output(acc, net.kappa, net.width());
}

double forward(std::span<const double> x, const NetworkState& net, ForwardMode mode) {
  switch (mode) {
    case ForwardMode::one_bit: return forward_1bit(x, net);
    case ForwardMode::full_precision: return forward_fp(x, net);
    case ForwardMode::ste: return forward_ste(x, net);
  }
  return 0.0;
}

InputBatch::InputBatch(Matrix x) : x_(std::move(x)), sums_(x_.rows()) {
  for (std::size_t i = 0; i < x_.rows(); ++i) sums_[i] = binq::plain_sum(x_.row(i));
  if (x_.cols() >= 1 && x_.cols() <= binq::SignedSumTable::kMaxDim) {
    tables_.reserve(x_.rows());
    for (std::size_t i = 0; i < x_.rows(); ++i) tables_.emplace_back(x_.row(i));
  }
}

BatchPass evaluate(const InputBatch& batch, const NetworkState& net, ForwardMode mode) {
  check_dim(batch.dim(), net, "evaluate");
  const std::size_t n = batch.size();
  const std::size_t m = net.width();
  BatchPass pass;
  pass.width = m;
  pass.outputs.assign(n, 0.0);
  pass.gates.assign(n * m, 0);

  const bool quantized = mode != ForwardMode::full_precision;
  binq::QuantizedRows q;
  if (quantized) q = binq::QuantizedRows(net.weights);
  const int* a = net.output_signs.data();

  for (std::size_t i = 0; i < n; ++i) {
    const auto x = batch.row(i);
    std::uint8_t* g = pass.gates.data() + i * m;
    double acc = 0.0;
    if (mode == ForwardMode::full_precision) {
      for (std::size_t r = 0; r < m; ++r) {
        const double pre = detail::dot(net.neuron(r), x);
        g[r] = pre >= 0.0;
        acc = detail::add_signed(acc, a[r], detail::relu(pre));
      }
    } else {
      const double sx = batch.row_sum(i);
      const auto scales = q.scales();
      const auto means = q.means();
      for (std::size_t r = 0; r < m; ++r) {
        const double dq =
            batch.has_tables()
                ? scales[r] * batch.table(i)[q.bits(r)[0]] + means[r] * sx
                : q.dequantize_dot(r, x, sx);
        g[r] = dq >= 0.0;
        if (mode == ForwardMode::one_bit) {
          acc = detail::add_signed(acc, a[r], detail::relu(dq));
        } else if (g[r]) {
          acc = detail::add_signed(acc, a[r], detail::dot(net.neuron(r), x));
        }
      }
    }
    pass.outputs[i] = detail::scale_output(acc, net.kappa, m);
  }
  return pass;
}

std::vector<double> batch_forward(const InputBatch& batch, const NetworkState& net,
                                  ForwardMode mode) {
  return evaluate(batch, net, mode).outputs;
}

std::vector<double> batch_forward(const Matrix& x, const NetworkState& net,
                                  ForwardMode mode) {
  return batch_forward(InputBatch(x), net, mode);
}

ActivationPattern pattern_from_pass(const BatchPass& pass, GateMode mode,
                                    std::size_t step) {
  const std::size_t m = pass.width;
  const std::size_t n = m == 0 ? 0 : pass.gates.size() / m;
  ActivationPattern p{BitMatrix(n, m), step, mode};
  for (std::size_t i = 0; i < n; ++i) {
    auto row = p.indicators.row(i);
    const std::uint8_t* g = pass.gates.data() + i * m;
    for (std::size_t r = 0; r < m; ++r) {
      if (g[r]) row[r / kWordBits] |= std::uint64_t{1} << (r % kWordBits);
    }
  }
  return p;
}

ActivationPattern activation_pattern(const InputBatch& batch, const NetworkState& net,
                                     GateMode mode, std::size_t step) {
  const ForwardMode fm =
      mode == GateMode::one_bit ? ForwardMode::one_bit : ForwardMode::full_precision;
  return pattern_from_pass(evaluate(batch, net, fm), mode, step);
}

ActivationPattern activation_pattern(const Matrix& x, const NetworkState& net,
                                     GateMode mode, std::size_t step) {
  return activation_pattern(InputBatch(x), net, mode, step);
}

}  // namespace bitkernel::net
