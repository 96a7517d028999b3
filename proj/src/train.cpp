#include "bitkernel/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bitkernel/detail/arith.hpp"
#include "bitkernel/errors.hpp"
#include "bitkernel/kernel.hpp"

namespace bitkernel::train {
namespace {

using net::BatchPass;
using net::ForwardMode;
using net::GateMode;
using net::InputBatch;
using net::NetworkState;

void check_shapes(const Matrix& x, std::span<const double> y, const NetworkState& net) {
  if (x.rows() != y.size()) {
    throw DimensionError("inputs have " + std::to_string(x.rows()) + " rows but " +
                         std::to_string(y.size()) + " targets");
  }
  if (x.cols() != net.input_dim()) {
    throw DimensionError("input dimension " + std::to_string(x.cols()) +
                         " does not match network dimension " +
                         std::to_string(net.input_dim()));
  }
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

void apply_step(NetworkState& net, const Matrix& grad, double eta) {
  auto w = net.weights.data();
  const auto g = grad.data();
  for (std::size_t k = 0; k < w.size(); ++k) w[k] -= eta * g[k];
}

std::size_t flipped_gates(const BatchPass& now, const BatchPass& init) {
  std::size_t count = 0;
  for (std::size_t k = 0; k < now.gates.size(); ++k) count += now.gates[k] != init.gates[k];
  return count;
}

void check_divergence(std::size_t step, double l1, double lf) {
  for (double l : {l1, lf}) {
    if (!(l <= kDivergenceLimit)) throw DivergenceError(step, l);
  }
}

}  // namespace

void validate(const Hyperparams& hp) {
  if (hp.eta && !(*hp.eta >= 0.0 && std::isfinite(*hp.eta))) {
    throw ConfigError("eta", "learning rate must be finite and non-negative");
  }
  if (hp.steps < 1) throw ConfigError("steps", "must be at least 1");
  if (!(hp.kappa > 0.0 && hp.kappa <= 1.0)) {
    throw ConfigError("kappa", "must lie in (0, 1], got " + std::to_string(hp.kappa));
  }
  if (!(hp.sigma > 0.0 && std::isfinite(hp.sigma))) {
    throw ConfigError("sigma", "must be a positive finite value");
  }
}

double TrainTrajectory::min_loss_1bit() const noexcept {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& r : records) out = std::min(out, r.loss_1bit);
  return out;
}

double TrainTrajectory::min_loss_fp() const noexcept {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& r : records) out = std::min(out, r.loss_fp);
  return out;
}

double loss(std::span<const double> f, std::span<const double> y) {
  if (f.size() != y.size()) {
    throw DimensionError("loss: prediction and target lengths differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = f[i] - y[i];
    acc += r * r;
  }
  return 0.5 * acc;
}

Matrix gradient_from_pass(const InputBatch& batch, std::span<const double> y,
                          const NetworkState& net, const BatchPass& pass) {
  check_shapes(batch.inputs(), y, net);
  const std::size_t n = batch.size();
  const std::size_t m = net.width();
  const std::size_t d = net.input_dim();
  Matrix grad(m, d);
  auto g = grad.data();

  // Σ_i ρ_i·x_i over the samples that open each gate, then the per-neuron
  // factor κ·a_r/√m.
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = pass.outputs[i] - y[i];
    const auto x = batch.row(i);
    const std::uint8_t* gate = pass.gates.data() + i * m;
    for (std::size_t r = 0; r < m; ++r) {
      const double s = rho * static_cast<double>(gate[r]);
      double* gr = g.data() + r * d;
      for (std::size_t k = 0; k < d; ++k) gr[k] += s * x[k];
    }
  }
  const double coef = net.kappa * detail::inv_sqrt_width(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double f = net.output_signs[r] > 0 ? coef : -coef;
    double* gr = g.data() + r * d;
    for (std::size_t k = 0; k < d; ++k) gr[k] *= f;
  }
  return grad;
}

Matrix ste_gradient(const Matrix& x, std::span<const double> y, const NetworkState& net) {
  check_shapes(x, y, net);
  const InputBatch batch(x);
  return gradient_from_pass(batch, y, net, net::evaluate(batch, net, ForwardMode::one_bit));
}

Matrix fp_gradient(const Matrix& x, std::span<const double> y, const NetworkState& net) {
  check_shapes(x, y, net);
  const InputBatch batch(x);
  return gradient_from_pass(batch, y, net,
                            net::evaluate(batch, net, ForwardMode::full_precision));
}

double learning_rate(const InputBatch& batch, const NetworkState& init,
                     std::optional<double> user, bool kernel_probing, bool cap_user) {
  if (user && !cap_user) return *user;
  double cap = 0.1;
  if (kernel_probing) {
    const auto h0 = kernel::gram_matrix(batch, init, GateMode::one_bit);
    const double lmax = kernel::min_max_eigenvalues(h0).max;
    if (lmax > 0.0) cap = 1.0 / lmax;
  }
  return user ? std::min(*user, cap) : cap;
}

FlipPartition::FlipPartition(BitMatrix flipped) : flipped_(std::move(flipped)) {}

FlipPartition::FlipPartition(std::size_t m,
                             const std::vector<std::vector<std::size_t>>& stable,
                             const std::vector<std::vector<std::size_t>>& flipped)
    : flipped_(stable.size(), m) {
  if (stable.size() != flipped.size()) {
    throw InvalidInputError("partition needs the same number of stable and flipped sets");
  }
  std::vector<std::uint8_t> seen(m);
  for (std::size_t i = 0; i < stable.size(); ++i) {
    std::fill(seen.begin(), seen.end(), 0);
    auto mark = [&](std::size_t r, bool is_flipped) {
      if (r >= m) {
        throw InvalidInputError("neuron index " + std::to_string(r) + " out of range");
      }
      if (seen[r]) {
        throw InvalidInputError("neuron " + std::to_string(r) + " appears twice in sample " +
                                std::to_string(i));
      }
      seen[r] = 1;
      if (is_flipped) flipped_.set(i, r, true);
    };
    for (std::size_t r : stable[i]) mark(r, false);
    for (std::size_t r : flipped[i]) mark(r, true);
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw InvalidInputError("sets of sample " + std::to_string(i) + " do not cover [m]");
    }
  }
}

Decomposition loss_decomposition(const NetworkState& state_t, const NetworkState& state_t1,
                                 const Matrix& x, std::span<const double> y,
                                 const FlipPartition& partition) {
  check_shapes(x, y, state_t);
  check_shapes(x, y, state_t1);
  const std::size_t n = x.rows();
  const std::size_t m = state_t.width();
  const std::size_t d = state_t.input_dim();
  if (state_t1.width() != m || state_t.output_signs != state_t1.output_signs) {
    throw DimensionError("decomposition states must share width and output layer");
  }
  if (partition.samples() != n || partition.width() != m) {
    throw DimensionError("flip partition shape does not match (samples, width)");
  }

  const InputBatch batch(x);
  const BatchPass pass_t = net::evaluate(batch, state_t, ForwardMode::one_bit);
  const BatchPass pass_t1 = net::evaluate(batch, state_t1, ForwardMode::one_bit);

  Matrix u_t(m, d);
  Matrix u_t1(m, d);
  for (std::size_t r = 0; r < m; ++r) {
    const auto a = binq::quant_error_vector(state_t.neuron(r));
    const auto b = binq::quant_error_vector(state_t1.neuron(r));
    std::copy(a.begin(), a.end(), u_t.row(r).begin());
    std::copy(b.begin(), b.end(), u_t1.row(r).begin());
  }

  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  double c4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    double stable = 0.0;
    double flipped = 0.0;
    double quant = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      const bool g0 = pass_t.gate(i, r);
      const bool g1 = pass_t1.gate(i, r);
      const double v0 = g0 ? detail::dot(state_t.neuron(r), xi) : 0.0;
      const double v1 = g1 ? detail::dot(state_t1.neuron(r), xi) : 0.0;
      const double q0 = g0 ? detail::dot(u_t.row(r), xi) : 0.0;
      const double q1 = g1 ? detail::dot(u_t1.row(r), xi) : 0.0;
      const int a = state_t.output_signs[r];
      if (partition.flipped(i, r)) {
        flipped = detail::add_signed(flipped, a, v0 - v1);
      } else {
        stable = detail::add_signed(stable, a, v0 - v1);
      }
      quant = detail::add_signed(quant, a, q0 - q1);
    }
    const double rho = pass_t.outputs[i] - y[i];
    s1 += stable * rho;
    s2 += flipped * rho;
    s3 += quant * rho;
    const double delta = pass_t.outputs[i] - pass_t1.outputs[i];
    c4 += delta * delta;
  }
  const double coef = -state_t.kappa * detail::inv_sqrt_width(m);
  return {coef * s1, coef * s2, coef * s3, 0.5 * c4};
}

double weight_drift(const NetworkState& state_0, const NetworkState& state_t) {
  if (state_0.width() != state_t.width() || state_0.input_dim() != state_t.input_dim()) {
    throw DimensionError("weight_drift: states differ in shape");
  }
  double out = 0.0;
  for (std::size_t r = 0; r < state_0.width(); ++r) {
    const auto a = state_0.neuron(r);
    const auto b = state_t.neuron(r);
    double sq = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double diff = b[k] - a[k];
      sq += diff * diff;
    }
    out = std::max(out, std::sqrt(sq));
  }
  return out;
}

TrainTrajectory train_twin(const data::Dataset& train, const data::Dataset& test,
                           std::size_t width, const Hyperparams& hp,
                           const Diagnostics& diagnostics) {
  validate(hp);
  return train_twin(train, test,
                    net::init_network(train.dim(), width, hp.kappa, hp.seed, hp.sigma), hp,
                    diagnostics);
}

TrainTrajectory train_twin(const data::Dataset& train, const data::Dataset& test,
                           const NetworkState& initial, const Hyperparams& hp,
                           const Diagnostics& diagnostics) {
  validate(hp);
  net::validate(initial);
  check_shapes(train.x, train.y, initial);
  const bool has_test = test.size() > 0;
  if (has_test) check_shapes(test.x, test.y, initial);

  const InputBatch batch(train.x);
  const InputBatch test_batch(test.x);
  const std::size_t n = batch.size();
  const std::size_t m = initial.width();
  const std::size_t steps = hp.steps;

  TrainTrajectory out;
  out.initial = initial;
  out.probe_stride =
      diagnostics.probe_stride > 0 ? diagnostics.probe_stride : std::max<std::size_t>(1, steps / 100);
  out.eta = learning_rate(batch, initial, hp.eta, diagnostics.kernel_probes, hp.cap_eta);
  out.records.reserve(steps + 1);

  NetworkState one_bit = initial;
  NetworkState full = initial;
  BatchPass pass_1 = net::evaluate(batch, one_bit, ForwardMode::one_bit);
  const BatchPass pass_init = pass_1;

  kernel::GramMatrix h0;
  double h0_norm = 0.0;
  if (diagnostics.kernel_probes) {
    h0 = kernel::gram_from_pattern(
        batch.inputs(), net::pattern_from_pass(pass_init, GateMode::one_bit, 0), initial.kappa);
    h0_norm = kernel::frobenius_norm(h0.entries);
  }

  for (std::size_t t = 0;; ++t) {
    const BatchPass pass_f = net::evaluate(batch, full, ForwardMode::full_precision);

    StepRecord rec;
    rec.step = t;
    rec.loss_1bit = loss(pass_1.outputs, train.y);
    rec.loss_fp = loss(pass_f.outputs, train.y);
    check_divergence(t, rec.loss_1bit, rec.loss_fp);
    rec.weight_drift = weight_drift(initial, one_bit);
    rec.weight_drift_fp = weight_drift(initial, full);
    rec.flip_fraction = n == 0 ? 0.0
                               : static_cast<double>(flipped_gates(pass_1, pass_init)) /
                                     (static_cast<double>(n) * static_cast<double>(m));
    rec.max_train_diff = max_abs_diff(pass_1.outputs, pass_f.outputs);
    if (has_test) {
      const auto t1 = net::batch_forward(test_batch, one_bit, ForwardMode::one_bit);
      const auto tf = net::batch_forward(test_batch, full, ForwardMode::full_precision);
      rec.test_loss_1bit = loss(t1, test.y);
      rec.test_loss_fp = loss(tf, test.y);
      rec.max_test_diff = max_abs_diff(t1, tf);
    }
    if (diagnostics.kernel_probes && (t % out.probe_stride == 0 || t == steps)) {
      const auto ht = kernel::gram_from_pattern(
          batch.inputs(), net::pattern_from_pass(pass_1, GateMode::one_bit, t), one_bit.kappa);
      const auto range = kernel::min_max_eigenvalues(ht);
      KernelProbe probe;
      probe.lambda_min = range.min;
      probe.lambda_max = range.max;
      probe.gram_drift = kernel::gram_drift(ht, h0);
      probe.relative_drift = h0_norm > 0.0 ? probe.gram_drift / h0_norm : 0.0;
      rec.kernel = probe;
    }
    out.records.push_back(std::move(rec));
    if (t == steps) break;

    const Matrix grad_1 = gradient_from_pass(batch, train.y, one_bit, pass_1);
    const Matrix grad_f = gradient_from_pass(batch, train.y, full, pass_f);

    if (diagnostics.decomposition) {
      const NetworkState before = one_bit;
      apply_step(one_bit, grad_1, out.eta);
      BitMatrix flips(n, m);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < m; ++r) {
          if (pass_1.gate(i, r) != pass_init.gate(i, r)) flips.set(i, r, true);
        }
      }
      const Decomposition dec = loss_decomposition(before, one_bit, batch.inputs(), train.y,
                                                   FlipPartition(std::move(flips)));
      pass_1 = net::evaluate(batch, one_bit, ForwardMode::one_bit);
      auto& last = out.records.back();
      last.decomposition = dec;
      last.decomposition_residual =
          loss(pass_1.outputs, train.y) - last.loss_1bit - dec.sum();
    } else {
      apply_step(one_bit, grad_1, out.eta);
      pass_1 = net::evaluate(batch, one_bit, ForwardMode::one_bit);
    }
    apply_step(full, grad_f, out.eta);
  }

  out.final_1bit = std::move(one_bit);
  out.final_fp = std::move(full);
  return out;
}

}  // namespace bitkernel::train
