#include "bitkernel/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bitkernel/errors.hpp"

namespace bitkernel::theory {
namespace {

void require_positive(double v, const char* key) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(key, "must be positive and finite");
  }
}

}  // namespace

void validate(const TheoryParams& p) {
  require_positive(p.n, "n");
  require_positive(p.d, "d");
  require_positive(p.m, "m");
  if (!(p.delta > 0.0 && p.delta < 0.1)) {
    throw ConfigError("delta", "must lie in (0, 0.1), got " + std::to_string(p.delta));
  }
  require_positive(p.lambda, "lambda");
  require_positive(p.eta, "eta");
  if (!(p.kappa > 0.0 && p.kappa <= 1.0)) {
    throw ConfigError("kappa", "must lie in (0, 1], got " + std::to_string(p.kappa));
  }
  require_positive(p.epsilon, "epsilon");
  require_positive(p.big_o_constant, "big_o_constant");
  if (p.log_factor) require_positive(*p.log_factor, "log_factor");
}

double bound_D(const TheoryParams& p) {
  validate(p);
  if (p.log_factor) return *p.log_factor;
  const double l = std::log(p.m * p.d / p.delta);
  return std::max(p.big_o_constant * std::sqrt(std::max(l, 0.0)), 1.0);
}

std::vector<double> predicted_loss_curve(double l0, double eta, double lambda,
                                         std::size_t t_max) {
  const double half = eta * lambda / 2.0;
  if (!(half > 0.0 && half <= 1.0)) {
    throw InvalidRegimeError("loss curve needs 0 < eta*lambda/2 <= 1, got " +
                             std::to_string(half));
  }
  if (!(l0 >= 0.0) || !std::isfinite(l0)) {
    throw InvalidInputError("initial loss must be finite and non-negative");
  }
  const double factor = 1.0 - half;
  std::vector<double> out(t_max + 1);
  out[0] = l0;
  for (std::size_t t = 1; t <= t_max; ++t) out[t] = l0 * std::pow(factor, static_cast<double>(t));
  return out;
}

Recommendation recommend_hyperparams(const TheoryParams& p) {
  validate(p);
  const double c = p.big_o_constant;
  Recommendation r;
  r.D = bound_D(p);
  r.m_min = c * std::pow(p.lambda, -8.0) * std::pow(p.n, 12.0) * std::pow(p.d, 8.0) /
            std::pow(p.delta * p.epsilon, 4.0);
  r.eta_max = c * p.lambda * p.delta / (p.kappa * p.kappa * p.n * p.n * p.d * r.D);
  r.t_min = std::max(0.0, c / (p.eta * p.lambda) *
                              std::log(p.n * p.d * r.D * r.D / p.epsilon));
  return r;
}

double ScalingLawTerms::value() const noexcept { return std::max(data_term, compute_term); }

ScalingLawTerms scaling_law_terms(double n_params, double d_data, double c_compute,
                                  const TheoryParams& p) {
  validate(p);
  require_positive(n_params, "N");
  require_positive(d_data, "D_data");
  require_positive(c_compute, "C_compute");
  ScalingLawTerms s;
  s.data_term = std::pow(d_data, 3.0) * std::pow(p.d, 2.25) /
                (p.lambda * p.lambda * std::pow(n_params, 0.25));
  s.alpha = d_data * p.d * std::log(p.m * p.d / p.delta);
  s.compute_term = s.alpha / std::exp(p.eta * p.lambda * c_compute);
  return s;
}

double scaling_law_prediction(double n_params, double d_data, double c_compute,
                              const TheoryParams& p) {
  return scaling_law_terms(n_params, d_data, c_compute, p).value();
}

}  // namespace bitkernel::theory
