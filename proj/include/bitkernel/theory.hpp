#pragma once

// Closed-form quantities from the convergence analysis. Every big-O / Ω
// constant is the single user-settable `big_o_constant`, so results are
// order-of-magnitude guidance only. Logarithms are natural.

#include <cstddef>
#include <optional>
#include <vector>

namespace bitkernel::theory {

inline constexpr const char* kOrderOfMagnitudeNote =
    "order-of-magnitude (constants suppressed in the paper)";

struct TheoryParams {
  double n = 1.0;
  double d = 1.0;
  double m = 1.0;
  double delta = 0.01;
  double lambda = 1.0;
  double eta = 0.01;
  double kappa = 1.0;
  double epsilon = 0.01;
  double big_o_constant = 1.0;
  // Overrides D = max{C·sqrt(ln(md/δ)), 1} where a fixed value is wanted.
  std::optional<double> log_factor;
};

// Throws ConfigError naming the first invalid field.
void validate(const TheoryParams& p);

// max{C·sqrt(ln(m·d/δ)), 1}.
double bound_D(const TheoryParams& p);

// Element t is (1 − ηλ/2)^t·L0 for t = 0..t_max. Throws InvalidRegimeError
// unless 0 < ηλ/2 <= 1.
std::vector<double> predicted_loss_curve(double l0, double eta, double lambda,
                                         std::size_t t_max);

struct Recommendation {
  // C·λ⁻⁸·n¹²·d⁸ / (δε)⁴
  double m_min = 0.0;
  // C·λδ / (κ²·n²·d·D)
  double eta_max = 0.0;
  // C·(ηλ)⁻¹·ln(n·d·D²/ε), floored at 0
  double t_min = 0.0;
  double D = 1.0;
};

Recommendation recommend_hyperparams(const TheoryParams& p);

struct ScalingLawTerms {
  // D_data³·d^2.25 / (λ²·N^0.25)
  double data_term = 0.0;
  // α / exp(η·λ·C_compute) with α = D_data·d·ln(m·d/δ)
  double compute_term = 0.0;
  double alpha = 0.0;

  double value() const noexcept;
  bool data_dominates() const noexcept { return data_term >= compute_term; }
};

ScalingLawTerms scaling_law_terms(double n_params, double d_data, double c_compute,
                                  const TheoryParams& p);
double scaling_law_prediction(double n_params, double d_data, double c_compute,
                              const TheoryParams& p);

}  // namespace bitkernel::theory
