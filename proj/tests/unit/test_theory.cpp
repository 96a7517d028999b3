#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bitkernel/errors.hpp"
#include "bitkernel/theory.hpp"

using namespace bitkernel;
using namespace bitkernel::theory;

TEST(BoundD, Examples) {
  TheoryParams p;
  p.m = std::numbers::e;
  p.d = 0.05;
  p.delta = 0.05;
  EXPECT_NEAR(bound_D(p), 1.0, 1e-15);

  p.m = 100;
  p.d = 10;
  p.delta = 0.01;
  EXPECT_NEAR(bound_D(p), std::sqrt(std::log(1e5)), 1e-15);
  EXPECT_NEAR(bound_D(p), 3.3931, 1e-4);

  p.big_o_constant = 0.1;
  EXPECT_EQ(bound_D(p), 1.0);

  p.log_factor = 3.0;
  EXPECT_EQ(bound_D(p), 3.0);
}

TEST(BoundD, Monotone) {
  TheoryParams p;
  double prev = 0;
  for (double m = 10; m < 1e8; m *= 3) {
    p.m = m;
    EXPECT_GE(bound_D(p), prev);
    prev = bound_D(p);
  }
  p.m = 1000;
  p.delta = 0.001;
  const double small_delta = bound_D(p);
  p.delta = 0.09;
  EXPECT_GE(small_delta, bound_D(p));
}

TEST(BoundD, RejectsDelta) {
  TheoryParams p;
  p.delta = 0.1;
  EXPECT_THROW(bound_D(p), ConfigError);
  p.delta = 0.0;
  EXPECT_THROW(bound_D(p), ConfigError);
}

TEST(LossCurve, Examples) {
  EXPECT_EQ(predicted_loss_curve(7.5, 0.1, 1.0, 0).front(), 7.5);
  EXPECT_EQ(predicted_loss_curve(3.0, 1.0, 2.0, 3)[1], 0.0);
  EXPECT_EQ(predicted_loss_curve(8.0, 0.5, 2.0, 3)[3], 1.0);
  EXPECT_THROW(predicted_loss_curve(1.0, 1.0, 2.5, 3), InvalidRegimeError);
  EXPECT_THROW(predicted_loss_curve(1.0, 0.0, 1.0, 3), InvalidRegimeError);
  const auto c = predicted_loss_curve(4.0, 0.3, 0.7, 200);
  for (std::size_t t = 1; t < c.size(); ++t) {
    EXPECT_LE(c[t], c[t - 1]);
    EXPECT_GE(c[t], 0.0);
  }
}

TEST(Recommend, Examples) {
  TheoryParams p;
  p.lambda = 1;
  p.delta = 0.01;
  p.kappa = 1;
  p.n = 10;
  p.d = 3;
  p.log_factor = 3;
  const auto r = recommend_hyperparams(p);
  EXPECT_NEAR(r.eta_max, 0.01 / (100 * 3 * 3), 1e-20);
  EXPECT_NEAR(r.eta_max, 1.111e-5, 1e-8);

  auto q = p;
  q.n = 20;
  EXPECT_NEAR(recommend_hyperparams(q).m_min / r.m_min, 4096.0, 1e-9);

  auto e1 = p, e2 = p;
  e1.epsilon = 0.001;
  e2.epsilon = 0.1;
  EXPECT_GT(recommend_hyperparams(e1).t_min, recommend_hyperparams(e2).t_min);
  EXPECT_NEAR(recommend_hyperparams(e1).t_min, 1.0 / (0.01 * 1.0) * std::log(10 * 3 * 9 / 0.001),
              1e-9);
}

TEST(ScalingLaw, DirectEvaluation) {
  TheoryParams p;
  p.lambda = 1;
  p.d = 2;
  p.m = 1e4;
  p.delta = 0.01;
  p.eta = 0.01;
  const double d_data = 100, n_params = 1e6, c_compute = 1e4;
  const auto s = scaling_law_terms(n_params, d_data, c_compute, p);
  const double first = std::pow(100.0, 3) * std::pow(2.0, 2.25) / std::pow(1e6, 0.25);
  const double alpha = 100 * 2 * std::log(2e4 / 0.01);
  EXPECT_NEAR(s.data_term, first, 1e-9 * first);
  EXPECT_NEAR(s.alpha, alpha, 1e-12 * alpha);
  EXPECT_NEAR(s.compute_term, alpha * std::exp(-100.0), 1e-12 * alpha * std::exp(-100.0));
  // For this instance the data term dominates (about 1.35e5 against ~1e-41).
  EXPECT_TRUE(s.data_dominates());
  EXPECT_EQ(scaling_law_prediction(n_params, d_data, c_compute, p), s.data_term);
}

TEST(ScalingLaw, Monotonicity) {
  TheoryParams p;
  p.m = 1e4;
  p.eta = 0.01;
  p.lambda = 1;
  EXPECT_LT(scaling_law_prediction(2e6, 100, 1e4, p), scaling_law_prediction(1e6, 100, 1e4, p));

  // Compute term dominates for a tiny dataset exponent budget.
  p.eta = 1e-3;
  const double c = 10;
  const auto a = scaling_law_terms(1e30, 1, c, p);
  ASSERT_FALSE(a.data_dominates());
  const auto b = scaling_law_terms(1e30, 1, c + std::log(2.0) / (p.eta * p.lambda), p);
  EXPECT_NEAR(b.value(), a.value() / 2, 1e-12 * a.value());
  EXPECT_THROW(scaling_law_prediction(0, 1, 1, p), ConfigError);
}
