#pragma once

// Full-batch gradient descent on L = ½‖F − y‖² for the one-bit network
// (straight-through gradient) and its full-precision twin, both started from
// the same initial state and stepped in lockstep.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bitkernel/bits.hpp"
#include "bitkernel/data.hpp"
#include "bitkernel/matrix.hpp"
#include "bitkernel/net.hpp"

namespace bitkernel::train {

struct Hyperparams {
  // Learning rate; nullopt selects the automatic rule (see learning_rate).
  // Zero is accepted and freezes both branches.
  std::optional<double> eta;
  std::size_t steps = 1000;
  double kappa = 1.0;
  std::uint64_t seed = 0;
  double sigma = 1.0;
  // false: a user-supplied eta is used as given, without the stability cap.
  bool cap_eta = true;
};

// Throws ConfigError naming the offending field.
void validate(const Hyperparams& hp);

struct Diagnostics {
  bool kernel_probes = true;
  // 0 selects max(1, steps / 100).
  std::size_t probe_stride = 0;
  bool decomposition = false;
};

struct KernelProbe {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  // ‖H(t) − H(0)‖_F and the same divided by ‖H(0)‖_F.
  double gram_drift = 0.0;
  double relative_drift = 0.0;
};

struct Decomposition {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;

  double sum() const noexcept { return c1 + c2 + c3 + c4; }
};

struct StepRecord {
  std::size_t step = 0;
  double loss_1bit = 0.0;
  double loss_fp = 0.0;
  double test_loss_1bit = 0.0;
  double test_loss_fp = 0.0;
  // max_r ‖w_r(t) − w_r(0)‖ of the one-bit branch.
  double weight_drift = 0.0;
  double weight_drift_fp = 0.0;
  // Mean over samples of |{r : one-bit gate (i, r) differs from step 0}| / m.
  double flip_fraction = 0.0;
  // max_i |F_i − F'_i| on the training and test inputs.
  double max_train_diff = 0.0;
  double max_test_diff = 0.0;
  std::optional<KernelProbe> kernel;
  // Terms for the step t → t+1, absent on the final record.
  std::optional<Decomposition> decomposition;
  // L(t+1) − L(t) − ΣC_k.
  double decomposition_residual = 0.0;
};

struct TrainTrajectory {
  std::vector<StepRecord> records;
  double eta = 0.0;
  std::size_t probe_stride = 1;
  net::NetworkState initial;
  net::NetworkState final_1bit;
  net::NetworkState final_fp;

  double min_loss_1bit() const noexcept;
  double min_loss_fp() const noexcept;
};

double loss(std::span<const double> f, std::span<const double> y);

// Row r of the result is column r of ΔW (the gradient for w_r):
//   Σ_i (F_i − y_i)·κ·(1/√m)·a_r·g_ir·x_i
// with residuals and gates from the one-bit network (ste_gradient) or the
// full-precision network (fp_gradient).
Matrix ste_gradient(const Matrix& x, std::span<const double> y, const net::NetworkState& net);
Matrix fp_gradient(const Matrix& x, std::span<const double> y, const net::NetworkState& net);

// Gradient from an already evaluated pass (outputs and gates).
Matrix gradient_from_pass(const net::InputBatch& batch, std::span<const double> y,
                          const net::NetworkState& net, const net::BatchPass& pass);

// min(user, 1/λ_max(H(0))) with the one-bit kernel at initialization, or
// min(user, 0.1) when kernel probing is off. With cap == false a user value
// is returned unchanged.
double learning_rate(const net::InputBatch& batch, const net::NetworkState& init,
                     std::optional<double> user, bool kernel_probing, bool cap = true);

// Per-sample split of [m] into S_i (stable) and S_i^⊥ (flipped).
class FlipPartition {
 public:
  // Bit (i, r) set means r ∈ S_i^⊥.
  explicit FlipPartition(BitMatrix flipped);
  // Throws InvalidInputError unless stable[i] and flipped[i] are a disjoint
  // cover of [0, m) for every i.
  FlipPartition(std::size_t m, const std::vector<std::vector<std::size_t>>& stable,
                const std::vector<std::vector<std::size_t>>& flipped);

  std::size_t samples() const noexcept { return flipped_.rows(); }
  std::size_t width() const noexcept { return flipped_.cols(); }
  bool flipped(std::size_t i, std::size_t r) const noexcept { return flipped_.get(i, r); }
  const BitMatrix& mask() const noexcept { return flipped_; }

 private:
  BitMatrix flipped_;
};

// C1..C4 for one step state_t → state_t1 on (x, y).
Decomposition loss_decomposition(const net::NetworkState& state_t,
                                 const net::NetworkState& state_t1, const Matrix& x,
                                 std::span<const double> y, const FlipPartition& partition);

// max_r ‖w_r(t) − w_r(0)‖₂.
double weight_drift(const net::NetworkState& state_0, const net::NetworkState& state_t);

// Throws DivergenceError if either branch's loss is non-finite or above 1e12.
TrainTrajectory train_twin(const data::Dataset& train, const data::Dataset& test,
                           std::size_t width, const Hyperparams& hp,
                           const Diagnostics& diagnostics = {});

// Same, from an explicit initial state instead of init_network(hp.seed).
TrainTrajectory train_twin(const data::Dataset& train, const data::Dataset& test,
                           const net::NetworkState& initial, const Hyperparams& hp,
                           const Diagnostics& diagnostics = {});

inline constexpr double kDivergenceLimit = 1e12;

}  // namespace bitkernel::train
