#pragma once

// Empirical tangent kernel of the two-layer network:
//   H_ij(t) = κ²·(1/m)·<x_i, x_j>·#{r : neuron r active on both x_i and x_j}.
// Co-activation counts are exact popcounts over packed gate rows, so the
// result does not depend on summation order.

#include <cstddef>
#include <vector>

#include "bitkernel/bits.hpp"
#include "bitkernel/matrix.hpp"
#include "bitkernel/net.hpp"

namespace bitkernel::kernel {

struct GramMatrix {
  Matrix entries;
  std::size_t step = 0;
  net::GateMode mode = net::GateMode::one_bit;

  std::size_t size() const noexcept { return entries.rows(); }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return entries(i, j);
  }
};

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

struct KernelReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double drift_from_init = 0.0;
  std::vector<std::size_t> flip_counts;
};

GramMatrix gram_from_pattern(const Matrix& x, const net::ActivationPattern& pattern,
                             double kappa);
GramMatrix gram_matrix(const Matrix& x, const net::NetworkState& net,
                       net::GateMode mode, std::size_t step = 0);
GramMatrix gram_matrix(const net::InputBatch& batch, const net::NetworkState& net,
                       net::GateMode mode, std::size_t step = 0);

// Row-restricted kernel: entry (i, j) sums only over r in flip_sets[i], with
// one-bit gates evaluated at net_t. Not symmetric in general.
GramMatrix gram_flipped(const Matrix& x, const net::NetworkState& net_t,
                        const std::vector<std::vector<std::size_t>>& flip_sets,
                        std::size_t step = 0);
GramMatrix gram_flipped(const Matrix& x, const net::ActivationPattern& pattern_t,
                        const BitMatrix& flip_masks, double kappa);

// All eigenvalues of a symmetric matrix in ascending order, by cyclic Jacobi
// sweeps until every off-diagonal magnitude is below 1e-12·||A||_F.
// Throws InvalidInputError on asymmetry, NumericalError after 100 sweeps.
std::vector<double> symmetric_eigenvalues(const Matrix& a);
EigenRange min_max_eigenvalues(const Matrix& a);
EigenRange min_max_eigenvalues(const GramMatrix& g);

double frobenius_norm(const Matrix& a) noexcept;
double gram_drift(const GramMatrix& g_t, const GramMatrix& g_0);

std::vector<std::size_t> pattern_flip_counts(const net::ActivationPattern& p0,
                                             const net::ActivationPattern& pt);
// Bit (i, r) set where the two patterns disagree.
BitMatrix pattern_flip_masks(const net::ActivationPattern& p0,
                             const net::ActivationPattern& pt);

KernelReport kernel_report(const GramMatrix& g_t, const GramMatrix& g_0,
                           const net::ActivationPattern& p0,
                           const net::ActivationPattern& pt);

}  // namespace bitkernel::kernel
