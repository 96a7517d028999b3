#include "bitkernel/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bitkernel/detail/arith.hpp"
#include "bitkernel/errors.hpp"

namespace bitkernel::kernel {
namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kOffDiagonalTolerance = 1e-12;
constexpr int kMaxSweeps = 100;

void check_pattern_shape(const Matrix& x, const net::ActivationPattern& p) {
  if (p.samples() != x.rows()) {
    throw DimensionError("pattern has " + std::to_string(p.samples()) +
                         " rows but input has " + std::to_string(x.rows()));
  }
}

double max_off_diagonal(const Matrix& a) {
  double mx = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) mx = std::max(mx, std::abs(a(i, j)));
  }
  return mx;
}

void rotate(Matrix& a, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = a(p, k) = c * akp - s * akq;
    a(k, q) = a(q, k) = s * akp + c * akq;
  }
  a(p, p) -= t * apq;
  a(q, q) += t * apq;
  a(p, q) = a(q, p) = 0.0;
}

}  // namespace

GramMatrix gram_from_pattern(const Matrix& x, const net::ActivationPattern& pattern,
                             double kappa) {
  check_pattern_shape(x, pattern);
  const std::size_t n = x.rows();
  const std::size_t m = pattern.width();
  GramMatrix g{Matrix(n, n), pattern.step, pattern.mode};
  if (m == 0) return g;
  const double coef = kappa * kappa / static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double ip = detail::dot(x.row(i), x.row(j));
      const auto count = and_count(pattern.indicators.row(i), pattern.indicators.row(j));
      const double h = coef * ip * static_cast<double>(count);
      g.entries(i, j) = h;
      g.entries(j, i) = h;
    }
  }
  return g;
}

GramMatrix gram_matrix(const net::InputBatch& batch, const net::NetworkState& net,
                       net::GateMode mode, std::size_t step) {
  return gram_from_pattern(batch.inputs(), net::activation_pattern(batch, net, mode, step),
                           net.kappa);
}

GramMatrix gram_matrix(const Matrix& x, const net::NetworkState& net,
                       net::GateMode mode, std::size_t step) {
  return gram_matrix(net::InputBatch(x), net, mode, step);
}

GramMatrix gram_flipped(const Matrix& x, const net::ActivationPattern& pattern_t,
                        const BitMatrix& flip_masks, double kappa) {
  check_pattern_shape(x, pattern_t);
  if (flip_masks.rows() != pattern_t.samples() || flip_masks.cols() != pattern_t.width()) {
    throw DimensionError("flip masks do not match the pattern shape");
  }
  const std::size_t n = x.rows();
  const std::size_t m = pattern_t.width();
  GramMatrix g{Matrix(n, n), pattern_t.step, pattern_t.mode};
  if (m == 0) return g;
  const double coef = kappa * kappa / static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ip = detail::dot(x.row(i), x.row(j));
      const auto count = and_count(flip_masks.row(i), pattern_t.indicators.row(i),
                                   pattern_t.indicators.row(j));
      g.entries(i, j) = coef * ip * static_cast<double>(count);
    }
  }
  return g;
}

GramMatrix gram_flipped(const Matrix& x, const net::NetworkState& net_t,
                        const std::vector<std::vector<std::size_t>>& flip_sets,
                        std::size_t step) {
  if (flip_sets.size() != x.rows()) {
    throw DimensionError("need one flip set per input row");
  }
  const std::size_t m = net_t.width();
  BitMatrix masks(x.rows(), m);
  for (std::size_t i = 0; i < flip_sets.size(); ++i) {
    for (std::size_t r : flip_sets[i]) {
      if (r >= m) {
        throw InvalidInputError("flip set " + std::to_string(i) + " contains neuron " +
                                std::to_string(r) + " outside [0, " +
                                std::to_string(m) + ")");
      }
      masks.set(i, r, true);
    }
  }
  const auto pattern = net::activation_pattern(x, net_t, net::GateMode::one_bit, step);
  return gram_flipped(x, pattern, masks, net_t.kappa);
}

std::vector<double> symmetric_eigenvalues(const Matrix& input) {
  const std::size_t n = input.rows();
  if (n == 0 || input.cols() != n) {
    throw InvalidInputError("eigenvalues need a non-empty square matrix");
  }
  const double norm = frobenius_norm(input);
  if (!std::isfinite(norm)) throw InvalidInputError("matrix has non-finite entries");
  const double sym_tol = kSymmetryTolerance * std::max(1.0, norm);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(input(i, j) - input(j, i)) > sym_tol) {
        throw InvalidInputError("matrix is not symmetric at (" + std::to_string(i) +
                                ", " + std::to_string(j) + ")");
      }
    }
  }

  Matrix a = input;
  // Symmetrize so rotations act on an exactly symmetric matrix.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
  }
  const double tol = kOffDiagonalTolerance * norm;
  int sweeps = 0;
  while (max_off_diagonal(a) >= tol && norm > 0.0) {
    if (sweeps++ == kMaxSweeps) {
      throw NumericalError("Jacobi iteration did not converge in " +
                           std::to_string(kMaxSweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) rotate(a, p, q);
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

EigenRange min_max_eigenvalues(const Matrix& a) {
  const auto eig = symmetric_eigenvalues(a);
  return {eig.front(), eig.back()};
}

EigenRange min_max_eigenvalues(const GramMatrix& g) { return min_max_eigenvalues(g.entries); }

double frobenius_norm(const Matrix& a) noexcept {
  double ss = 0.0;
  for (double v : a.data()) ss += v * v;
  return std::sqrt(ss);
}

double gram_drift(const GramMatrix& g_t, const GramMatrix& g_0) {
  if (g_t.entries.rows() != g_0.entries.rows() || g_t.entries.cols() != g_0.entries.cols()) {
    throw DimensionError("gram_drift: shape mismatch");
  }
  double ss = 0.0;
  const auto a = g_t.entries.data();
  const auto b = g_0.entries.data();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    ss += diff * diff;
  }
  return std::sqrt(ss);
}

BitMatrix pattern_flip_masks(const net::ActivationPattern& p0,
                             const net::ActivationPattern& pt) {
  if (p0.samples() != pt.samples() || p0.width() != pt.width()) {
    throw DimensionError("activation patterns differ in shape");
  }
  if (p0.mode != pt.mode) throw InvalidInputError("activation patterns differ in mode");
  BitMatrix out(p0.samples(), p0.width());
  for (std::size_t i = 0; i < p0.samples(); ++i) {
    const auto a = p0.indicators.row(i);
    const auto b = pt.indicators.row(i);
    auto o = out.row(i);
    for (std::size_t w = 0; w < o.size(); ++w) o[w] = a[w] ^ b[w];
  }
  return out;
}

std::vector<std::size_t> pattern_flip_counts(const net::ActivationPattern& p0,
                                             const net::ActivationPattern& pt) {
  if (p0.samples() != pt.samples() || p0.width() != pt.width()) {
    throw DimensionError("activation patterns differ in shape");
  }
  if (p0.mode != pt.mode) throw InvalidInputError("activation patterns differ in mode");
  std::vector<std::size_t> counts(p0.samples());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts[i] = xor_count(p0.indicators.row(i), pt.indicators.row(i));
  }
  return counts;
}

KernelReport kernel_report(const GramMatrix& g_t, const GramMatrix& g_0,
                           const net::ActivationPattern& p0,
                           const net::ActivationPattern& pt) {
  const auto range = min_max_eigenvalues(g_t);
  return {range.min, range.max, gram_drift(g_t, g_0), pattern_flip_counts(p0, pt)};
}

}  // namespace bitkernel::kernel
