#pragma once

// Extreme-eigenvalue bounds of a sparse matrix: dense eigensolver at desk
// scale, restarted Arnoldi above it.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "bandlq/error.hpp"
#include "bandlq/oracle.hpp"
#include "bandlq/sparse.hpp"

namespace bandlq {

struct SpectrumBounds {
  double lambda_RS = 0.0;  ///< smallest real part
  double lambda_RL = 0.0;  ///< largest real part
  double lambda_IL = 0.0;  ///< largest |imaginary part|

  /// Bounds of t * A for t > 0.
  SpectrumBounds scaled(double t) const { return {t * lambda_RS, t * lambda_RL, t * lambda_IL}; }

  bool stable() const { return lambda_RL < 0.0; }
};

inline constexpr Index kDenseSpectrumLimit = 2000;

inline SpectrumBounds bounds_from(const std::vector<std::complex<double>>& ev) {
  SpectrumBounds b{std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& z : ev) {
    b.lambda_RS = std::min(b.lambda_RS, z.real());
    b.lambda_RL = std::max(b.lambda_RL, z.real());
    b.lambda_IL = std::max(b.lambda_IL, std::abs(z.imag()));
  }
  return b;
}

namespace detail {

enum class Target { MinReal, MaxReal };

struct ArnoldiOutcome {
  double value = 0.0;     ///< real part of the targeted Ritz value
  double max_imag = 0.0;  ///< largest |imag| among Ritz values seen
  bool converged = false;
};

// Arnoldi with full reorthogonalization, restarted from the real part of the
// targeted Ritz vector.
inline ArnoldiOutcome arnoldi_extreme(const SparseMatrix& a, Target target, Index m,
                                      Index restarts, double tol) {
  const Index n = a.rows();
  m = std::min(m, n);
  Eigen::MatrixXd v(n, m + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd start(n);
  for (Index i = 0; i < n; ++i) start(i) = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3);

  ArnoldiOutcome out;
  double previous = std::numeric_limits<double>::quiet_NaN();
  const double scale = std::max(norm1(a), 1e-300);
  for (Index cycle = 0; cycle < restarts; ++cycle) {
    v.col(0) = start / start.norm();
    h.setZero();
    Index k = 0;
    for (; k < m; ++k) {
      const std::vector<double> y =
          multiply(a, std::span<const double>(v.col(k).data(), static_cast<std::size_t>(n)));
      Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd c = v.leftCols(k + 1).transpose() * w;
        w -= v.leftCols(k + 1) * c;
        h.col(k).head(k + 1) += c;
      }
      h(k + 1, k) = w.norm();
      if (h(k + 1, k) <= 1e-14 * scale) {
        ++k;
        break;
      }
      v.col(k + 1) = w / h(k + 1, k);
    }
    const Eigen::MatrixXd hk = h.topLeftCorner(k, k);
    Eigen::EigenSolver<Eigen::MatrixXd> es(hk);
    const auto ev = es.eigenvalues();
    Index best = 0;
    for (Index i = 0; i < ev.size(); ++i) {
      out.max_imag = std::max(out.max_imag, std::abs(ev(i).imag()));
      const bool better = target == Target::MinReal ? ev(i).real() < ev(best).real()
                                                    : ev(i).real() > ev(best).real();
      if (better) best = i;
    }
    out.value = ev(best).real();
    const Eigen::VectorXcd y = es.eigenvectors().col(best);
    const double ritz_residual = (k < m || h(k, k - 1) <= 1e-14 * scale)
                                     ? 0.0
                                     : h(k, k - 1) * std::abs(y(k - 1));
    if (ritz_residual <= tol * scale ||
        (std::isfinite(previous) && std::abs(out.value - previous) <= tol * scale)) {
      out.converged = true;
      return out;
    }
    previous = out.value;
    start = (v.leftCols(k) * y).real();
    if (start.norm() == 0.0) start = (v.leftCols(k) * y).imag();
  }
  return out;
}

}  // namespace detail

/// Extreme real parts and largest imaginary magnitude of the eigenvalues of `a`.
/// Above `dense_limit` the Arnoldi estimates are widened by 5% on each side.
inline SpectrumBounds spectrum_bounds(const SparseMatrix& a,
                                      Index dense_limit = kDenseSpectrumLimit) {
  if (a.rows() != a.cols())
    throw ShapeError("spectrum_bounds: matrix is " + detail::shape_str(a.rows(), a.cols()));
  if (a.rows() == 0) throw InvalidArgument("spectrum_bounds: empty matrix");
  if (a.rows() <= dense_limit)
    return bounds_from(oracle::dense_eigenvalues(oracle::to_dense(a)));

  constexpr Index kSubspace = 100, kRestarts = 60;
  constexpr double kTol = 1e-9;
  const auto lo = detail::arnoldi_extreme(a, detail::Target::MinReal, kSubspace, kRestarts, kTol);
  const auto hi = detail::arnoldi_extreme(a, detail::Target::MaxReal, kSubspace, kRestarts, kTol);
  if (!lo.converged || !hi.converged)
    throw ConvergenceError("spectrum_bounds: Arnoldi did not converge (estimates RS = " +
                               std::to_string(lo.value) + ", RL = " + std::to_string(hi.value) +
                               ")",
                           hi.value);
  SpectrumBounds b{lo.value, hi.value, std::max(lo.max_imag, hi.max_imag)};
  b.lambda_RS -= 0.05 * std::abs(b.lambda_RS);
  b.lambda_RL += 0.05 * std::abs(b.lambda_RL);
  b.lambda_IL *= 1.05;
  return b;
}

}  // namespace bandlq
