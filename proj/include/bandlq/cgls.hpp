#pragma once

#include <cmath>
#include <concepts>
#include <span>
#include <vector>

#include "bandlq/sparse.hpp"

namespace bandlq {

/// Anything that can apply itself and its transpose to a dense vector.
template <class Op>
concept LinearOperator = requires(const Op& op, std::span<const double> x) {
  { op.rows() } -> std::convertible_to<Index>;
  { op.cols() } -> std::convertible_to<Index>;
  { op.apply(x) } -> std::same_as<std::vector<double>>;
  { op.apply_transpose(x) } -> std::same_as<std::vector<double>>;
};

/// Adapts a SparseMatrix to LinearOperator.
struct MatrixOperator {
  const SparseMatrix& m;
  Index rows() const { return m.rows(); }
  Index cols() const { return m.cols(); }
  std::vector<double> apply(std::span<const double> x) const { return multiply(m, x); }
  std::vector<double> apply_transpose(std::span<const double> x) const {
    return multiply_transpose(m, x);
  }
};

struct CglsConfig {
  double tol = 1e-7;  ///< on ||A^T r|| / ||A^T b||
  Index max_iter = 20000;
};

struct CglsResult {
  std::vector<double> x;
  Index iterations = 0;
  bool converged = false;
  double relative_residual = 0.0;        ///< ||A^T r|| / ||A^T b|| at exit
  double residual_norm = 0.0;            ///< ||b - A x||
  std::vector<double> normal_residuals;  ///< ||A^T r_k|| for k = 0..iterations
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

/// Conjugate gradients on the normal equations A^T A x = A^T b, never forming
/// A^T A. Starts from `x0` (zero when empty); the stopping test is always
/// relative to ||A^T b||, so a start only changes the iteration count.
template <LinearOperator Op>
CglsResult cgls(const Op& op, std::span<const double> b, const CglsConfig& cfg,
                std::span<const double> x0 = {}) {
  if (static_cast<Index>(b.size()) != op.rows())
    throw ShapeError("cgls: right-hand side of length " + std::to_string(b.size()) +
                     " for operator with " + std::to_string(op.rows()) + " rows");
  if (!(cfg.tol > 0.0)) throw InvalidArgument("cgls: tolerance must be positive");
  if (!x0.empty() && static_cast<Index>(x0.size()) != op.cols())
    throw ShapeError("cgls: start vector of length " + std::to_string(x0.size()) +
                     " for operator with " + std::to_string(op.cols()) + " columns");

  CglsResult res;
  const auto n = static_cast<std::size_t>(op.cols());
  std::vector<double> r(b.begin(), b.end());
  const double norm_s0 = detail::norm2(op.apply_transpose(r));
  if (x0.empty()) {
    res.x.assign(n, 0.0);
  } else {
    res.x.assign(x0.begin(), x0.end());
    const std::vector<double> ax = op.apply(x0);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= ax[i];
  }
  std::vector<double> s = op.apply_transpose(r);
  std::vector<double> p = s;
  double gamma = detail::dot(s, s);
  res.normal_residuals.push_back(std::sqrt(gamma));
  if (norm_s0 == 0.0 || std::sqrt(gamma) <= cfg.tol * norm_s0) {
    res.converged = true;
    res.residual_norm = detail::norm2(r);
    res.relative_residual = norm_s0 == 0.0 ? 0.0 : std::sqrt(gamma) / norm_s0;
    return res;
  }

  while (res.iterations < cfg.max_iter) {
    const std::vector<double> q = op.apply(p);
    const double qq = detail::dot(q, q);
    if (qq == 0.0) break;
    const double alpha = gamma / qq;
    for (std::size_t i = 0; i < n; ++i) res.x[i] += alpha * p[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
    s = op.apply_transpose(r);
    const double gamma_next = detail::dot(s, s);
    ++res.iterations;
    res.normal_residuals.push_back(std::sqrt(gamma_next));
    if (std::sqrt(gamma_next) <= cfg.tol * norm_s0) {
      res.converged = true;
      break;
    }
    const double beta = gamma_next / gamma;
    gamma = gamma_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = s[i] + beta * p[i];
  }
  res.relative_residual = res.normal_residuals.back() / norm_s0;
  res.residual_norm = detail::norm2(r);
  return res;
}

}  // namespace bandlq
