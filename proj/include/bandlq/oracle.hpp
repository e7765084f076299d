#pragma once

// Dense reference computations for verification at desk scale.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "bandlq/error.hpp"
#include "bandlq/problem.hpp"
#include "bandlq/sparse.hpp"

namespace bandlq::oracle {

using Dense = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

inline constexpr Index kDefaultCap = 400;
inline constexpr Index kKroneckerCap = 60;

inline Dense to_dense(const SparseMatrix& a) {
  Dense d = Dense::Zero(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_vals(i);
    for (std::size_t k = 0; k < c.size(); ++k) d(i, c[k]) = v[k];
  }
  return d;
}

/// Entries with |x| <= drop_tol are omitted.
inline SparseMatrix from_dense(const Dense& d, double drop_tol = 0.0) {
  std::vector<Triplet> t;
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = 0; j < d.cols(); ++j)
      if (std::abs(d(i, j)) > drop_tol) t.push_back({i, j, d(i, j)});
  return SparseMatrix::from_triplets(d.rows(), d.cols(), std::move(t));
}

namespace detail {

inline void require_cap(Index n, Index cap, const char* what) {
  if (n > cap)
    throw InvalidArgument(std::string(what) + ": n = " + std::to_string(n) +
                          " exceeds the dense cap " + std::to_string(cap));
}

inline void require_square(const Dense& a, Index n, const char* what) {
  if (a.rows() != n || a.cols() != n)
    throw ShapeError(std::string(what) + ": expected " + bandlq::detail::shape_str(n, n) +
                     ", got " + bandlq::detail::shape_str(a.rows(), a.cols()));
}

}  // namespace detail

/// M = Abar^T ⊗ E^T + E^T ⊗ Abar^T, so that M vec(Z) = vec(E^T Z Abar + Abar^T Z E)
/// with column-major vec.
inline Dense kronecker_matrix(const Dense& abar, const Dense& e) {
  const Index n = abar.rows();
  Dense m(n * n, n * n);
  const Dense at = abar.transpose(), et = e.transpose();
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b)
      m.block(a * n, b * n, n, n) = at(a, b) * et + et(a, b) * at;
  return m;
}

/// Solver for E^T Z Abar + Abar^T Z E = P with general right-hand side.
///
/// With S = E^{-1} Abar and Y = E^T Z E the equation becomes S^T Y + Y S = P.
/// A complex Schur form S = U T U^H turns it into T^H Y' + Y' T = U^H P U, which
/// is solved column by column.
class LyapunovSchurSolver {
 public:
  LyapunovSchurSolver(const Dense& abar, const Dense& e) : n_(abar.rows()) {
    detail::require_square(abar, n_, "LyapunovSchurSolver");
    detail::require_square(e, n_, "LyapunovSchurSolver");
    e_lu_.compute(e);
    if (e_lu_.rcond() < 1e-14) throw InvalidArgument("LyapunovSchurSolver: E is singular");
    et_lu_.compute(e.transpose());
    const Dense s = e_lu_.solve(abar);
    Eigen::ComplexSchur<Dense> schur(s);
    if (schur.info() != Eigen::Success) throw ConvergenceError("complex Schur failed", 0.0);
    u_ = schur.matrixU();
    t_ = schur.matrixT();
    for (Index i = 0; i < n_; ++i)
      for (Index k = 0; k < n_; ++k)
        if (std::abs(std::conj(t_(i, i)) + t_(k, k)) <= 1e-13 * (1.0 + t_.norm()))
          throw InvalidArgument("Lyapunov operator is singular (eigenvalues sum to zero)");
  }

  Dense solve(const Dense& p) const {
    detail::require_square(p, n_, "LyapunovSchurSolver::solve");
    using CD = Eigen::MatrixXcd;
    const CD pt = u_.adjoint() * p.cast<std::complex<double>>() * u_;
    CD y = CD::Zero(n_, n_);
    const CD th = t_.adjoint();
    for (Index k = 0; k < n_; ++k) {
      Eigen::VectorXcd rhs = pt.col(k);
      for (Index l = 0; l < k; ++l) rhs -= y.col(l) * t_(l, k);
      CD lower = th;
      lower.diagonal().array() += t_(k, k);
      y.col(k) = lower.triangularView<Eigen::Lower>().solve(rhs);
    }
    const Dense yr = (u_ * y * u_.adjoint()).real();
    // Z = E^{-T} Y E^{-1}
    const Dense w = et_lu_.solve(yr);
    return et_lu_.solve(w.transpose()).transpose();
  }

 private:
  Index n_;
  Eigen::PartialPivLU<Dense> e_lu_, et_lu_;
  Eigen::MatrixXcd u_, t_;
};

/// Unsymmetrized dense Lyapunov solve; explicit Kronecker LU up to n = 60,
/// Schur-based above.
inline Dense dense_lyap_general(const Dense& abar, const Dense& e, const Dense& p,
                                Index n_cap = kDefaultCap) {
  const Index n = abar.rows();
  detail::require_cap(n, n_cap, "dense_lyap");
  detail::require_square(abar, n, "dense_lyap");
  detail::require_square(e, n, "dense_lyap");
  detail::require_square(p, n, "dense_lyap");
  if (n <= kKroneckerCap) {
    Eigen::PartialPivLU<Dense> lu(kronecker_matrix(abar, e));
    if (!(lu.rcond() > 1e-15))
      throw InvalidArgument("dense_lyap: Kronecker matrix is singular");
    const DenseVector z = lu.solve(Eigen::Map<const DenseVector>(p.data(), n * n));
    return Eigen::Map<const Dense>(z.data(), n, n);
  }
  return LyapunovSchurSolver(abar, e).solve(p);
}

inline Dense dense_lyap(const Dense& abar, const Dense& e, const Dense& p,
                        Index n_cap = kDefaultCap) {
  const Dense z = dense_lyap_general(abar, e, p, n_cap);
  return 0.5 * (z + z.transpose());
}

inline SparseMatrix dense_lyap(const SparseMatrix& abar, const SparseMatrix& e,
                               const SparseMatrix& p, Index n_cap = kDefaultCap) {
  return from_dense(dense_lyap(to_dense(abar), to_dense(e), to_dense(p), n_cap));
}

/// E^T Z Abar + Abar^T Z E - P.
inline Dense lyap_residual(const Dense& abar, const Dense& e, const Dense& p, const Dense& z) {
  return e.transpose() * z * abar + abar.transpose() * z * e - p;
}

struct DenseLq {
  Dense E, A, B, C;
  DenseVector Q, R;

  explicit DenseLq(const LqProblem& prob)
      : E(to_dense(prob.model.E)),
        A(to_dense(prob.model.A)),
        B(to_dense(prob.model.B)),
        C(to_dense(prob.model.C)),
        Q(Eigen::Map<const DenseVector>(prob.Q.data(), static_cast<Index>(prob.Q.size()))),
        R(Eigen::Map<const DenseVector>(prob.R.data(), static_cast<Index>(prob.R.size()))) {}

  Dense ctqc() const { return C.transpose() * Q.asDiagonal() * C; }
  Dense feedback(const Dense& z) const {
    return R.cwiseInverse().asDiagonal() * (B.transpose() * z * E);
  }
  /// C^T Q C + E^T Z A + A^T Z E - E^T Z B R^{-1} B^T Z E
  Dense residual(const Dense& z) const {
    const Dense zbe = B.transpose() * z * E;
    return ctqc() + E.transpose() * z * A + A.transpose() * z * E -
           zbe.transpose() * R.cwiseInverse().asDiagonal() * zbe;
  }
};

struct RiccatiOracleResult {
  Dense Z;
  Dense F;
  Index iterations = 0;
  double residual = 0.0;  ///< ||D[Z]||_F
};

/// Exact Newton iteration from 10 I with dense Lyapunov solves.
inline RiccatiOracleResult dense_riccati(const LqProblem& prob, Index n_cap = kDefaultCap,
                                         double z0_scale = 10.0) {
  prob.validate();
  const DenseLq d(prob);
  const Index n = d.A.rows();
  detail::require_cap(n, n_cap, "dense_riccati");
  const Dense ctqc = d.ctqc();
  const double target = 1e-11 * std::max(ctqc.norm(), std::numeric_limits<double>::min());

  RiccatiOracleResult out;
  out.Z = z0_scale * Dense::Identity(n, n);
  out.residual = d.residual(out.Z).norm();
  for (Index k = 1; k <= 100; ++k) {
    const Dense f = d.feedback(out.Z);
    const Dense abar = d.A - d.B * f;
    const Dense p = -ctqc - f.transpose() * d.R.asDiagonal() * f;
    out.Z = dense_lyap(abar, d.E, p, n_cap);
    out.iterations = k;
    out.residual = d.residual(out.Z).norm();
    if (!std::isfinite(out.residual))
      throw ConvergenceError("dense_riccati: iterate became non-finite", out.residual);
    if (out.residual <= target) break;
  }
  if (out.residual > target)
    throw ConvergenceError("dense_riccati: no convergence in 100 Newton steps", out.residual);
  Eigen::SelfAdjointEigenSolver<Dense> eig(out.Z, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, out.Z.norm()))
    throw ConvergenceError("dense_riccati: solution is not positive semidefinite",
                           eig.eigenvalues().minCoeff());
  out.F = d.feedback(out.Z);
  return out;
}

/// Matrix exponential by scaling and squaring with the degree-13 Pade approximant.
inline Dense dense_expm(const Dense& a, Index n_cap = kDefaultCap) {
  const Index n = a.rows();
  detail::require_square(a, n, "dense_expm");
  detail::require_cap(n, n_cap, "dense_expm");
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm > theta13) s = static_cast<int>(std::ceil(std::log2(norm / theta13)));
  const Dense x = a / std::ldexp(1.0, s);
  const Dense id = Dense::Identity(n, n);
  const Dense x2 = x * x, x4 = x2 * x2, x6 = x4 * x2;
  const Dense u = x * (x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 +
                       b[3] * x2 + b[1] * id);
  const Dense v =
      x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;
  Dense r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  if (!r.allFinite()) throw InvalidArgument("dense_expm: overflow");
  return r;
}

inline std::vector<std::complex<double>> dense_eigenvalues(const Dense& a) {
  Eigen::EigenSolver<Dense> es(a, false);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", 0.0);
  const auto ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

/// Eigenvalues of the pencil (A, E) as eigenvalues of E^{-1} A.
inline std::vector<std::complex<double>> pencil_eigs(const Dense& a, const Dense& e,
                                                     Index n_cap = kDefaultCap) {
  const Index n = a.rows();
  detail::require_square(a, n, "pencil_eigs");
  detail::require_square(e, n, "pencil_eigs");
  detail::require_cap(n, n_cap, "pencil_eigs");
  Eigen::PartialPivLU<Dense> lu(e);
  if (!(lu.rcond() > 1e-14)) throw InvalidArgument("pencil_eigs: E is singular");
  return dense_eigenvalues(lu.solve(a));
}

inline double max_real_part(const std::vector<std::complex<double>>& ev) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& z : ev) m = std::max(m, z.real());
  return m;
}

/// 2-norm condition number of a square dense matrix via singular values.
inline double condition_number(const Dense& a) {
  Eigen::JacobiSVD<Dense> svd(a);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

/// 2-norm condition number of M = Abar^T ⊗ E^T + E^T ⊗ Abar^T without forming M:
/// power iteration on M^T M for sigma_max and on (M^T M)^{-1} for sigma_min,
/// the inverse applied through dense Lyapunov solves.
inline double kronecker_condition(const Dense& abar, const Dense& e, Index iterations = 200) {
  const Index n = abar.rows();
  auto apply = [&](const Dense& z) -> Dense {
    return e.transpose() * z * abar + abar.transpose() * z * e;
  };
  auto apply_t = [&](const Dense& r) -> Dense {
    return e * r * abar.transpose() + abar * r * e.transpose();
  };
  const LyapunovSchurSolver forward(abar, e);
  const LyapunovSchurSolver adjoint(abar.transpose(), e.transpose());

  auto power = [&](auto&& op) {
    Dense x(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) x(i, j) = 1.0 + 0.1 * std::sin(1.0 + i + 3.0 * j);
    x /= x.norm();
    double lambda = 0.0;
    for (Index k = 0; k < iterations; ++k) {
      Dense y = op(x);
      const double next = y.norm();
      x = y / next;
      if (std::abs(next - lambda) <= 1e-12 * next) {
        lambda = next;
        break;
      }
      lambda = next;
    }
    return lambda;
  };
  const double smax2 = power([&](const Dense& x) { return apply_t(apply(x)); });
  const double sinv2 = power([&](const Dense& x) { return forward.solve(adjoint.solve(x)); });
  return std::sqrt(smax2 * sinv2);
}

}  // namespace bandlq::oracle
