#pragma once

#include "bandlq/sparse.hpp"

namespace bandlq {

/// The generalized Lyapunov operator L(Z) = E^T Z Abar + Abar^T Z E and its
/// adjoint L*(R) = E R Abar^T + Abar R E^T, with transposes cached.
class LyapunovOperator {
 public:
  LyapunovOperator(const SparseMatrix& abar, const SparseMatrix& e)
      : abar_(abar), e_(e), abar_t_(transpose(abar)), e_t_(transpose(e)) {
    const Index n = abar.rows();
    if (abar.cols() != n || e.rows() != n || e.cols() != n)
      throw ShapeError("LyapunovOperator: Abar " +
                       detail::shape_str(abar.rows(), abar.cols()) + ", E " +
                       detail::shape_str(e.rows(), e.cols()));
  }

  Index size() const { return abar_.rows(); }
  const SparseMatrix& abar() const { return abar_; }
  const SparseMatrix& e() const { return e_; }
  const SparseMatrix& abar_t() const { return abar_t_; }
  const SparseMatrix& e_t() const { return e_t_; }

  SparseMatrix apply(const SparseMatrix& z) const {
    return spadd(spgemm(spgemm(e_t_, z), abar_), spgemm(spgemm(abar_t_, z), e_));
  }

  SparseMatrix adjoint(const SparseMatrix& r) const {
    return spadd(spgemm(spgemm(e_, r), abar_t_), spgemm(spgemm(abar_, r), e_t_));
  }

  /// adjoint(r) evaluated only on `mask`.
  SparseMatrix adjoint_masked(const SparseMatrix& r, const SparsityPattern& mask) const {
    return spadd(spgemm_masked(spgemm(e_, r), abar_t_, mask),
                 spgemm_masked(spgemm(abar_, r), e_t_, mask));
  }

  /// P - L(Z).
  SparseMatrix residual(const SparseMatrix& z, const SparseMatrix& p) const {
    return spadd(p, apply(z), 1.0, -1.0);
  }

 private:
  SparseMatrix abar_, e_, abar_t_, e_t_;
};

}  // namespace bandlq
