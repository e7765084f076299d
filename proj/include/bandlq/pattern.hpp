#pragma once

#include <string>

#include "bandlq/sparse.hpp"

namespace bandlq {

struct PatternConfig {
  Index w = 1;                      ///< pattern order: I + G_1 + ... + G_{w+1}
  bool binarize_each_step = true;   ///< replace each G_i by its 0/1 structure
  bool use_absolute_values = true;  ///< work with |E|, |Abar|, |P|
  Index freeze_after_newton_iter = 1;

  void validate() const {
    if (w < 0) throw InvalidArgument("pattern order w must be >= 0");
    if (freeze_after_newton_iter < 1)
      throw InvalidArgument("freeze_after_newton_iter must be >= 1");
  }
};

namespace detail {

inline SparseMatrix binarize(const SparseMatrix& a) {
  return SparseMatrix::constant(nonzero_pattern(a), 1.0);
}

}  // namespace detail

/// A priori pattern of the solution Z of E^T Z Abar + Abar^T Z E = P.
///
/// G_1 = E P Abar^T + Abar P E^T and, for i = 1..w,
/// G_{i+1} = E H_i Abar^T + Abar H_i E^T with H_i = E^T G_i Abar + Abar^T G_i E.
/// The result is the structure of I + G_1 + ... + G_{w+1}, unioned with its
/// transpose.
inline SparsityPattern apriori_pattern(const SparseMatrix& abar, const SparseMatrix& e,
                                       const SparseMatrix& p, const PatternConfig& cfg = {}) {
  cfg.validate();
  const Index n = abar.rows();
  for (const SparseMatrix* m : {&abar, &e, &p})
    if (m->rows() != n || m->cols() != n)
      throw ShapeError("apriori_pattern: expected " + detail::shape_str(n, n) +
                       " operands, got " + detail::shape_str(m->rows(), m->cols()));

  const SparseMatrix a = cfg.use_absolute_values ? abs(abar) : canonicalize(abar);
  const SparseMatrix m = cfg.use_absolute_values ? abs(e) : canonicalize(e);
  const SparseMatrix rhs = cfg.use_absolute_values ? abs(p) : canonicalize(p);
  const SparseMatrix at = transpose(a);
  const SparseMatrix mt = transpose(m);

  // E X Abar^T + Abar X E^T
  auto outer = [&](const SparseMatrix& x) {
    return spadd(spgemm(spgemm(m, x), at), spgemm(spgemm(a, x), mt));
  };
  // E^T X Abar + Abar^T X E
  auto inner = [&](const SparseMatrix& x) {
    return spadd(spgemm(spgemm(mt, x), a), spgemm(spgemm(at, x), m));
  };

  SparseMatrix g = outer(rhs);
  if (cfg.binarize_each_step) g = detail::binarize(g);
  SparsityPattern acc = pattern_union(SparsityPattern::identity(n), nonzero_pattern(g));
  for (Index i = 1; i <= cfg.w; ++i) {
    g = outer(inner(g));
    if (cfg.binarize_each_step) g = detail::binarize(g);
    acc = pattern_union(acc, nonzero_pattern(g));
  }
  return symmetrize(acc);
}

/// Approximate-inverse pattern of E: structure of I + E + ... + E^k1.
inline SparsityPattern inverse_pattern(const SparseMatrix& e, Index k1) {
  return pattern_power_sum(nonzero_pattern(e), k1);
}

}  // namespace bandlq
