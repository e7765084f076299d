#pragma once

// Sparse approximate inverse on a prescribed pattern, one small dense
// least-squares problem per column.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "bandlq/error.hpp"
#include "bandlq/parallel.hpp"
#include "bandlq/sparse.hpp"

namespace bandlq {

enum class SpaiForm { Right, Left };  ///< minimizes ||I - E X|| or ||I - X E||

struct SpaiResult {
  SparseMatrix inverse;
  double residual = 0.0;  ///< Frobenius residual of the selected form
  SpaiForm form = SpaiForm::Right;
  double right_residual = 0.0;
  double left_residual = 0.0;
};

namespace detail {

struct SpaiColumn {
  std::vector<Index> rows;  ///< support J of the column
  std::vector<double> values;
  double residual2 = 0.0;
};

/// Column j of argmin ||I - E X||_F with X restricted to `pat`;
/// `et` is E^T (its rows are the columns of E), `patt` is pat^T.
inline SpaiColumn spai_column(const SparseMatrix& et, const SparsityPattern& patt, Index j) {
  SpaiColumn col;
  auto support = patt.row(j);
  col.rows.assign(support.begin(), support.end());
  std::vector<Index> touched;
  for (Index k : col.rows)
    for (Index r : et.row_cols(k)) touched.push_back(r);
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  const auto m = static_cast<Index>(touched.size());
  const auto nj = static_cast<Index>(col.rows.size());
  col.values.assign(col.rows.size(), 0.0);
  const bool hits_j = std::binary_search(touched.begin(), touched.end(), j);
  if (m == 0 || nj == 0) {
    col.residual2 = 1.0;
    return col;
  }
  Eigen::MatrixXd sub = Eigen::MatrixXd::Zero(m, nj);
  for (Index c = 0; c < nj; ++c) {
    auto rc = et.row_cols(col.rows[c]);
    auto rv = et.row_vals(col.rows[c]);
    for (std::size_t t = 0; t < rc.size(); ++t) {
      const auto r = std::lower_bound(touched.begin(), touched.end(), rc[t]) - touched.begin();
      sub(r, c) = rv[t];
    }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  if (hits_j) rhs(std::lower_bound(touched.begin(), touched.end(), j) - touched.begin()) = 1.0;
  const Eigen::VectorXd x = sub.completeOrthogonalDecomposition().solve(rhs);
  for (Index c = 0; c < nj; ++c) col.values[c] = x(c);
  col.residual2 = (sub * x - rhs).squaredNorm() + (hits_j ? 0.0 : 1.0);
  return col;
}

/// Right-form approximate inverse and its residual ||I - E X||_F.
inline std::pair<SparseMatrix, double> spai_right(const SparseMatrix& e,
                                                  const SparsityPattern& pat) {
  const Index n = e.rows();
  const SparseMatrix et = transpose(e);
  const SparsityPattern patt = transpose(pat);
  std::vector<SpaiColumn> cols(static_cast<std::size_t>(n));
  parallel_for(
      n,
      [&](Index begin, Index end) {
        for (Index j = begin; j < end; ++j) cols[j] = spai_column(et, patt, j);
      },
      16);
  // columns were computed as rows of X^T
  std::vector<Index> ptr(static_cast<std::size_t>(n + 1), 0);
  std::vector<Index> idx;
  std::vector<double> val;
  double res2 = 0.0;
  for (Index j = 0; j < n; ++j) {
    idx.insert(idx.end(), cols[j].rows.begin(), cols[j].rows.end());
    val.insert(val.end(), cols[j].values.begin(), cols[j].values.end());
    ptr[j + 1] = static_cast<Index>(idx.size());
    res2 += cols[j].residual2;
  }
  const SparseMatrix xt(n, n, std::move(ptr), std::move(idx), std::move(val));
  return {canonicalize(transpose(xt)), std::sqrt(res2)};
}

}  // namespace detail

/// Approximate inverse of E on `pat`. Both ||I - E X|| and ||I - X E|| are
/// minimized column-wise; the form with the smaller residual is returned
/// (the right form on ties). Rank-deficient subproblems get the
/// minimum-norm solution.
inline SpaiResult spai(const SparseMatrix& e, const SparsityPattern& pat) {
  if (e.rows() != e.cols())
    throw ShapeError("spai: E is " + detail::shape_str(e.rows(), e.cols()));
  if (pat.rows() != e.rows() || pat.cols() != e.cols())
    throw ShapeError("spai: pattern is " + detail::shape_str(pat.rows(), pat.cols()) +
                     ", E is " + detail::shape_str(e.rows(), e.cols()));
  auto [right, rres] = detail::spai_right(e, pat);
  // X E ≈ I  <=>  E^T X^T ≈ I
  auto [left_t, lres] = detail::spai_right(transpose(e), transpose(pat));
  SpaiResult out;
  out.right_residual = rres;
  out.left_residual = lres;
  if (lres < rres) {
    out.inverse = transpose(left_t);
    out.residual = lres;
    out.form = SpaiForm::Left;
  } else {
    out.inverse = std::move(right);
    out.residual = rres;
    out.form = SpaiForm::Right;
  }
  return out;
}

}  // namespace bandlq
