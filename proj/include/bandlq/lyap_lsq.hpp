#pragma once

// Pattern-restricted least-squares solution of E^T Z Abar + Abar^T Z E = P.
// The unknowns are the entries of Z on a given pattern; the coefficient
// matrix M1 is the corresponding column subset of
// M = Abar^T ⊗ E^T + E^T ⊗ Abar^T, assembled column by column without
// forming M.

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bandlq/cgls.hpp"
#include "bandlq/lyapunov.hpp"
#include "bandlq/report.hpp"
#include "bandlq/sparse.hpp"

namespace bandlq {

struct ReducedSystem {
  Index n = 0;
  SparseMatrix m1;                                  ///< n2 x n1
  std::vector<double> p1;                           ///< n2
  std::vector<std::pair<Index, Index>> column_map;  ///< unknown -> (i, j) of Z
  std::vector<std::pair<Index, Index>> row_map;     ///< equation -> (r, s) of residual
};

namespace detail {

struct MergedEntry {
  Index col;
  double e;
  double a;
  bool has_e;
  bool has_a;
};

// Row i of E and row i of Abar merged on column index.
inline std::vector<std::vector<MergedEntry>> merge_rows(const SparseMatrix& e,
                                                        const SparseMatrix& a) {
  std::vector<std::vector<MergedEntry>> out(static_cast<std::size_t>(e.rows()));
  for (Index i = 0; i < e.rows(); ++i) {
    auto ec = e.row_cols(i);
    auto ev = e.row_vals(i);
    auto ac = a.row_cols(i);
    auto av = a.row_vals(i);
    auto& row = out[i];
    std::size_t p = 0, q = 0;
    while (p < ec.size() || q < ac.size()) {
      if (q == ac.size() || (p < ec.size() && ec[p] < ac[q])) {
        row.push_back({ec[p], ev[p], 0.0, true, false});
        ++p;
      } else if (p == ec.size() || ac[q] < ec[p]) {
        row.push_back({ac[q], 0.0, av[q], false, true});
        ++q;
      } else {
        row.push_back({ec[p], ev[p], av[q], true, true});
        ++p;
        ++q;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Builds M1 and p1 for the unknowns on `zpat`.
///
/// Unknown Z(i,j) enters equation (r,s) with coefficient
/// E(i,r) Abar(j,s) + Abar(i,r) E(j,s). Equations with no structural
/// coefficient are dropped unless P(r,s) is nonzero, in which case they are
/// kept as pure residual contributors.
inline ReducedSystem assemble_reduced(const SparseMatrix& abar, const SparseMatrix& e,
                                      const SparseMatrix& p, const SparsityPattern& zpat) {
  const Index n = abar.rows();
  for (const SparseMatrix* m : {&abar, &e, &p})
    if (m->rows() != n || m->cols() != n)
      throw ShapeError("assemble_reduced: expected " + detail::shape_str(n, n) +
                       " operands, got " + detail::shape_str(m->rows(), m->cols()));
  if (zpat.rows() != n || zpat.cols() != n)
    throw ShapeError("assemble_reduced: pattern is " +
                     detail::shape_str(zpat.rows(), zpat.cols()));
  if (zpat.nnz() == 0) throw InvalidArgument("assemble_reduced: empty pattern");

  const auto merged = detail::merge_rows(e, abar);
  const Index n1 = zpat.nnz();

  ReducedSystem sys;
  sys.n = n;
  sys.column_map.reserve(static_cast<std::size_t>(n1));

  // M1^T in CSR: one row per unknown, columns are flat equation ids r*n+s.
  std::vector<Index> tptr(static_cast<std::size_t>(n1 + 1), 0);
  std::vector<Index> tidx;
  std::vector<double> tval;
  Index u = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j : zpat.row(i)) {
      sys.column_map.emplace_back(i, j);
      for (const auto& ri : merged[i])
        for (const auto& sj : merged[j]) {
          if (!((ri.has_e && sj.has_a) || (ri.has_a && sj.has_e))) continue;
          tidx.push_back(ri.col * n + sj.col);
          tval.push_back(ri.e * sj.a + ri.a * sj.e);
        }
      tptr[++u] = static_cast<Index>(tidx.size());
    }
  }

  // Retained equations: any structural coefficient, or a nonzero in P.
  std::vector<Index> rows_kept(tidx.begin(), tidx.end());
  for (Index r = 0; r < n; ++r) {
    auto c = p.row_cols(r);
    auto v = p.row_vals(r);
    for (std::size_t k = 0; k < c.size(); ++k)
      if (v[k] != 0.0) rows_kept.push_back(r * n + c[k]);
  }
  std::sort(rows_kept.begin(), rows_kept.end());
  rows_kept.erase(std::unique(rows_kept.begin(), rows_kept.end()), rows_kept.end());
  const auto n2 = static_cast<Index>(rows_kept.size());
  for (Index& eq : tidx)
    eq = static_cast<Index>(std::lower_bound(rows_kept.begin(), rows_kept.end(), eq) -
                            rows_kept.begin());

  SparseMatrix m1t(n1, n2, std::move(tptr), std::move(tidx), std::move(tval));
  sys.m1 = transpose(m1t);

  sys.row_map.reserve(rows_kept.size());
  sys.p1.reserve(rows_kept.size());
  for (Index eq : rows_kept) {
    const Index r = eq / n, s = eq % n;
    sys.row_map.emplace_back(r, s);
    sys.p1.push_back(p.coeff(r, s));
  }
  return sys;
}

inline CglsResult cgls(const ReducedSystem& sys, const CglsConfig& cfg,
                       std::span<const double> x0 = {}) {
  return cgls(MatrixOperator{sys.m1}, sys.p1, cfg, x0);
}

/// Reads the unknowns of `sys` out of a matrix (entries outside it count as 0).
inline std::vector<double> gather(const ReducedSystem& sys, const SparseMatrix& z) {
  if (z.rows() != sys.n || z.cols() != sys.n)
    throw ShapeError("gather: matrix is " + detail::shape_str(z.rows(), z.cols()) +
                     ", expected " + detail::shape_str(sys.n, sys.n));
  std::vector<double> z1(sys.column_map.size());
  for (std::size_t k = 0; k < z1.size(); ++k)
    z1[k] = z.coeff(sys.column_map[k].first, sys.column_map[k].second);
  return z1;
}

/// Places the reduced unknowns back at their (i, j) positions.
inline SparseMatrix scatter(const ReducedSystem& sys, std::span<const double> z1) {
  if (z1.size() != sys.column_map.size())
    throw ShapeError("scatter: " + std::to_string(z1.size()) + " values for " +
                     std::to_string(sys.column_map.size()) + " unknowns");
  std::vector<Triplet> t;
  t.reserve(z1.size());
  for (std::size_t k = 0; k < z1.size(); ++k)
    t.push_back({sys.column_map[k].first, sys.column_map[k].second, z1[k]});
  return SparseMatrix::from_triplets(sys.n, sys.n, std::move(t));
}

struct LyapSolution {
  SparseMatrix z;
  SolveReport report;
};

/// Reduced least-squares solve followed by symmetrization (Z + Z^T) / 2.
/// When `exact` is given, the report carries the relative Frobenius error;
/// `start`, when given, is projected onto the pattern and used as the CGLS
/// starting point.
inline LyapSolution solve_lyap_lsq(const SparseMatrix& abar, const SparseMatrix& e,
                                   const SparseMatrix& p, const SparsityPattern& zpat,
                                   const CglsConfig& cfg,
                                   const SparseMatrix* exact = nullptr,
                                   const SparseMatrix* start = nullptr) {
  Stopwatch clock;
  const ReducedSystem sys = assemble_reduced(abar, e, p, zpat);
  const CglsResult r = start ? cgls(sys, cfg, gather(sys, *start)) : cgls(sys, cfg);
  LyapSolution out;
  out.z = symmetric_part(scatter(sys, r.x));
  auto& rep = out.report;
  rep.method = "lsq";
  rep.n = sys.n;
  rep.nnz_pattern = zpat.nnz();
  rep.nnz_m1 = sys.m1.nnz();
  rep.peak_nnz = sys.m1.nnz();
  rep.iterations = r.iterations;
  rep.final_residual = r.relative_residual;
  rep.converged = r.converged;
  rep.history = r.normal_residuals;
  if (exact) {
    const double denom = frobenius(*exact);
    if (denom > 0.0) rep.error = frobenius(spadd(out.z, *exact, 1.0, -1.0)) / denom;
  }
  rep.wall_ms = clock.ms();
  return out;
}

}  // namespace bandlq
