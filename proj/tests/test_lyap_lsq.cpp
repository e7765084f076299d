#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "support.hpp"

using namespace bandlq;
using namespace testing_support;

namespace {

// Column (i, j) of M is vec(E^T e_i e_j^T Abar + Abar^T e_i e_j^T E), built densely.
Dense explicit_m(const Dense& abar, const Dense& e) {
  const Index n = abar.rows();
  Dense m(n * n, n * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      Dense unit = Dense::Zero(n, n);
      unit(i, j) = 1.0;
      const Dense img = e.transpose() * unit * abar + abar.transpose() * unit * e;
      m.col(j * n + i) = Eigen::Map<const Eigen::VectorXd>(img.data(), n * n);
    }
  return m;
}

void expect_matches_explicit(const ReducedSystem& sys, const Dense& m, const Dense& p,
                             double tol) {
  const Index n = sys.n;
  const Dense m1 = dense(sys.m1);
  std::set<Index> kept;
  for (std::size_t r = 0; r < sys.row_map.size(); ++r) {
    const auto [rr, ss] = sys.row_map[r];
    const Index eq = ss * n + rr;
    kept.insert(eq);
    EXPECT_EQ(sys.p1[r], p(rr, ss));
    for (std::size_t c = 0; c < sys.column_map.size(); ++c) {
      const auto [i, j] = sys.column_map[c];
      EXPECT_NEAR(m1(static_cast<Index>(r), static_cast<Index>(c)), m(eq, j * n + i), tol);
    }
  }
  // dropped equations carry neither coefficients nor right-hand side
  for (Index eq = 0; eq < n * n; ++eq) {
    if (kept.count(eq)) continue;
    EXPECT_EQ(p(eq % n, eq / n), 0.0);
    for (const auto& [i, j] : sys.column_map) EXPECT_EQ(m(eq, j * n + i), 0.0);
  }
}

}  // namespace

TEST(AssembleReduced, Scalar) {
  const ReducedSystem sys = assemble_reduced(SparseMatrix::identity(1, -0.7), SparseMatrix::identity(1),
                                             SparseMatrix::identity(1, 3.0), SparsityPattern::identity(1));
  ASSERT_EQ(sys.m1.nnz(), 1);
  EXPECT_DOUBLE_EQ(sys.m1.coeff(0, 0), -1.4);
  ASSERT_EQ(sys.p1.size(), 1u);
  EXPECT_EQ(sys.p1[0], 3.0);
}

TEST(AssembleReduced, DiagonalSystem) {
  const SparseMatrix abar = SparseMatrix::diagonal(std::vector<double>{-1, -2, -3});
  const ReducedSystem sys = assemble_reduced(abar, SparseMatrix::identity(3), SparseMatrix::identity(3),
                                             SparsityPattern::identity(3));
  const Dense m1 = dense(sys.m1);
  EXPECT_EQ(max_abs_diff(m1, Dense(Eigen::Vector3d(-2, -4, -6).asDiagonal())), 0.0);
}

TEST(AssembleReduced, ColumnsMatchExplicitKroneckerN6) {
  const SparseMatrix abar = random_banded(6, 1, 41), e = random_banded(6, 1, 42);
  const SparseMatrix p = random_rhs(6, 1, 43);
  PatternConfig cfg;
  cfg.w = 0;
  const SparsityPattern pat = apriori_pattern(abar, e, p, cfg);
  const ReducedSystem sys = assemble_reduced(abar, e, p, pat);
  expect_matches_explicit(sys, explicit_m(dense(abar), dense(e)), dense(p), 1e-15);
}

TEST(AssembleReduced, FullPatternReproducesExplicitMatrix) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Index n = 2 + static_cast<Index>(s % 7);
    const SparseMatrix abar = random_sparse(n, n, 0.5, s), e = random_sparse(n, n, 0.5, s + 50);
    const SparseMatrix p = random_sparse(n, n, 0.5, s + 100);
    const ReducedSystem sys = assemble_reduced(abar, e, p, SparsityPattern::full(n, n));
    expect_matches_explicit(sys, explicit_m(dense(abar), dense(e)), dense(p), 0.0);
  }
}

TEST(AssembleReduced, KeepsRightHandSideOnlyRows) {
  const SparseMatrix abar = SparseMatrix::diagonal(std::vector<double>{-1, -2, -3});
  const SparseMatrix p = SparseMatrix::constant(SparsityPattern::full(3, 3), -1.0);
  const ReducedSystem sys = assemble_reduced(abar, SparseMatrix::identity(3), p,
                                             SparsityPattern::identity(3));
  EXPECT_EQ(sys.m1.rows(), 9);
  EXPECT_EQ(sys.m1.nnz(), 3);
  // 6 equations have only the right-hand side: the optimum leaves residual sqrt(6)
  const CglsResult r = cgls(sys, {1e-12, 100});
  EXPECT_NEAR(r.residual_norm, std::sqrt(6.0), 1e-12);
}

TEST(AssembleReduced, Invariants) {
  const DescriptorModel m = generate_model(grid2d(6, 6, Discretization::FiniteElement2D), 0.3, 3);
  const SparseMatrix p = scale(spgemm(transpose(m.C), m.C), -1.0);
  const SparsityPattern pat = apriori_pattern(m.A, m.E, p, {});
  const ReducedSystem sys = assemble_reduced(m.A, m.E, p, pat);
  EXPECT_EQ(sys.m1.cols(), pat.nnz());
  EXPECT_LE(sys.m1.rows(), m.states() * m.states());
  const SparseMatrix m1t = transpose(sys.m1);
  for (Index c = 0; c < m1t.rows(); ++c) EXPECT_GE(m1t.row_cols(c).size(), 1u);
  std::set<std::pair<Index, Index>> seen(sys.column_map.begin(), sys.column_map.end());
  EXPECT_EQ(seen.size(), sys.column_map.size());
}

TEST(AssembleReduced, Errors) {
  EXPECT_THROW(assemble_reduced(SparseMatrix::identity(2), SparseMatrix::identity(2),
                                SparseMatrix::identity(2), SparsityPattern(2, 2, {0, 0, 0}, {})),
               InvalidArgument);
  EXPECT_THROW(assemble_reduced(SparseMatrix::identity(2), SparseMatrix::identity(3),
                                SparseMatrix::identity(2), SparsityPattern::identity(2)),
               ShapeError);
}

TEST(Cgls, IdentityInOneIteration) {
  const SparseMatrix id = SparseMatrix::identity(5);
  const std::vector<double> b{1, -2, 3, 0.5, 4};
  const CglsResult r = cgls(MatrixOperator{id}, b, {1e-12, 10});
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.converged);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(r.x[i], b[i], 1e-15);
}

TEST(Cgls, ScalarLyapunov) {
  const SparseMatrix m = SparseMatrix::identity(1, -2.0);
  const std::vector<double> b{-2.0};
  EXPECT_NEAR(cgls(MatrixOperator{m}, b, {}).x[0], 1.0, 1e-15);
}

TEST(Cgls, MatchesDenseNormalEquations) {
  const SparseMatrix a = random_banded(20, 2, 71);
  const SparseMatrix tall = SparseMatrix::from_triplets(
      26, 20, [&] {
        auto t = a.triplets();
        for (const auto& x : random_sparse(6, 20, 0.3, 72).triplets()) t.push_back({x.row + 20, x.col, x.value});
        return t;
      }());
  std::vector<double> b(26);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::sin(1.0 + static_cast<double>(i));
  const CglsResult r = cgls(MatrixOperator{tall}, b, {1e-8, 1000});
  ASSERT_TRUE(r.converged);
  const Dense d = dense(tall);
  const Eigen::VectorXd ref = (d.transpose() * d).ldlt().solve(d.transpose() * Eigen::Map<const Eigen::VectorXd>(b.data(), 26));
  for (Index i = 0; i < 20; ++i) EXPECT_NEAR(r.x[i], ref(i), 1e-6);
}

TEST(Cgls, NormalResidualDecreasesOverWindows) {
  const DescriptorModel m = generate_model(grid2d(8, 8), 0.3, 5);
  const SparseMatrix p = scale(spgemm(transpose(m.C), m.C), -1.0);
  const ReducedSystem sys = assemble_reduced(m.A, m.E, p, apriori_pattern(m.A, m.E, p, {}));
  const CglsResult r = cgls(sys, {1e-10, 2000});
  const auto& h = r.normal_residuals;
  for (std::size_t k = 2; k + 5 < h.size(); ++k) EXPECT_LE(h[k + 5], h[k]) << "k = " << k;
}

TEST(SolveLyapLsq, Scalar) {
  const auto sol = solve_lyap_lsq(SparseMatrix::identity(1, -1.0), SparseMatrix::identity(1),
                                  SparseMatrix::identity(1, -2.0), SparsityPattern::identity(1), {});
  EXPECT_NEAR(sol.z.coeff(0, 0), 1.0, 1e-15);
}

TEST(SolveLyapLsq, FullPatternMatchesDenseOracle) {
  for (auto g : {grid2d(6, 6), grid2d(7, 7, Discretization::FiniteElement2D),
                 grid1d(40, Discretization::FiniteElement1D)}) {
    const DescriptorModel m = generate_model(g, 0.3, 9);
    const LqProblem prob = LqProblem::uniform(m);
    auto [abar, p] = newton_step_operands(feedback(SparseMatrix::identity(m.states(), 10.0), prob), prob);
    const SparseMatrix exact = oracle::dense_lyap(abar, m.E, p);
    const auto sol = solve_lyap_lsq(abar, m.E, p, SparsityPattern::full(m.states(), m.states()),
                                    {1e-10, 100000}, &exact);
    ASSERT_TRUE(sol.report.error.has_value());
    EXPECT_LE(*sol.report.error, 1e-6) << "n = " << m.states();
  }
}

TEST(SolveLyapLsq, HeatAnalog169W1) {
  const DescriptorModel m = heat_analog(13);
  const LqProblem prob = LqProblem::uniform(m);
  auto [abar, p] = newton_step_operands(feedback(SparseMatrix::identity(m.states(), 10.0), prob), prob);
  const SparseMatrix exact = oracle::dense_lyap(abar, m.E, p);
  const auto sol = solve_lyap_lsq(abar, m.E, p, apriori_pattern(abar, m.E, p, {}), {1e-5, 100000}, &exact);
  RecordProperty("e", csv::num(*sol.report.error));
  EXPECT_LE(*sol.report.error, 5e-3);
}

TEST(SolveLyapLsq, ResidualIdentity) {
  const DescriptorModel m = generate_model(grid2d(7, 6, Discretization::FiniteElement2D), 0.4, 12);
  const SparseMatrix p = scale(spgemm(transpose(m.C), m.C), -1.0);
  const ReducedSystem sys = assemble_reduced(m.A, m.E, p, apriori_pattern(m.A, m.E, p, {}));
  const CglsResult r = cgls(sys, {1e-6, 1000});
  const SparseMatrix z = scatter(sys, r.x);
  const double matrix_form = frobenius(LyapunovOperator(m.A, m.E).residual(z, p));
  const std::vector<double> mz = multiply(sys.m1, r.x);
  double vec_form = 0.0;
  for (std::size_t i = 0; i < mz.size(); ++i) vec_form += (sys.p1[i] - mz[i]) * (sys.p1[i] - mz[i]);
  vec_form = std::sqrt(vec_form);
  EXPECT_NEAR(matrix_form, vec_form, 1e-12 * std::max(1.0, frobenius(p)));
}
