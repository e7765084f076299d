#pragma once

// Shared fixtures for the test suites: seeded random instances and small
// dense helpers that do not go through the library kernels.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bandlq/bandlq.hpp"
#include "bandlq/oracle.hpp"

namespace testing_support {

using bandlq::Index;
using bandlq::SparseMatrix;
using bandlq::Triplet;
using Dense = Eigen::MatrixXd;

inline Dense dense(const SparseMatrix& a) {
  Dense d = Dense::Zero(a.rows(), a.cols());
  for (const auto& t : a.triplets()) d(t.row, t.col) = t.value;
  return d;
}

inline double max_abs_diff(const Dense& a, const Dense& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline SparseMatrix random_sparse(Index rows, Index cols, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0), v(-1.0, 1.0);
  std::vector<Triplet> t;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (u(rng) < density) t.push_back({i, j, v(rng)});
  return SparseMatrix::from_triplets(rows, cols, std::move(t));
}

inline SparseMatrix random_banded(Index n, Index bw, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(-1.0, 1.0);
  std::vector<Triplet> t;
  for (Index i = 0; i < n; ++i)
    for (Index j = std::max<Index>(0, i - bw); j <= std::min(n - 1, i + bw); ++j)
      t.push_back({i, j, v(rng)});
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

/// Banded Abar whose symmetric part is negative definite (diagonal dominates
/// both row and column sums), so every pencil with SPD E is stable.
inline SparseMatrix random_stable(Index n, Index bw, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(-1.0, 1.0), pos(0.5, 1.5);
  Dense a = Dense::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = std::max<Index>(0, i - bw); j <= std::min(n - 1, i + bw); ++j)
      if (i != j) a(i, j) = v(rng);
  for (Index i = 0; i < n; ++i)
    a(i, i) = -(a.row(i).cwiseAbs().sum() + a.col(i).cwiseAbs().sum() + pos(rng));
  return bandlq::oracle::from_dense(a);
}

/// Banded SPD E with unit-ish diagonal.
inline SparseMatrix random_spd(Index n, Index bw, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(-0.2, 0.2);
  Dense e = Dense::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j <= std::min(n - 1, i + bw); ++j) e(i, j) = e(j, i) = v(rng);
  for (Index i = 0; i < n; ++i) e(i, i) = 1.0 + e.row(i).cwiseAbs().sum();
  return bandlq::oracle::from_dense(e);
}

/// Symmetric negative semidefinite right-hand side -G^T G with banded G.
inline SparseMatrix random_rhs(Index n, Index bw, std::uint64_t seed) {
  const Dense g = dense(random_banded(n, bw, seed));
  return bandlq::oracle::from_dense(-(g.transpose() * g));
}

inline bandlq::GridSpec grid2d(Index nx, Index ny,
                               bandlq::Discretization d = bandlq::Discretization::FiniteDifference) {
  bandlq::GridSpec g;
  g.dimension = 2;
  g.nodes = {nx, ny};
  g.length = {1.0, 1.0};
  g.discretization = d;
  return g;
}

/// FE-bilinear heat model on the unit square, diffusivity 0.1, actuators and
/// sensors on half of the nodes. With Z0 = 10 I the first Newton operator has
/// cond(Abar) ~ 12 at nx = 13.
inline bandlq::DescriptorModel heat_analog(Index nx, std::uint64_t seed = 1) {
  bandlq::GridSpec g = grid2d(nx, nx, bandlq::Discretization::FiniteElement2D);
  g.diffusivity = 0.1;
  return bandlq::generate_model(g, 0.5, seed);
}

inline bandlq::GridSpec grid1d(Index n,
                               bandlq::Discretization d = bandlq::Discretization::FiniteDifference,
                               double length = 1.0) {
  bandlq::GridSpec g;
  g.dimension = 1;
  g.nodes = {n};
  g.length = {length};
  g.discretization = d;
  return g;
}

/// E = 1, A = -1, B = C = 1, Q = R = 1.
inline bandlq::LqProblem scalar_problem() {
  bandlq::DescriptorModel m;
  m.E = SparseMatrix::identity(1);
  m.A = SparseMatrix::identity(1, -1.0);
  m.B = SparseMatrix::identity(1);
  m.C = SparseMatrix::identity(1);
  m.permutation = bandlq::Permutation::identity(1);
  m.grid = grid1d(2);
  return bandlq::LqProblem::uniform(std::move(m));
}

}  // namespace testing_support
