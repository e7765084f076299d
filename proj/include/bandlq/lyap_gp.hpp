#pragma once

// Pattern-constrained minimization of J(Z) = ||P - E^T Z Abar - Abar^T Z E||_F^2
// by gradient projection with Armijo backtracking, started from a sparse
// quadrature-of-exponentials guess.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bandlq/error.hpp"
#include "bandlq/faber.hpp"
#include "bandlq/lyapunov.hpp"
#include "bandlq/pattern.hpp"
#include "bandlq/report.hpp"
#include "bandlq/spai.hpp"
#include "bandlq/sparse.hpp"
#include "bandlq/spectrum.hpp"

namespace bandlq {

struct GpConfig {
  double delta_bar = 0.0;  ///< initial Armijo step; <= 0 selects default_delta_bar()
  double zeta = 0.5;       ///< backtracking factor
  double sigma = 1e-4;     ///< sufficient-decrease constant
  Index max_iter = 4000;
  Index q = 40;  ///< quadrature half-width
  Index k1 = 1;  ///< approximate-inverse pattern order
  Index stagnation_window = 20;
  double stagnation_tol = 1e-12;
  Index max_backtracks = 60;

  void validate() const {
    if (!(zeta > 0.0 && zeta < 1.0)) throw InvalidArgument("zeta must lie in (0, 1)");
    if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
    if (max_iter < 0) throw InvalidArgument("max_iter must be >= 0");
    if (q < 1) throw InvalidArgument("q must be >= 1");
    if (k1 < 0) throw InvalidArgument("k1 must be >= 0");
  }
};

/// 1 / (8 ||E||_1 ||E||_inf ||Abar||_1 ||Abar||_inf). Since ||X||_2^2 <= ||X||_1 ||X||_inf,
/// this is at most half the reciprocal of the squared operator norm bound
/// (2 ||E||_2 ||Abar||_2)^2, so the first Armijo trial never overshoots the
/// exact line minimizer.
inline double default_delta_bar(const SparseMatrix& abar, const SparseMatrix& e) {
  const double s = norm1(e) * norm_inf(e) * norm1(abar) * norm_inf(abar);
  if (!(s > 0.0)) throw InvalidArgument("default_delta_bar: zero operator");
  return 1.0 / (8.0 * s);
}

/// J(Z) = ||P - L(Z)||_F^2.
inline double lyap_objective(const LyapunovOperator& op, const SparseMatrix& z,
                             const SparseMatrix& p) {
  const double r = frobenius(op.residual(z, p));
  return r * r;
}

/// Gradient of J restricted to `mask`: N = -2 (E R Abar^T + Abar R E^T) on mask.
inline SparseMatrix lyap_gradient(const LyapunovOperator& op, const SparseMatrix& r,
                                  const SparsityPattern& mask) {
  return scale(op.adjoint_masked(r, mask), -2.0);
}

struct InitialGuess {
  SparseMatrix x3;
  SparseMatrix approx_inverse;
  SpectrumBounds bounds;
  double spai_residual = 0.0;
  SpaiForm spai_form = SpaiForm::Right;
  double fill = 0.0;  ///< nnz(X3) / n^2
  Index peak_nnz = 0;
};

/// X3 = -sum_j psi omega_j K_j P1 K_j^T with K_j the sparsified Faber
/// approximation of exp(t_j A1), A1 = 𝓔^T Abar^T, P1 = 𝓔^T P 𝓔 and 𝓔 a sparse
/// approximate inverse of E. Symmetrized.
inline InitialGuess initial_guess(const SparseMatrix& abar, const SparseMatrix& e,
                                  const SparseMatrix& p, const GpConfig& cfg,
                                  const FaberConfig& fcfg) {
  cfg.validate();
  fcfg.validate();
  const Index n = abar.rows();
  for (const SparseMatrix* m : {&abar, &e, &p})
    if (m->rows() != n || m->cols() != n)
      throw ShapeError("initial_guess: expected " + detail::shape_str(n, n) +
                       " operands, got " + detail::shape_str(m->rows(), m->cols()));
  InitialGuess g;
  auto track = [&g](const SparseMatrix& m) { g.peak_nnz = std::max(g.peak_nnz, m.nnz()); };

  SpaiResult inv = spai(e, inverse_pattern(e, cfg.k1));
  g.spai_residual = inv.residual;
  g.spai_form = inv.form;
  g.approx_inverse = std::move(inv.inverse);
  const SparseMatrix& ei = g.approx_inverse;
  const SparseMatrix eit = transpose(ei);
  const SparseMatrix a1 = spgemm(eit, transpose(abar));
  const SparseMatrix p1 = spgemm(spgemm(eit, p), ei);
  track(ei);
  track(a1);
  track(p1);

  g.bounds = spectrum_bounds(a1);
  if (!g.bounds.stable())
    throw InvalidArgument("initial_guess: transformed matrix is not stable (lambda_RL = " +
                          std::to_string(g.bounds.lambda_RL) + ")");
  const Quadrature quad = quadrature_nodes(cfg.q, g.bounds);

  SparseMatrix x = SparseMatrix::zeros(n, n);
  for (const auto& node : quad.nodes) {
    const SparseMatrix k = faber_expm(a1, node.t, g.bounds, fcfg);
    const SparseMatrix kp = spgemm(k, p1);
    const SparseMatrix term = spgemm(kp, transpose(k));
    track(k);
    track(kp);
    track(term);
    x = spadd(x, term, 1.0, -quad.psi * node.omega);
    track(x);
  }
  g.x3 = symmetric_part(x);
  track(g.x3);
  g.fill = static_cast<double>(g.x3.nnz()) / (static_cast<double>(n) * static_cast<double>(n));
  return g;
}

struct GpSolution {
  SparseMatrix z;
  SolveReport report;
};

/// Gradient projection Z <- project(Z - delta N, Zpat), delta = zeta^g delta_bar with
/// g the first integer meeting J(Z) - J(Z') >= sigma <N, Z - Z'>.
///
/// Along the step the residual is R + delta L(N), so J is the exact quadratic
/// J + 2 delta <R, L(N)> + delta^2 ||L(N)||^2 and backtracking costs one
/// application of L per iteration.
/// Stops after max_iter iterations, when J decreases by less than
/// stagnation_tol (relative) over stagnation_window iterations, or when
/// backtracking exceeds max_backtracks (stall).
inline GpSolution solve_lyap_gp(const SparseMatrix& abar, const SparseMatrix& e,
                                const SparseMatrix& p, const SparsityPattern& zpat,
                                const SparseMatrix& x0, const GpConfig& cfg,
                                const SparseMatrix* exact = nullptr) {
  cfg.validate();
  Stopwatch clock;
  const LyapunovOperator op(abar, e);
  const Index n = op.size();
  if (p.rows() != n || p.cols() != n || x0.rows() != n || x0.cols() != n ||
      zpat.rows() != n || zpat.cols() != n)
    throw ShapeError("solve_lyap_gp: operands must be " + detail::shape_str(n, n));
  const double delta_bar = cfg.delta_bar > 0.0 ? cfg.delta_bar : default_delta_bar(abar, e);

  GpSolution out;
  auto& rep = out.report;
  rep.method = "gp";
  rep.n = n;
  rep.nnz_pattern = zpat.nnz();
  auto track = [&rep](const SparseMatrix& m) { rep.peak_nnz = std::max(rep.peak_nnz, m.nnz()); };

  SparseMatrix z = project(x0, zpat);
  SparseMatrix r = op.residual(z, p);
  double j = fro_inner(r, r);
  rep.history.push_back(j);
  track(z);
  track(r);

  for (Index it = 0; it < cfg.max_iter; ++it) {
    const SparseMatrix grad = lyap_gradient(op, r, zpat);
    const double gnorm2 = fro_inner(grad, grad);
    if (gnorm2 == 0.0) {
      rep.converged = true;
      break;
    }
    const SparseMatrix lg = op.apply(grad);
    track(grad);
    track(lg);
    const double rl = fro_inner(r, lg);
    const double ll = fro_inner(lg, lg);

    double delta = delta_bar;
    bool accepted = false;
    for (Index g = 0; g <= cfg.max_backtracks; ++g) {
      // R(delta) = R + delta L(N)
      const double jd = j + 2.0 * delta * rl + delta * delta * ll;
      if (j - jd >= cfg.sigma * delta * gnorm2) {
        accepted = true;
        break;
      }
      delta *= cfg.zeta;
    }
    if (!accepted) {
      rep.stalled = true;
      break;
    }
    z = project(spadd(z, grad, 1.0, -delta), zpat);
    if ((it + 1) % 100 == 0)
      r = op.residual(z, p);
    else
      r = spadd(r, lg, 1.0, delta);
    j = fro_inner(r, r);
    rep.iterations = it + 1;
    rep.history.push_back(j);
    track(z);
    track(r);

    const auto w = static_cast<std::size_t>(cfg.stagnation_window);
    if (w > 0 && rep.history.size() > w) {
      const double old = rep.history[rep.history.size() - 1 - w];
      if (old - j < cfg.stagnation_tol * old) break;
    }
  }
  if (!rep.stalled) rep.converged = true;
  out.z = symmetric_part(z);
  rep.final_residual = j;
  if (exact) {
    const double denom = frobenius(*exact);
    if (denom > 0.0) rep.error = frobenius(spadd(out.z, *exact, 1.0, -1.0)) / denom;
  }
  rep.wall_ms = clock.ms();
  return out;
}

/// Initial guess followed by gradient projection; the report merges both
/// stages (peak nonzeros include the guess assembly).
inline GpSolution solve_lyap_gp_initialized(const SparseMatrix& abar, const SparseMatrix& e,
                                            const SparseMatrix& p, const SparsityPattern& zpat,
                                            const GpConfig& cfg, const FaberConfig& fcfg,
                                            const SparseMatrix* exact = nullptr) {
  Stopwatch clock;
  const InitialGuess g = initial_guess(abar, e, p, cfg, fcfg);
  GpSolution out = solve_lyap_gp(abar, e, p, zpat, g.x3, cfg, exact);
  auto& rep = out.report;
  rep.peak_nnz = std::max(rep.peak_nnz, g.peak_nnz);
  rep.q = cfg.q;
  rep.p = fcfg.p;
  rep.k1 = cfg.k1;
  rep.k2 = fcfg.k2;
  rep.spai_residual = g.spai_residual;
  rep.x3_fill = g.fill;
  rep.wall_ms = clock.ms();
  return out;
}

}  // namespace bandlq
