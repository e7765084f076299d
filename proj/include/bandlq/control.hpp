#pragma once

// Inexact Newton iteration for the generalized Riccati equation
// C^T Q C + E^T Z A + A^T Z E - E^T Z B R^{-1} B^T Z E = 0, feedback synthesis
// and closed-loop simulation.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bandlq/cgls.hpp"
#include "bandlq/error.hpp"
#include "bandlq/faber.hpp"
#include "bandlq/lyap_gp.hpp"
#include "bandlq/lyap_lsq.hpp"
#include "bandlq/lyapunov.hpp"
#include "bandlq/pattern.hpp"
#include "bandlq/problem.hpp"
#include "bandlq/report.hpp"
#include "bandlq/sparse.hpp"

namespace bandlq {

enum class LyapMethod { Lsq, Gp };

inline std::string to_string(LyapMethod m) { return m == LyapMethod::Lsq ? "lsq" : "gp"; }

inline LyapMethod parse_lyap_method(const std::string& s) {
  if (s == "lsq") return LyapMethod::Lsq;
  if (s == "gp") return LyapMethod::Gp;
  throw InvalidArgument("unknown Lyapunov method '" + s + "' (expected lsq or gp)");
}

struct NewtonConfig {
  double z0_scale = 10.0;
  Index n_max = 20;
  LyapMethod method = LyapMethod::Lsq;
  double residual_tol = 1e-6;  ///< stop when v_k <= residual_tol * v_1
  PatternConfig pattern;
  bool full_pattern = false;  ///< use the dense pattern instead of the a priori one
  CglsConfig cgls;
  GpConfig gp;
  FaberConfig faber;
  double divergence_factor = 10.0;
  Index divergence_steps = 3;
  bool warm_start = true;  ///< start CGLS from the previous Newton iterate

  void validate() const {
    if (n_max < 1) throw InvalidArgument("N_max must be >= 1");
    if (!(residual_tol > 0.0)) throw InvalidArgument("residual_tol must be positive");
    pattern.validate();
  }
};

struct NewtonIterationReport {
  Index k = 0;
  double v = 0.0;              ///< ||D[Z_k]||_F
  double lyap_residual = 0.0;  ///< ||E^T Z_k Abar + Abar^T Z_k E - P_k||_F
  Index nnz_z = 0;
  Index nnz_f = 0;
  Index lyap_iterations = 0;
  bool lyap_converged = false;
  double wall_ms = 0.0;
};

enum class NewtonStatus { Converged, MaxIterations, Diverged, LyapunovFailure };

inline std::string to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::Converged: return "converged";
    case NewtonStatus::MaxIterations: return "max_iterations";
    case NewtonStatus::Diverged: return "diverged";
    case NewtonStatus::LyapunovFailure: return "lyapunov_failure";
  }
  return "?";
}

struct RiccatiSolution {
  SparseMatrix Z;
  SparseMatrix F;
  SparsityPattern pattern;  ///< frozen solution pattern
  std::vector<NewtonIterationReport> reports;
  std::vector<SolveReport> lyap_reports;
  NewtonStatus status = NewtonStatus::MaxIterations;
  std::string message;
};

namespace detail {

inline void require_symmetric(const SparseMatrix& z, const char* what) {
  if (z.rows() != z.cols())
    throw ShapeError(std::string(what) + ": Z is " + shape_str(z.rows(), z.cols()));
  const double asym = asymmetry(z);
  if (asym > 1e-10 * std::max(1.0, frobenius(z)))
    throw InvalidArgument(std::string(what) + ": Z is not symmetric (||Z - Z^T||_F = " +
                          std::to_string(asym) + ")");
}

inline SparseMatrix ctqc(const LqProblem& prob) {
  const SparseMatrix& c = prob.model.C;
  return spgemm(spgemm(transpose(c), SparseMatrix::diagonal(prob.Q)), c);
}

inline SparseMatrix r_inverse(const LqProblem& prob) {
  std::vector<double> d(prob.R.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = 1.0 / prob.R[i];
  return SparseMatrix::diagonal(d);
}

inline void require_square_of(const SparseMatrix& z, Index n, const char* what) {
  if (z.rows() != n || z.cols() != n)
    throw ShapeError(std::string(what) + ": expected " + shape_str(n, n) + ", got " +
                     shape_str(z.rows(), z.cols()));
}

}  // namespace detail

/// F = R^{-1} B^T Z E.
inline SparseMatrix feedback(const SparseMatrix& z, const LqProblem& prob) {
  detail::require_square_of(z, prob.model.states(), "feedback");
  const auto& m = prob.model;
  return spgemm(detail::r_inverse(prob), spgemm(spgemm(transpose(m.B), z), m.E));
}

/// D[Z] = C^T Q C + E^T Z A + A^T Z E - E^T Z B R^{-1} B^T Z E, symmetrized.
inline SparseMatrix riccati_residual(const SparseMatrix& z_in, const LqProblem& prob) {
  detail::require_square_of(z_in, prob.model.states(), "riccati_residual");
  detail::require_symmetric(z_in, "riccati_residual");
  const SparseMatrix z = symmetric_part(z_in);
  const auto& m = prob.model;
  const SparseMatrix eza = spgemm(spgemm(transpose(m.E), z), m.A);
  const SparseMatrix g = spgemm(spgemm(transpose(m.B), z), m.E);  // B^T Z E
  const SparseMatrix quad = spgemm(spgemm(transpose(g), detail::r_inverse(prob)), g);
  SparseMatrix d = spadd(detail::ctqc(prob), spadd(eza, transpose(eza)));
  return symmetric_part(spadd(d, quad, 1.0, -1.0));
}

/// Frechet derivative of D at Z applied to Y:
/// E^T Y A + A^T Y E - E^T Z B R^{-1} B^T Y E - E^T Y B R^{-1} B^T Z E.
inline SparseMatrix frechet_apply(const SparseMatrix& z, const SparseMatrix& y,
                                  const LqProblem& prob) {
  const Index n = prob.model.states();
  detail::require_square_of(z, n, "frechet_apply");
  detail::require_square_of(y, n, "frechet_apply");
  const auto& m = prob.model;
  const SparseMatrix et = transpose(m.E);
  const SparseMatrix eya = spgemm(spgemm(et, y), m.A);
  const SparseMatrix aye = spgemm(spgemm(transpose(m.A), y), m.E);
  const SparseMatrix bt = transpose(m.B);
  const SparseMatrix rinv = detail::r_inverse(prob);
  const SparseMatrix gz = spgemm(spgemm(bt, z), m.E);  // B^T Z E
  const SparseMatrix gy = spgemm(spgemm(bt, y), m.E);  // B^T Y E
  const SparseMatrix t1 = spgemm(spgemm(transpose(gz), rinv), gy);
  const SparseMatrix t2 = spgemm(spgemm(transpose(gy), rinv), gz);
  return spadd(spadd(eya, aye), spadd(t1, t2), 1.0, -1.0);
}

/// Closed-loop matrix Abar = A - B F and right-hand side P = -C^T Q C - F^T R F
/// of the Newton step's Lyapunov equation.
inline std::pair<SparseMatrix, SparseMatrix> newton_step_operands(const SparseMatrix& f,
                                                                   const LqProblem& prob) {
  const auto& m = prob.model;
  SparseMatrix abar = spadd(m.A, spgemm(m.B, f), 1.0, -1.0);
  const SparseMatrix frf = spgemm(spgemm(transpose(f), SparseMatrix::diagonal(prob.R)), f);
  SparseMatrix p = spadd(detail::ctqc(prob), frf, -1.0, -1.0);
  return {std::move(abar), std::move(p)};
}

/// ||Zhat - Zexact||_F / ||Zexact||_F.
inline double metric_e(const SparseMatrix& zhat, const SparseMatrix& zexact) {
  detail::require_same_shape(zhat.rows(), zhat.cols(), zexact.rows(), zexact.cols(),
                             "metric_e");
  const double denom = frobenius(zexact);
  if (denom == 0.0) throw InvalidArgument("metric_e: exact solution has zero norm");
  return frobenius(spadd(zhat, zexact, 1.0, -1.0)) / denom;
}

/// Inexact Newton iteration from Z_0 = z0_scale I. Each step solves
/// E^T Z_k Abar + Abar^T Z_k E = P_k on a solution pattern computed from the
/// first freeze_after_newton_iter steps and then frozen.
inline RiccatiSolution solve_riccati(const LqProblem& prob, const NewtonConfig& cfg) {
  prob.validate();
  cfg.validate();
  const Index n = prob.model.states();
  const auto& m = prob.model;

  RiccatiSolution out;
  SparseMatrix z = SparseMatrix::identity(n, cfg.z0_scale);
  double v1 = 0.0;
  Index growth = 0;
  for (Index k = 1; k <= cfg.n_max; ++k) {
    Stopwatch clock;
    const SparseMatrix f = feedback(z, prob);
    auto [abar, p] = newton_step_operands(f, prob);
    if (k <= cfg.pattern.freeze_after_newton_iter || out.pattern.rows() != n)
      out.pattern = cfg.full_pattern ? SparsityPattern::full(n, n)
                                     : apriori_pattern(abar, m.E, p, cfg.pattern);

    SolveReport lrep;
    try {
      if (cfg.method == LyapMethod::Lsq) {
        const bool warm = cfg.warm_start && k > 1;
        auto sol = solve_lyap_lsq(abar, m.E, p, out.pattern, cfg.cgls, nullptr, warm ? &z : nullptr);
        z = std::move(sol.z);
        lrep = std::move(sol.report);
      } else {
        auto sol = solve_lyap_gp_initialized(abar, m.E, p, out.pattern, cfg.gp, cfg.faber);
        z = std::move(sol.z);
        lrep = std::move(sol.report);
      }
    } catch (const Error& e) {
      out.status = NewtonStatus::LyapunovFailure;
      out.message = "Newton step " + std::to_string(k) + ": " + e.what();
      break;
    }
    lrep.w = cfg.full_pattern ? -1 : cfg.pattern.w;

    NewtonIterationReport r;
    r.k = k;
    r.v = frobenius(riccati_residual(z, prob));
    r.lyap_residual = frobenius(LyapunovOperator(abar, m.E).residual(z, p));
    r.nnz_z = z.nnz();
    r.lyap_iterations = lrep.iterations;
    r.lyap_converged = lrep.converged;
    out.F = feedback(z, prob);
    r.nnz_f = nonzero_pattern(out.F).nnz();
    r.wall_ms = clock.ms();
    out.reports.push_back(r);
    out.lyap_reports.push_back(std::move(lrep));

    if (!std::isfinite(r.v)) {
      out.status = NewtonStatus::Diverged;
      out.message = "Riccati residual became non-finite at step " + std::to_string(k);
      break;
    }
    if (k == 1) v1 = r.v;
    if (r.v <= cfg.residual_tol * v1) {
      out.status = NewtonStatus::Converged;
      break;
    }
    growth = r.v > cfg.divergence_factor * v1 ? growth + 1 : 0;
    if (growth >= cfg.divergence_steps) {
      out.status = NewtonStatus::Diverged;
      out.message = "Riccati residual exceeded " + csv::num(cfg.divergence_factor) +
                    " v_1 for " + std::to_string(growth) + " consecutive steps";
      break;
    }
  }
  out.Z = std::move(z);
  if (out.F.rows() != m.inputs()) out.F = feedback(out.Z, prob);
  return out;
}

struct TrajectoryRow {
  Index step = 0;
  double t = 0.0;
  double x_norm = 0.0;
  double cost_rate = 0.0;  ///< y^T Q y + u^T R u
};

struct SimulationResult {
  std::vector<TrajectoryRow> trajectory;  ///< at most max_rows rows
  double cost = 0.0;
  std::vector<double> x_final;
};

/// Implicit Euler on E x' = (A - B F) x: (E - dt Abar) x_{i+1} = E x_i.
/// The cost is the left-endpoint sum of dt (y^T Q y + u^T R u) with y = C x
/// and u = -F x.
inline SimulationResult simulate_closed_loop(const LqProblem& prob, const SparseMatrix& f,
                                             std::span<const double> x0, double dt, Index steps,
                                             Index max_rows = 1000) {
  prob.validate();
  const auto& m = prob.model;
  const Index n = m.states();
  if (!(dt > 0.0)) throw InvalidArgument("simulate_closed_loop: dt must be positive");
  if (steps < 0) throw InvalidArgument("simulate_closed_loop: negative step count");
  if (f.rows() != m.inputs() || f.cols() != n)
    throw ShapeError("simulate_closed_loop: F is " + detail::shape_str(f.rows(), f.cols()) +
                     ", expected " + detail::shape_str(m.inputs(), n));
  if (static_cast<Index>(x0.size()) != n)
    throw ShapeError("simulate_closed_loop: x0 has length " + std::to_string(x0.size()));

  const SparseMatrix abar = spadd(m.A, spgemm(m.B, f), 1.0, -1.0);
  const SparseMatrix step_matrix = spadd(m.E, abar, 1.0, -dt);
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& t : step_matrix.triplets()) trips.emplace_back(t.row, t.col, t.value);
  Eigen::SparseMatrix<double> k(n, n);
  k.setFromTriplets(trips.begin(), trips.end());
  k.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(k);
  if (lu.info() != Eigen::Success)
    throw InvalidArgument("simulate_closed_loop: E - dt (A - B F) is singular for dt = " +
                          csv::num(dt));

  auto rate = [&](const std::vector<double>& x) {
    const std::vector<double> y = multiply(m.C, x);
    const std::vector<double> u = multiply(f, x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += prob.Q[i] * y[i] * y[i];
    for (std::size_t i = 0; i < u.size(); ++i) s += prob.R[i] * u[i] * u[i];
    return s;
  };

  SimulationResult out;
  const Index stride = std::max<Index>(1, (steps + max_rows) / max_rows);
  std::vector<double> x(x0.begin(), x0.end());
  for (Index i = 0; i <= steps; ++i) {
    const double c = rate(x);
    if (i % stride == 0 && static_cast<Index>(out.trajectory.size()) < max_rows)
      out.trajectory.push_back({i, static_cast<double>(i) * dt, detail::norm2(x), c});
    if (i == steps) break;
    out.cost += dt * c;
    const std::vector<double> ex = multiply(m.E, x);
    const Eigen::VectorXd next =
        lu.solve(Eigen::Map<const Eigen::VectorXd>(ex.data(), static_cast<Index>(n)));
    x.assign(next.data(), next.data() + n);
  }
  out.x_final = std::move(x);
  return out;
}

}  // namespace bandlq
