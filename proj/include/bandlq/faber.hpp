#pragma once

// Quadrature nodes for X = -∫ exp(tA) P exp(tA^T) dt and sparsified Faber
// expansions of exp(tA) on an ellipse enclosing the spectrum.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "bandlq/error.hpp"
#include "bandlq/sparse.hpp"
#include "bandlq/spectrum.hpp"

namespace bandlq {

struct FaberConfig {
  Index p = 30;    ///< truncation order
  Index W = 2048;  ///< DFT length for the coefficients
  Index k2 = 1;    ///< recurrence is projected onto pattern(I + A + ... + A^k2)

  void validate() const {
    if (p < 0) throw InvalidArgument("Faber order p must be >= 0");
    if (W <= 4 * p) throw InvalidArgument("Faber DFT length W must exceed 4p");
    if (k2 < 0) throw InvalidArgument("Faber pattern order k2 must be >= 0");
  }
};

struct QuadratureNode {
  Index j = 0;
  double t = 0.0;      ///< scaled node psi * t_j
  double omega = 0.0;  ///< weight omega_j
};

struct Quadrature {
  double psi = 0.0;
  std::vector<QuadratureNode> nodes;  ///< j = -q..q
};

/// psi = 3 / (2 |lambda_RL|), omega_j = (q + q e^{-2j/sqrt q})^{-1/2},
/// t_j = log(e^{j/sqrt q} + sqrt(1 + e^{2j/sqrt q})) = asinh(e^{j/sqrt q}).
inline Quadrature quadrature_nodes(Index q, const SpectrumBounds& bounds) {
  if (q < 1) throw InvalidArgument("quadrature half-width q must be >= 1");
  if (!(bounds.lambda_RL < 0.0))
    throw InvalidArgument("quadrature needs a stable matrix, got lambda_RL = " +
                          std::to_string(bounds.lambda_RL));
  Quadrature out;
  out.psi = 3.0 / (2.0 * std::abs(bounds.lambda_RL));
  const double qd = static_cast<double>(q);
  const double sq = std::sqrt(qd);
  for (Index j = -q; j <= q; ++j) {
    const double x = static_cast<double>(j) / sq;
    out.nodes.push_back({j, out.psi * std::asinh(std::exp(x)),
                         1.0 / std::sqrt(qd + qd * std::exp(-2.0 * x))});
  }
  return out;
}

struct FaberConstants {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
};

/// Ellipse constants for a spectrum with the given (already scaled) bounds.
/// For lambda_IL = 0 the closed form c2 = c1/2, c3 = c1^2 is used; a point
/// spectrum is widened to a segment of half-length 1e-6 max(1, |c4|).
inline FaberConstants faber_constants(const SpectrumBounds& b) {
  FaberConstants k;
  k.c1 = 0.5 * (b.lambda_RL - b.lambda_RS);
  k.c4 = 0.5 * (b.lambda_RL + b.lambda_RS);
  const double il = b.lambda_IL;
  if (il == 0.0) {
    k.c1 = std::max(k.c1, 1e-6 * std::max(1.0, std::abs(k.c4)));
    k.c2 = 0.5 * k.c1;
    k.c3 = k.c1 * k.c1;
    return k;
  }
  const double c1p = std::cbrt(k.c1 * k.c1);  // c1^{2/3}
  const double ilp = std::cbrt(il * il);      // IL^{2/3}
  k.c2 = 0.5 * (c1p * std::sqrt(c1p + ilp) + std::sqrt(std::cbrt(std::pow(k.c1 * il * il, 2.0)) + il * il));
  k.c3 = (c1p + ilp) * (c1p * c1p - ilp * ilp);
  return k;
}

/// First p+1 Faber coefficients of exp on the ellipse
/// s(theta) = (c2 + c3/(4c2)) cos theta + c4 + i (c2 - c3/(4c2)) sin theta,
/// a_l = Re (1/W) sum_k exp(s_k) e^{-2 pi i l k / W}.
inline std::vector<double> faber_coefficients(double c2, double c3, double c4, Index W,
                                              Index p) {
  if (W <= 0) throw InvalidArgument("faber_coefficients: W must be positive");
  if (!(c2 > 0.0)) throw InvalidArgument("faber_coefficients: c2 must be positive");
  if (p < 0) throw InvalidArgument("faber_coefficients: negative order");
  const double re = c2 + c3 / (4.0 * c2);
  const double im = c2 - c3 / (4.0 * c2);
  const double wd = static_cast<double>(W);
  std::vector<std::complex<double>> g(static_cast<std::size_t>(W));
  for (Index k = 0; k < W; ++k) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / wd;
    g[k] = std::exp(std::complex<double>(re * std::cos(th) + c4, im * std::sin(th)));
  }
  std::vector<double> a(static_cast<std::size_t>(p + 1));
  for (Index l = 0; l <= p; ++l) {
    std::complex<double> sum = 0.0;
    for (Index k = 0; k < W; ++k) {
      // reduce l*k mod W before the angle to keep the phase exact
      const double th = 2.0 * std::numbers::pi * static_cast<double>((l * k) % W) / wd;
      sum += g[k] * std::complex<double>(std::cos(th), -std::sin(th));
    }
    a[l] = sum.real() / wd;
  }
  return a;
}

/// sum_l a_l F_l(x) for a scalar x, with F_0 = 1 and F_l = 2 G_l,
/// G_0 = 1, G_1 = (x - c4)/(2 c2), G_{l+1} = ((x - c4) G_l - (c3/(4 c2)) G_{l-1}) / c2.
inline double faber_eval(const std::vector<double>& a, const FaberConstants& k, double x) {
  if (a.empty()) return 0.0;
  const double rho = 1.0 / (2.0 * k.c2);
  const double y = x - k.c4;
  double g0 = 1.0, g1 = rho * y;
  double sum = a[0];
  for (std::size_t l = 1; l < a.size(); ++l) {
    sum += 2.0 * a[l] * g1;
    const double g2 = 2.0 * rho * y * g1 - rho * rho * k.c3 * g0;
    g0 = g1;
    g1 = g2;
  }
  return sum;
}

/// Sparsified Faber approximation of exp(t A).
///
/// `bounds` are the spectrum bounds of A; the ellipse is built from the
/// bounds of tA. The three-term recurrence is restricted to
/// pattern(I + A + ... + A^k2) after every step.
inline SparseMatrix faber_expm(const SparseMatrix& a, double t, const SpectrumBounds& bounds,
                               const FaberConfig& cfg) {
  cfg.validate();
  if (a.rows() != a.cols())
    throw ShapeError("faber_expm: matrix is " + detail::shape_str(a.rows(), a.cols()));
  if (!(t > 0.0)) throw InvalidArgument("faber_expm: t must be positive");
  if (!(bounds.lambda_RS <= bounds.lambda_RL) || bounds.lambda_IL < 0.0)
    throw InvalidArgument("faber_expm: invalid spectrum bounds");
  const Index n = a.rows();
  const FaberConstants k = faber_constants(bounds.scaled(t));
  const std::vector<double> coef = faber_coefficients(k.c2, k.c3, k.c4, cfg.W, cfg.p);
  const SparsityPattern pat = pattern_power_sum(nonzero_pattern(a), cfg.k2);

  // Y = tA - c4 I
  const SparseMatrix y = spadd(a, SparseMatrix::identity(n), t, -k.c4);
  const double rho = 1.0 / (2.0 * k.c2);
  const SparseMatrix id = SparseMatrix::identity(n);
  SparseMatrix result = scale(id, coef[0]);
  if (cfg.p == 0) return result;
  SparseMatrix g0 = id;
  SparseMatrix g1 = project(scale(y, rho), pat);
  for (Index l = 1; l <= cfg.p; ++l) {
    result = spadd(result, g1, 1.0, 2.0 * coef[l]);
    if (l == cfg.p) break;
    SparseMatrix g2 = spadd(spgemm_masked(y, g1, pat), g0, 2.0 * rho, -rho * rho * k.c3);
    g0 = std::move(g1);
    g1 = std::move(g2);
  }
  return result;
}

}  // namespace bandlq
