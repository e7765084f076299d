#pragma once

// Structured-grid heat-equation descriptor models E x' = A x + B u, y = C x,
// with Dirichlet nodes eliminated and row-major numbering of interior nodes.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bandlq/cgls.hpp"
#include "bandlq/ordering.hpp"
#include "bandlq/sparse.hpp"

namespace bandlq {

enum class Discretization { FiniteDifference, FiniteElement1D, FiniteElement2D };

inline std::string to_string(Discretization d) {
  switch (d) {
    case Discretization::FiniteDifference: return "FD-5point";
    case Discretization::FiniteElement1D: return "FE-linear-1D";
    case Discretization::FiniteElement2D: return "FE-bilinear-2D";
  }
  return "?";
}

inline Discretization parse_discretization(const std::string& tag) {
  if (tag == "FD-5point") return Discretization::FiniteDifference;
  if (tag == "FE-linear-1D") return Discretization::FiniteElement1D;
  if (tag == "FE-bilinear-2D") return Discretization::FiniteElement2D;
  throw InvalidArgument("unsupported discretization tag '" + tag + "'");
}

struct GridSpec {
  int dimension = 2;
  std::vector<Index> nodes{13, 13};      ///< interior nodes per axis
  std::vector<double> length{1.0, 1.0};  ///< domain length per axis [m]
  double diffusivity = 1.0;              ///< [m^2/s]
  Discretization discretization = Discretization::FiniteDifference;

  Index state_dim() const {
    Index n = 1;
    for (Index k : nodes) n *= k;
    return n;
  }

  /// Grid spacing along `axis`: length / (interior nodes + 1).
  double spacing(std::size_t axis) const {
    return length[axis] / static_cast<double>(nodes[axis] + 1);
  }

  void validate() const {
    if (dimension != 1 && dimension != 2)
      throw InvalidArgument("grid dimension must be 1 or 2");
    if (nodes.size() != static_cast<std::size_t>(dimension) ||
        length.size() != static_cast<std::size_t>(dimension))
      throw InvalidArgument("grid needs one node count and one length per axis");
    for (Index k : nodes)
      if (k < 2) throw InvalidArgument("grid needs at least 2 nodes per axis");
    for (double l : length)
      if (!(l > 0.0)) throw InvalidArgument("grid lengths must be positive");
    if (!(diffusivity > 0.0)) throw InvalidArgument("diffusivity must be positive");
    if (discretization == Discretization::FiniteElement1D && dimension != 1)
      throw InvalidArgument("FE-linear-1D requires a 1D grid");
    if (discretization == Discretization::FiniteElement2D && dimension != 2)
      throw InvalidArgument("FE-bilinear-2D requires a 2D grid");
  }
};

struct DescriptorModel {
  SparseMatrix E, A, B, C;
  Permutation permutation;  ///< maps current state order to generation order
  GridSpec grid;

  Index states() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C.rows(); }
};

struct SetPoint {
  std::vector<double> x_d;
  std::vector<double> u_d;
  double residual = 0.0;  ///< ||[A B; C 0](x_d; u_d) - (0; y_d)||_2
  Index iterations = 0;
};

namespace detail {

/// tridiag(lower, diag, upper) scaled by s.
inline SparseMatrix tridiag(Index n, double lower, double diag, double upper,
                            double s = 1.0) {
  std::vector<Triplet> t;
  for (Index i = 0; i < n; ++i) {
    if (i > 0) t.push_back({i, i - 1, s * lower});
    t.push_back({i, i, s * diag});
    if (i + 1 < n) t.push_back({i, i + 1, s * upper});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

/// Kronecker product; with row-major node numbering index = iy * nx + ix,
/// kron(Y, X) acts on the y axis with Y and on the x axis with X.
inline SparseMatrix kron(const SparseMatrix& y, const SparseMatrix& x) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(y.nnz() * x.nnz()));
  for (const auto& a : y.triplets())
    for (const auto& b : x.triplets())
      t.push_back({a.row * x.rows() + b.row, a.col * x.cols() + b.col, a.value * b.value});
  return SparseMatrix::from_triplets(y.rows() * x.rows(), y.cols() * x.cols(),
                                     std::move(t));
}

/// Unbiased integer in [0, bound) from a 64-bit Mersenne Twister stream.
inline std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = rng.max() - rng.max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

inline std::vector<Index> draw_nodes(std::mt19937_64& rng, Index n, Index count) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[i] = i;
  for (Index i = n - 1; i > 0; --i)
    std::swap(idx[i], idx[draw_below(rng, static_cast<std::uint64_t>(i + 1))]);
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

/// Mass matrix E and state matrix A of the Dirichlet heat equation.
///
/// FD: E = I, A = kappa * (discrete Laplacian). FE-linear-1D:
/// E = (h/6) tridiag(1,4,1), A = (kappa/h) tridiag(1,-2,1). FE-bilinear-2D:
/// tensor products of the 1D mass and stiffness factors.
inline std::pair<SparseMatrix, SparseMatrix> build_heat_model(const GridSpec& grid) {
  grid.validate();
  const double kappa = grid.diffusivity;
  if (grid.dimension == 1) {
    const Index n = grid.nodes[0];
    const double h = grid.spacing(0);
    if (grid.discretization == Discretization::FiniteDifference)
      return {SparseMatrix::identity(n), detail::tridiag(n, 1, -2, 1, kappa / (h * h))};
    return {detail::tridiag(n, 1, 4, 1, h / 6.0), detail::tridiag(n, 1, -2, 1, kappa / h)};
  }
  const Index nx = grid.nodes[0], ny = grid.nodes[1];
  const double hx = grid.spacing(0), hy = grid.spacing(1);
  const SparseMatrix ix = SparseMatrix::identity(nx), iy = SparseMatrix::identity(ny);
  if (grid.discretization == Discretization::FiniteDifference) {
    const SparseMatrix tx = detail::tridiag(nx, 1, -2, 1, kappa / (hx * hx));
    const SparseMatrix ty = detail::tridiag(ny, 1, -2, 1, kappa / (hy * hy));
    return {SparseMatrix::identity(nx * ny),
            spadd(detail::kron(iy, tx), detail::kron(ty, ix))};
  }
  const SparseMatrix mx = detail::tridiag(nx, 1, 4, 1, hx / 6.0);
  const SparseMatrix my = detail::tridiag(ny, 1, 4, 1, hy / 6.0);
  const SparseMatrix kx = detail::tridiag(nx, 1, -2, 1, 1.0 / hx);
  const SparseMatrix ky = detail::tridiag(ny, 1, -2, 1, 1.0 / hy);
  return {detail::kron(my, mx),
          spadd(detail::kron(my, kx), detail::kron(ky, mx), kappa, kappa)};
}

/// Actuator matrix B (n x m) and sensor matrix C (r x n), m = r =
/// floor(fraction * n), each a unit selection at distinct nodes drawn from
/// mt19937_64(seed). B is drawn first, then C, from the same stream.
inline std::pair<SparseMatrix, SparseMatrix> place_io(Index n, double fraction,
                                                      std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InvalidArgument("io fraction must lie in (0, 1]");
  const auto count = static_cast<Index>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  if (count < 1) throw InvalidArgument("io fraction selects no nodes");
  std::mt19937_64 rng(seed);
  const auto b_nodes = detail::draw_nodes(rng, n, count);
  const auto c_nodes = detail::draw_nodes(rng, n, count);
  std::vector<Triplet> b, c;
  for (Index k = 0; k < count; ++k) {
    b.push_back({b_nodes[k], k, 1.0});
    c.push_back({k, c_nodes[k], 1.0});
  }
  return {SparseMatrix::from_triplets(n, count, std::move(b)),
          SparseMatrix::from_triplets(count, n, std::move(c))};
}

/// Reorders the state by reverse Cuthill-McKee on pattern(A) ∪ pattern(E).
/// The ordering is rejected (identity kept) if it would widen the band.
inline DescriptorModel permute_model(const DescriptorModel& model) {
  const SparsityPattern graph = pattern_union(model.A.pattern(), model.E.pattern());
  Permutation p = rcm_order(graph);
  if (bandwidth(permute_symmetric(graph, p)) > bandwidth(graph))
    p = Permutation::identity(model.states());
  DescriptorModel out;
  out.E = permute_symmetric(model.E, p);
  out.A = permute_symmetric(model.A, p);
  out.B = permute_rows(model.B, p);
  out.C = permute_cols(model.C, p);
  out.permutation = model.permutation.size() == p.size() ? model.permutation.then(p) : p;
  out.grid = model.grid;
  return out;
}

/// Heat model plus I/O placement, optionally reordered for bandwidth.
inline DescriptorModel generate_model(const GridSpec& grid, double io_fraction,
                                      std::uint64_t seed, bool reorder = true) {
  auto [e, a] = build_heat_model(grid);
  auto [b, c] = place_io(a.rows(), io_fraction, seed);
  DescriptorModel m{std::move(e), std::move(a), std::move(b), std::move(c),
                    Permutation::identity(grid.state_dim()), grid};
  return reorder ? permute_model(m) : m;
}

namespace detail {

// [A B; C 0] acting on (x; u).
struct SetPointOperator {
  const DescriptorModel& m;
  Index rows() const { return m.states() + m.outputs(); }
  Index cols() const { return m.states() + m.inputs(); }
  std::vector<double> apply(std::span<const double> z) const {
    const auto n = static_cast<std::size_t>(m.states());
    auto x = z.subspan(0, n);
    auto u = z.subspan(n);
    std::vector<double> ax = multiply(m.A, x);
    const std::vector<double> bu = multiply(m.B, u);
    const std::vector<double> cx = multiply(m.C, x);
    for (std::size_t i = 0; i < n; ++i) ax[i] += bu[i];
    ax.insert(ax.end(), cx.begin(), cx.end());
    return ax;
  }
  std::vector<double> apply_transpose(std::span<const double> w) const {
    const auto n = static_cast<std::size_t>(m.states());
    auto top = w.subspan(0, n);
    auto bottom = w.subspan(n);
    std::vector<double> x = multiply_transpose(m.A, top);
    const std::vector<double> ctw = multiply_transpose(m.C, bottom);
    for (std::size_t i = 0; i < n; ++i) x[i] += ctw[i];
    const std::vector<double> u = multiply_transpose(m.B, top);
    x.insert(x.end(), u.begin(), u.end());
    return x;
  }
};

}  // namespace detail

/// Steady state (x_d, u_d) with A x_d + B u_d = 0 and C x_d = y_d, exactly
/// when possible and in the least-squares sense otherwise.
inline SetPoint setpoint(const DescriptorModel& model, std::span<const double> y_d,
                         CglsConfig cfg = {1e-12, 0}) {
  if (static_cast<Index>(y_d.size()) != model.outputs())
    throw ShapeError("setpoint: y_d has length " + std::to_string(y_d.size()) +
                     ", model has " + std::to_string(model.outputs()) + " outputs");
  const detail::SetPointOperator op{model};
  if (cfg.max_iter <= 0) cfg.max_iter = 20 * op.cols() + 100;
  std::vector<double> rhs(static_cast<std::size_t>(model.states()), 0.0);
  rhs.insert(rhs.end(), y_d.begin(), y_d.end());
  CglsResult r = cgls(op, rhs, cfg);
  if (!r.converged)
    throw ConvergenceError("setpoint: CGLS did not converge in " +
                               std::to_string(r.iterations) + " iterations",
                           r.relative_residual);
  SetPoint sp;
  const auto n = static_cast<std::ptrdiff_t>(model.states());
  sp.x_d.assign(r.x.begin(), r.x.begin() + n);
  sp.u_d.assign(r.x.begin() + n, r.x.end());
  const std::vector<double> kz = op.apply(r.x);
  double s = 0.0;
  for (std::size_t i = 0; i < kz.size(); ++i) s += (kz[i] - rhs[i]) * (kz[i] - rhs[i]);
  sp.residual = std::sqrt(s);
  sp.iterations = r.iterations;
  return sp;
}

}  // namespace bandlq
