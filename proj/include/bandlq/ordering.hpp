#pragma once

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "bandlq/sparse.hpp"

namespace bandlq {

/// Symmetric row/column permutation. forward()[new] = old,
/// inverse()[old] = new, so (P A P^T)(i, j) = A(forward[i], forward[j]).
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<Index> forward) : forward_(std::move(forward)) {
    const auto n = forward_.size();
    inverse_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const Index old = forward_[i];
      if (old < 0 || old >= static_cast<Index>(n) || inverse_[old] != -1)
        throw InvalidArgument("permutation is not a bijection on 0.." +
                              std::to_string(n) + "-1");
      inverse_[old] = static_cast<Index>(i);
    }
  }

  static Permutation identity(Index n) {
    std::vector<Index> f(static_cast<std::size_t>(n));
    std::iota(f.begin(), f.end(), Index{0});
    return Permutation(std::move(f));
  }

  Index size() const { return static_cast<Index>(forward_.size()); }
  const std::vector<Index>& forward() const { return forward_; }
  const std::vector<Index>& inverse() const { return inverse_; }

  bool is_identity() const {
    for (std::size_t i = 0; i < forward_.size(); ++i)
      if (forward_[i] != static_cast<Index>(i)) return false;
    return true;
  }

  /// Composition: apply `this` first, then `next`.
  Permutation then(const Permutation& next) const {
    std::vector<Index> f(forward_.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = forward_[next.forward_[i]];
    return Permutation(std::move(f));
  }

  bool operator==(const Permutation& o) const { return forward_ == o.forward_; }

 private:
  std::vector<Index> forward_;
  std::vector<Index> inverse_;
};

/// P A P^T.
inline SparseMatrix permute_symmetric(const SparseMatrix& a, const Permutation& p) {
  if (a.rows() != p.size() || a.cols() != p.size())
    throw ShapeError("permute_symmetric: " + detail::shape_str(a.rows(), a.cols()) +
                     " with permutation of size " + std::to_string(p.size()));
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nnz()));
  for (const auto& e : a.triplets())
    t.push_back({p.inverse()[e.row], p.inverse()[e.col], e.value});
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

/// P A (rows only).
inline SparseMatrix permute_rows(const SparseMatrix& a, const Permutation& p) {
  if (a.rows() != p.size())
    throw ShapeError("permute_rows: " + detail::shape_str(a.rows(), a.cols()) +
                     " with permutation of size " + std::to_string(p.size()));
  std::vector<Triplet> t;
  for (const auto& e : a.triplets()) t.push_back({p.inverse()[e.row], e.col, e.value});
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

/// A P^T (columns only).
inline SparseMatrix permute_cols(const SparseMatrix& a, const Permutation& p) {
  if (a.cols() != p.size())
    throw ShapeError("permute_cols: " + detail::shape_str(a.rows(), a.cols()) +
                     " with permutation of size " + std::to_string(p.size()));
  std::vector<Triplet> t;
  for (const auto& e : a.triplets()) t.push_back({e.row, p.inverse()[e.col], e.value});
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

inline SparsityPattern permute_symmetric(const SparsityPattern& a, const Permutation& p) {
  std::vector<std::pair<Index, Index>> e;
  e.reserve(static_cast<std::size_t>(a.nnz()));
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j : a.row(i)) e.emplace_back(p.inverse()[i], p.inverse()[j]);
  return SparsityPattern::from_entries(a.rows(), a.cols(), std::move(e));
}

/// Reverse Cuthill-McKee on the undirected graph of A ∪ A^T.
///
/// Each connected component starts from its minimum-degree vertex (smallest
/// index on ties); unvisited neighbours are enqueued by increasing degree,
/// ties by index. The Cuthill-McKee sequence is then reversed.
inline Permutation rcm_order(const SparsityPattern& a) {
  if (!a.square())
    throw ShapeError("rcm_order: non-square pattern " +
                     detail::shape_str(a.rows(), a.cols()));
  const Index n = a.rows();
  const SparsityPattern g = symmetrize(a);
  std::vector<Index> degree(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i)
    for (Index j : g.row(i))
      if (j != i) ++degree[i];

  std::vector<Index> by_degree(static_cast<std::size_t>(n));
  std::iota(by_degree.begin(), by_degree.end(), Index{0});
  std::stable_sort(by_degree.begin(), by_degree.end(),
                   [&](Index x, Index y) { return degree[x] < degree[y]; });

  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<Index> nbrs;
  for (Index start : by_degree) {
    if (visited[start]) continue;
    visited[start] = 1;
    std::size_t head = order.size();
    order.push_back(start);
    while (head < order.size()) {
      const Index v = order[head++];
      nbrs.clear();
      for (Index u : g.row(v))
        if (u != v && !visited[u]) nbrs.push_back(u);
      std::sort(nbrs.begin(), nbrs.end(), [&](Index x, Index y) {
        return degree[x] != degree[y] ? degree[x] < degree[y] : x < y;
      });
      for (Index u : nbrs) {
        visited[u] = 1;
        order.push_back(u);
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return Permutation(std::move(order));
}

}  // namespace bandlq
