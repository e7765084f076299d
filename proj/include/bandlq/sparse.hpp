#pragma once

// Compressed-sparse-row matrices and patterns plus the kernels every solver
// in the library is built from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bandlq/error.hpp"
#include "bandlq/parallel.hpp"

namespace bandlq {

using Index = std::int64_t;

/// Binary sparse structure in row-compressed form with sorted, unique
/// column indices per row.
class SparsityPattern {
 public:
  SparsityPattern() : row_ptr_(1, 0) {}

  SparsityPattern(Index rows, Index cols, std::vector<Index> row_ptr,
                  std::vector<Index> col_idx)
      : rows_(rows),
        cols_(cols),
        row_ptr_(std::move(row_ptr)),
        col_idx_(std::move(col_idx)) {
    validate();
  }

  static SparsityPattern identity(Index n) {
    std::vector<Index> ptr(static_cast<std::size_t>(n + 1));
    std::iota(ptr.begin(), ptr.end(), Index{0});
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    return SparsityPattern(n, n, std::move(ptr), std::move(idx));
  }

  static SparsityPattern full(Index rows, Index cols) {
    std::vector<Index> ptr(static_cast<std::size_t>(rows + 1));
    std::vector<Index> idx;
    idx.reserve(static_cast<std::size_t>(rows * cols));
    for (Index i = 0; i < rows; ++i) {
      ptr[i] = i * cols;
      for (Index j = 0; j < cols; ++j) idx.push_back(j);
    }
    ptr[rows] = rows * cols;
    return SparsityPattern(rows, cols, std::move(ptr), std::move(idx));
  }

  /// Builds a pattern from unordered (row, col) pairs; duplicates collapse.
  static SparsityPattern from_entries(
      Index rows, Index cols, std::vector<std::pair<Index, Index>> entries) {
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    std::vector<Index> ptr(static_cast<std::size_t>(rows + 1), 0);
    std::vector<Index> idx;
    idx.reserve(entries.size());
    for (const auto& [i, j] : entries) {
      if (i < 0 || i >= rows || j < 0 || j >= cols)
        throw InvalidArgument("pattern entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ") outside " +
                              detail::shape_str(rows, cols));
      ++ptr[i + 1];
      idx.push_back(j);
    }
    std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
    return SparsityPattern(rows, cols, std::move(ptr), std::move(idx));
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(col_idx_.size()); }
  bool square() const { return rows_ == cols_; }

  std::span<const Index> row_ptr() const { return row_ptr_; }
  std::span<const Index> col_idx() const { return col_idx_; }
  std::span<const Index> row(Index i) const {
    return {col_idx_.data() + row_ptr_[i],
            static_cast<std::size_t>(row_ptr_[i + 1] - row_ptr_[i])};
  }

  /// Storage offset of (i, j), or -1 when the entry is not structural.
  Index find(Index i, Index j) const {
    auto r = row(i);
    auto it = std::lower_bound(r.begin(), r.end(), j);
    if (it == r.end() || *it != j) return -1;
    return row_ptr_[i] + static_cast<Index>(it - r.begin());
  }
  bool contains(Index i, Index j) const { return find(i, j) >= 0; }

  double density() const {
    if (rows_ == 0 || cols_ == 0) return 0.0;
    return static_cast<double>(nnz()) /
           (static_cast<double>(rows_) * static_cast<double>(cols_));
  }

  bool operator==(const SparsityPattern& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && row_ptr_ == o.row_ptr_ &&
           col_idx_ == o.col_idx_;
  }

 private:
  void validate() const {
    if (rows_ < 0 || cols_ < 0) throw InvalidArgument("negative dimension");
    if (static_cast<Index>(row_ptr_.size()) != rows_ + 1 || row_ptr_[0] != 0 ||
        row_ptr_.back() != static_cast<Index>(col_idx_.size()))
      throw InvalidArgument("malformed row_ptr for " +
                            detail::shape_str(rows_, cols_));
    for (Index i = 0; i < rows_; ++i) {
      if (row_ptr_[i + 1] < row_ptr_[i])
        throw InvalidArgument("row_ptr decreases at row " + std::to_string(i));
      for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        if (col_idx_[k] < 0 || col_idx_[k] >= cols_)
          throw InvalidArgument("column index out of range in row " +
                                std::to_string(i));
        if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
          throw InvalidArgument("columns not strictly increasing in row " +
                                std::to_string(i));
      }
    }
  }

  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_idx_;
};

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Real CSR matrix: a SparsityPattern plus one value per structural entry.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  SparseMatrix(SparsityPattern pattern, std::vector<double> values)
      : pattern_(std::move(pattern)), values_(std::move(values)) {
    if (static_cast<Index>(values_.size()) != pattern_.nnz())
      throw InvalidArgument("value count does not match pattern nnz");
  }

  SparseMatrix(Index rows, Index cols, std::vector<Index> row_ptr,
               std::vector<Index> col_idx, std::vector<double> values)
      : SparseMatrix(SparsityPattern(rows, cols, std::move(row_ptr),
                                     std::move(col_idx)),
                     std::move(values)) {}

  /// Sums duplicates and drops entries that end up exactly zero.
  static SparseMatrix from_triplets(Index rows, Index cols,
                                    std::vector<Triplet> entries) {
    for (const auto& t : entries)
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
        throw InvalidArgument("triplet (" + std::to_string(t.row) + "," +
                              std::to_string(t.col) + ") outside " +
                              detail::shape_str(rows, cols));
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Triplet& a, const Triplet& b) {
                       return a.row != b.row ? a.row < b.row : a.col < b.col;
                     });
    std::vector<Index> ptr(static_cast<std::size_t>(rows + 1), 0);
    std::vector<Index> idx;
    std::vector<double> val;
    for (std::size_t k = 0; k < entries.size();) {
      const Index i = entries[k].row, j = entries[k].col;
      double sum = 0.0;
      for (; k < entries.size() && entries[k].row == i && entries[k].col == j;
           ++k)
        sum += entries[k].value;
      if (sum != 0.0) {
        ++ptr[i + 1];
        idx.push_back(j);
        val.push_back(sum);
      }
    }
    std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
    return SparseMatrix(rows, cols, std::move(ptr), std::move(idx),
                        std::move(val));
  }

  static SparseMatrix identity(Index n, double scale = 1.0) {
    return SparseMatrix(SparsityPattern::identity(n),
                        std::vector<double>(static_cast<std::size_t>(n), scale));
  }

  static SparseMatrix zeros(Index rows, Index cols) {
    return SparseMatrix(
        SparsityPattern(rows, cols,
                        std::vector<Index>(static_cast<std::size_t>(rows + 1), 0),
                        {}),
        {});
  }

  static SparseMatrix diagonal(std::span<const double> d) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < d.size(); ++i)
      t.push_back({static_cast<Index>(i), static_cast<Index>(i), d[i]});
    const auto n = static_cast<Index>(d.size());
    return from_triplets(n, n, std::move(t));
  }

  /// Values on `pattern`, all equal to `value`.
  static SparseMatrix constant(const SparsityPattern& pattern, double value) {
    return SparseMatrix(pattern, std::vector<double>(
                                     static_cast<std::size_t>(pattern.nnz()),
                                     value));
  }

  Index rows() const { return pattern_.rows(); }
  Index cols() const { return pattern_.cols(); }
  Index nnz() const { return pattern_.nnz(); }
  const SparsityPattern& pattern() const { return pattern_; }
  std::span<const double> values() const { return values_; }
  /// Mutable access for in-place updates that keep the structure fixed.
  std::span<double> values_mut() { return values_; }

  std::span<const Index> row_ptr() const { return pattern_.row_ptr(); }
  std::span<const Index> col_idx() const { return pattern_.col_idx(); }
  std::span<const Index> row_cols(Index i) const { return pattern_.row(i); }
  std::span<const double> row_vals(Index i) const {
    const auto p = pattern_.row_ptr();
    return {values_.data() + p[i], static_cast<std::size_t>(p[i + 1] - p[i])};
  }

  double coeff(Index i, Index j) const {
    const Index k = pattern_.find(i, j);
    return k < 0 ? 0.0 : values_[static_cast<std::size_t>(k)];
  }

  std::vector<Triplet> triplets() const {
    std::vector<Triplet> out;
    out.reserve(static_cast<std::size_t>(nnz()));
    for (Index i = 0; i < rows(); ++i) {
      auto c = row_cols(i);
      auto v = row_vals(i);
      for (std::size_t k = 0; k < c.size(); ++k) out.push_back({i, c[k], v[k]});
    }
    return out;
  }

 private:
  SparsityPattern pattern_;
  std::vector<double> values_;
};

namespace detail {

inline void require_same_shape(Index r1, Index c1, Index r2, Index c2,
                               const char* op) {
  if (r1 != r2 || c1 != c2)
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(r1, c1) +
                     " vs " + shape_str(r2, c2));
}

// Row-block accumulator shared by the product kernels. Rows are produced
// independently, so splitting them across threads and concatenating the
// blocks in order reproduces the sequential result bit for bit.
struct RowBlock {
  std::vector<Index> counts;
  std::vector<Index> idx;
  std::vector<double> val;
};

template <class RowFn>
SparseMatrix assemble_rows(Index rows, Index cols, RowFn&& row_fn) {
  const int threads = thread_count();
  const Index blocks = threads <= 1 || rows < 256 ? 1 : threads;
  std::vector<RowBlock> parts(static_cast<std::size_t>(blocks));
  parallel_for(
      blocks,
      [&](Index b0, Index b1) {
        for (Index b = b0; b < b1; ++b) {
          const Index r0 = rows * b / blocks, r1 = rows * (b + 1) / blocks;
          row_fn(r0, r1, parts[b]);
        }
      },
      1);
  std::vector<Index> ptr(static_cast<std::size_t>(rows + 1), 0);
  std::size_t total = 0;
  for (const auto& p : parts) total += p.idx.size();
  std::vector<Index> idx;
  std::vector<double> val;
  idx.reserve(total);
  val.reserve(total);
  Index r = 0;
  for (auto& p : parts) {
    for (Index c : p.counts) {
      ptr[r + 1] = ptr[r] + c;
      ++r;
    }
    idx.insert(idx.end(), p.idx.begin(), p.idx.end());
    val.insert(val.end(), p.val.begin(), p.val.end());
  }
  return SparseMatrix(rows, cols, std::move(ptr), std::move(idx),
                      std::move(val));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pattern algebra

inline SparsityPattern transpose(const SparsityPattern& a) {
  std::vector<Index> ptr(static_cast<std::size_t>(a.cols() + 1), 0);
  for (Index j : a.col_idx()) ++ptr[j + 1];
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  std::vector<Index> next(ptr.begin(), ptr.end() - 1);
  std::vector<Index> idx(static_cast<std::size_t>(a.nnz()));
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j : a.row(i)) idx[next[j]++] = i;
  return SparsityPattern(a.cols(), a.rows(), std::move(ptr), std::move(idx));
}

inline SparsityPattern pattern_union(const SparsityPattern& a,
                                     const SparsityPattern& b) {
  detail::require_same_shape(a.rows(), a.cols(), b.rows(), b.cols(),
                             "pattern_union");
  std::vector<Index> ptr(static_cast<std::size_t>(a.rows() + 1), 0);
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(std::max(a.nnz(), b.nnz())));
  for (Index i = 0; i < a.rows(); ++i) {
    auto ra = a.row(i), rb = b.row(i);
    std::set_union(ra.begin(), ra.end(), rb.begin(), rb.end(),
                   std::back_inserter(idx));
    ptr[i + 1] = static_cast<Index>(idx.size());
  }
  return SparsityPattern(a.rows(), a.cols(), std::move(ptr), std::move(idx));
}

/// Structural (boolean) product: no numeric cancellation is possible.
inline SparsityPattern pattern_multiply(const SparsityPattern& a,
                                        const SparsityPattern& b) {
  if (a.cols() != b.rows())
    throw ShapeError("pattern_multiply: inner dimensions differ " +
                     detail::shape_str(a.rows(), a.cols()) + " * " +
                     detail::shape_str(b.rows(), b.cols()));
  std::vector<Index> ptr(static_cast<std::size_t>(a.rows() + 1), 0);
  std::vector<Index> idx;
  std::vector<Index> marker(static_cast<std::size_t>(b.cols()), -1);
  for (Index i = 0; i < a.rows(); ++i) {
    const std::size_t start = idx.size();
    for (Index k : a.row(i))
      for (Index j : b.row(k))
        if (marker[j] != i) {
          marker[j] = i;
          idx.push_back(j);
        }
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.end());
    ptr[i + 1] = static_cast<Index>(idx.size());
  }
  return SparsityPattern(a.rows(), b.cols(), std::move(ptr), std::move(idx));
}

inline bool is_subset(const SparsityPattern& a, const SparsityPattern& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index i = 0; i < a.rows(); ++i) {
    auto ra = a.row(i), rb = b.row(i);
    if (!std::includes(rb.begin(), rb.end(), ra.begin(), ra.end()))
      return false;
  }
  return true;
}

inline SparsityPattern symmetrize(const SparsityPattern& a) {
  return pattern_union(a, transpose(a));
}

/// Pattern of I + A + A^2 + ... + A^k under boolean arithmetic.
inline SparsityPattern pattern_power_sum(const SparsityPattern& a, Index k) {
  if (!a.square())
    throw ShapeError("pattern_power_sum: non-square pattern " +
                     detail::shape_str(a.rows(), a.cols()));
  if (k < 0) throw InvalidArgument("pattern_power_sum: negative power");
  SparsityPattern sum = SparsityPattern::identity(a.rows());
  for (Index i = 0; i < k; ++i) {
    SparsityPattern next = pattern_union(sum, pattern_multiply(sum, a));
    if (next == sum) break;
    sum = std::move(next);
  }
  return sum;
}

/// Largest |i - j| over structural entries.
inline Index bandwidth(const SparsityPattern& a) {
  Index bw = 0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j : a.row(i)) bw = std::max(bw, i > j ? i - j : j - i);
  return bw;
}

/// Structure of nonzero values only; stored zeros are left out.
inline SparsityPattern nonzero_pattern(const SparseMatrix& a) {
  std::vector<Index> ptr(static_cast<std::size_t>(a.rows() + 1), 0);
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(a.nnz()));
  for (Index i = 0; i < a.rows(); ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_vals(i);
    for (std::size_t k = 0; k < c.size(); ++k)
      if (v[k] != 0.0) idx.push_back(c[k]);
    ptr[i + 1] = static_cast<Index>(idx.size());
  }
  return SparsityPattern(a.rows(), a.cols(), std::move(ptr), std::move(idx));
}

// ---------------------------------------------------------------------------
// Numeric kernels

/// Drops stored entries that are exactly zero.
inline SparseMatrix canonicalize(const SparseMatrix& a) {
  std::vector<Index> ptr(static_cast<std::size_t>(a.rows() + 1), 0);
  std::vector<Index> idx;
  std::vector<double> val;
  for (Index i = 0; i < a.rows(); ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_vals(i);
    for (std::size_t k = 0; k < c.size(); ++k)
      if (v[k] != 0.0) {
        idx.push_back(c[k]);
        val.push_back(v[k]);
      }
    ptr[i + 1] = static_cast<Index>(idx.size());
  }
  return SparseMatrix(a.rows(), a.cols(), std::move(ptr), std::move(idx),
                      std::move(val));
}

inline SparseMatrix transpose(const SparseMatrix& a) {
  std::vector<Index> ptr(static_cast<std::size_t>(a.cols() + 1), 0);
  for (Index j : a.col_idx()) ++ptr[j + 1];
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  std::vector<Index> next(ptr.begin(), ptr.end() - 1);
  std::vector<Index> idx(static_cast<std::size_t>(a.nnz()));
  std::vector<double> val(static_cast<std::size_t>(a.nnz()));
  for (Index i = 0; i < a.rows(); ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_vals(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const Index dst = next[c[k]]++;
      idx[dst] = i;
      val[dst] = v[k];
    }
  }
  return SparseMatrix(a.cols(), a.rows(), std::move(ptr), std::move(idx),
                      std::move(val));
}

/// Exact sparse product A*B (Gustavson). Entries that cancel to zero stay
/// stored; pass the result through canonicalize() to drop them.
inline SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("spgemm: inner dimensions differ " +
                     detail::shape_str(a.rows(), a.cols()) + " * " +
                     detail::shape_str(b.rows(), b.cols()));
  return detail::assemble_rows(
      a.rows(), b.cols(), [&](Index r0, Index r1, detail::RowBlock& out) {
        std::vector<double> acc(static_cast<std::size_t>(b.cols()), 0.0);
        std::vector<Index> marker(static_cast<std::size_t>(b.cols()), -1);
        std::vector<Index> cols;
        for (Index i = r0; i < r1; ++i) {
          cols.clear();
          auto ac = a.row_cols(i);
          auto av = a.row_vals(i);
          for (std::size_t p = 0; p < ac.size(); ++p) {
            auto bc = b.row_cols(ac[p]);
            auto bv = b.row_vals(ac[p]);
            for (std::size_t q = 0; q < bc.size(); ++q) {
              const Index j = bc[q];
              if (marker[j] != i) {
                marker[j] = i;
                acc[j] = 0.0;
                cols.push_back(j);
              }
              acc[j] += av[p] * bv[q];
            }
          }
          std::sort(cols.begin(), cols.end());
          out.counts.push_back(static_cast<Index>(cols.size()));
          for (Index j : cols) {
            out.idx.push_back(j);
            out.val.push_back(acc[j]);
          }
        }
      });
}

/// A*B evaluated only at positions of `mask`; equivalent to
/// project(spgemm(A, B), mask) without materializing the full product.
inline SparseMatrix spgemm_masked(const SparseMatrix& a, const SparseMatrix& b,
                                  const SparsityPattern& mask) {
  if (a.cols() != b.rows())
    throw ShapeError("spgemm_masked: inner dimensions differ " +
                     detail::shape_str(a.rows(), a.cols()) + " * " +
                     detail::shape_str(b.rows(), b.cols()));
  detail::require_same_shape(a.rows(), b.cols(), mask.rows(), mask.cols(),
                             "spgemm_masked");
  return detail::assemble_rows(
      a.rows(), b.cols(), [&](Index r0, Index r1, detail::RowBlock& out) {
        std::vector<double> acc(static_cast<std::size_t>(b.cols()), 0.0);
        std::vector<Index> marker(static_cast<std::size_t>(b.cols()), -1);
        std::vector<char> hit(static_cast<std::size_t>(b.cols()), 0);
        for (Index i = r0; i < r1; ++i) {
          auto m = mask.row(i);
          for (Index j : m) {
            marker[j] = i;
            acc[j] = 0.0;
            hit[j] = 0;
          }
          auto ac = a.row_cols(i);
          auto av = a.row_vals(i);
          for (std::size_t p = 0; p < ac.size(); ++p) {
            auto bc = b.row_cols(ac[p]);
            auto bv = b.row_vals(ac[p]);
            for (std::size_t q = 0; q < bc.size(); ++q) {
              const Index j = bc[q];
              if (marker[j] == i) {
                acc[j] += av[p] * bv[q];
                hit[j] = 1;
              }
            }
          }
          Index count = 0;
          for (Index j : m) {
            if (hit[j]) {
              out.idx.push_back(j);
              out.val.push_back(acc[j]);
              ++count;
            }
            marker[j] = -1;
          }
          out.counts.push_back(count);
        }
      });
}

/// alpha*A + beta*B with exact zeros dropped.
inline SparseMatrix spadd(const SparseMatrix& a, const SparseMatrix& b,
                          double alpha = 1.0, double beta = 1.0) {
  detail::require_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "spadd");
  std::vector<Index> ptr(static_cast<std::size_t>(a.rows() + 1), 0);
  std::vector<Index> idx;
  std::vector<double> val;
  idx.reserve(static_cast<std::size_t>(std::max(a.nnz(), b.nnz())));
  val.reserve(idx.capacity());
  auto emit = [&](Index j, double v) {
    if (v != 0.0) {
      idx.push_back(j);
      val.push_back(v);
    }
  };
  for (Index i = 0; i < a.rows(); ++i) {
    auto ac = a.row_cols(i);
    auto av = a.row_vals(i);
    auto bc = b.row_cols(i);
    auto bv = b.row_vals(i);
    std::size_t p = 0, q = 0;
    while (p < ac.size() || q < bc.size()) {
      if (q == bc.size() || (p < ac.size() && ac[p] < bc[q])) {
        emit(ac[p], alpha * av[p]);
        ++p;
      } else if (p == ac.size() || bc[q] < ac[p]) {
        emit(bc[q], beta * bv[q]);
        ++q;
      } else {
        emit(ac[p], alpha * av[p] + beta * bv[q]);
        ++p;
        ++q;
      }
    }
    ptr[i + 1] = static_cast<Index>(idx.size());
  }
  return SparseMatrix(a.rows(), a.cols(), std::move(ptr), std::move(idx),
                      std::move(val));
}

inline SparseMatrix scale(const SparseMatrix& a, double alpha) {
  if (alpha == 0.0) return SparseMatrix::zeros(a.rows(), a.cols());
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x *= alpha;
  return SparseMatrix(a.pattern(), std::move(v));
}

/// Keeps the entries of Q at structural positions of X and zeroes the rest.
inline SparseMatrix project(const SparseMatrix& q, const SparsityPattern& x) {
  detail::require_same_shape(q.rows(), q.cols(), x.rows(), x.cols(),
                             "project");
  std::vector<Index> ptr(static_cast<std::size_t>(q.rows() + 1), 0);
  std::vector<Index> idx;
  std::vector<double> val;
  for (Index i = 0; i < q.rows(); ++i) {
    auto qc = q.row_cols(i);
    auto qv = q.row_vals(i);
    auto xc = x.row(i);
    std::size_t p = 0, r = 0;
    while (p < qc.size() && r < xc.size()) {
      if (qc[p] < xc[r]) {
        ++p;
      } else if (xc[r] < qc[p]) {
        ++r;
      } else {
        if (qv[p] != 0.0) {
          idx.push_back(qc[p]);
          val.push_back(qv[p]);
        }
        ++p;
        ++r;
      }
    }
    ptr[i + 1] = static_cast<Index>(idx.size());
  }
  return SparseMatrix(q.rows(), q.cols(), std::move(ptr), std::move(idx),
                      std::move(val));
}

/// Values of Q laid out on the full structure of X (zeros where Q has none).
/// Unlike project(), the result's pattern is exactly X.
inline SparseMatrix embed(const SparseMatrix& q, const SparsityPattern& x) {
  detail::require_same_shape(q.rows(), q.cols(), x.rows(), x.cols(), "embed");
  std::vector<double> val(static_cast<std::size_t>(x.nnz()), 0.0);
  for (Index i = 0; i < q.rows(); ++i) {
    auto qc = q.row_cols(i);
    auto qv = q.row_vals(i);
    auto xc = x.row(i);
    const Index base = x.row_ptr()[i];
    std::size_t p = 0, r = 0;
    while (p < qc.size() && r < xc.size()) {
      if (qc[p] < xc[r]) {
        ++p;
      } else if (xc[r] < qc[p]) {
        ++r;
      } else {
        val[static_cast<std::size_t>(base) + r] = qv[p];
        ++p;
        ++r;
      }
    }
  }
  return SparseMatrix(x, std::move(val));
}

/// Elementwise absolute values.
inline SparseMatrix abs(const SparseMatrix& a) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x = std::fabs(x);
  return SparseMatrix(a.pattern(), std::move(v));
}

/// (A + A^T) / 2.
inline SparseMatrix symmetric_part(const SparseMatrix& a) {
  if (a.rows() != a.cols())
    throw ShapeError("symmetric_part: non-square " +
                     detail::shape_str(a.rows(), a.cols()));
  return spadd(a, transpose(a), 0.5, 0.5);
}

inline std::vector<double> multiply(const SparseMatrix& a,
                                    std::span<const double> x) {
  if (static_cast<Index>(x.size()) != a.cols())
    throw ShapeError("multiply: vector of length " + std::to_string(x.size()) +
                     " for " + detail::shape_str(a.rows(), a.cols()));
  std::vector<double> y(static_cast<std::size_t>(a.rows()), 0.0);
  for (Index i = 0; i < a.rows(); ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_vals(i);
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) s += v[k] * x[c[k]];
    y[i] = s;
  }
  return y;
}

/// A^T x without materializing the transpose.
inline std::vector<double> multiply_transpose(const SparseMatrix& a,
                                              std::span<const double> x) {
  if (static_cast<Index>(x.size()) != a.rows())
    throw ShapeError("multiply_transpose: vector of length " +
                     std::to_string(x.size()) + " for " +
                     detail::shape_str(a.rows(), a.cols()));
  std::vector<double> y(static_cast<std::size_t>(a.cols()), 0.0);
  for (Index i = 0; i < a.rows(); ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_vals(i);
    for (std::size_t k = 0; k < c.size(); ++k) y[c[k]] += v[k] * x[i];
  }
  return y;
}

inline double frobenius(const SparseMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

/// trace(A^T B) = vec(A)^T vec(B).
inline double fro_inner(const SparseMatrix& a, const SparseMatrix& b) {
  detail::require_same_shape(a.rows(), a.cols(), b.rows(), b.cols(),
                             "fro_inner");
  double s = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    auto ac = a.row_cols(i);
    auto av = a.row_vals(i);
    auto bc = b.row_cols(i);
    auto bv = b.row_vals(i);
    std::size_t p = 0, q = 0;
    while (p < ac.size() && q < bc.size()) {
      if (ac[p] < bc[q]) {
        ++p;
      } else if (bc[q] < ac[p]) {
        ++q;
      } else {
        s += av[p++] * bv[q++];
      }
    }
  }
  return s;
}

/// Maximum absolute column sum.
inline double norm1(const SparseMatrix& a) {
  std::vector<double> col(static_cast<std::size_t>(a.cols()), 0.0);
  for (Index i = 0; i < a.rows(); ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_vals(i);
    for (std::size_t k = 0; k < c.size(); ++k) col[c[k]] += std::fabs(v[k]);
  }
  return col.empty() ? 0.0 : *std::max_element(col.begin(), col.end());
}

/// Maximum absolute row sum.
inline double norm_inf(const SparseMatrix& a) {
  double best = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double v : a.row_vals(i)) s += std::fabs(v);
    best = std::max(best, s);
  }
  return best;
}

/// ||A - A^T||_F for square A.
inline double asymmetry(const SparseMatrix& a) {
  return frobenius(spadd(a, transpose(a), 1.0, -1.0));
}

/// Throws unless every row has strictly increasing, in-range columns.
/// Construction already enforces this; kept for explicit kernel checks.
inline void assert_canonical(const SparseMatrix& a) {
  SparsityPattern(a.rows(), a.cols(),
                  std::vector<Index>(a.row_ptr().begin(), a.row_ptr().end()),
                  std::vector<Index>(a.col_idx().begin(), a.col_idx().end()));
}

}  // namespace bandlq
