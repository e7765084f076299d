#pragma once

// Matrix Market coordinate I/O (1-based indices). Writes `real general` for
// matrices and `pattern general` for patterns; reads real, integer and
// pattern fields with general or symmetric storage.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "bandlq/sparse.hpp"

namespace bandlq::mm {

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Header {
  bool pattern = false;
  bool symmetric = false;
  Index rows = 0, cols = 0, entries = 0;
};

inline Header read_header(std::istream& in, const std::string& source, long& line_no) {
  std::string line;
  if (!std::getline(in, line))
    throw IoError(source + ":1: empty Matrix Market file");
  line_no = 1;
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix" ||
      lower(format) != "coordinate")
    throw IoError(source + ":1: expected '%%MatrixMarket matrix coordinate ...'");
  Header h;
  field = lower(field);
  symmetry = lower(symmetry);
  if (field == "pattern")
    h.pattern = true;
  else if (field != "real" && field != "integer" && field != "double")
    throw IoError(source + ":1: unsupported field '" + field + "'");
  if (symmetry == "symmetric")
    h.symmetric = true;
  else if (symmetry != "general")
    throw IoError(source + ":1: unsupported symmetry '" + symmetry + "'");

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream size(line);
    if (!(size >> h.rows >> h.cols >> h.entries) || h.rows < 0 || h.cols < 0 ||
        h.entries < 0)
      throw IoError(source + ":" + std::to_string(line_no) + ": bad size line");
    return h;
  }
  throw IoError(source + ": missing size line");
}

inline std::vector<Triplet> read_entries(std::istream& in, const Header& h,
                                         const std::string& source, long& line_no) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(h.entries) * (h.symmetric ? 2 : 1));
  std::string line;
  Index seen = 0;
  while (seen < h.entries && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream row(line);
    Index i = 0, j = 0;
    double v = 1.0;
    if (!(row >> i >> j) || (!h.pattern && !(row >> v)))
      throw IoError(source + ":" + std::to_string(line_no) + ": malformed entry");
    if (i < 1 || i > h.rows || j < 1 || j > h.cols)
      throw IoError(source + ":" + std::to_string(line_no) + ": index (" +
                    std::to_string(i) + "," + std::to_string(j) + ") out of range");
    t.push_back({i - 1, j - 1, v});
    if (h.symmetric && i != j) t.push_back({j - 1, i - 1, v});
    ++seen;
  }
  if (seen != h.entries)
    throw IoError(source + ": expected " + std::to_string(h.entries) +
                  " entries, found " + std::to_string(seen));
  return t;
}

}  // namespace detail

inline void write(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  for (Index i = 0; i < a.rows(); ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_vals(i);
    for (std::size_t k = 0; k < c.size(); ++k)
      out << i + 1 << ' ' << c[k] + 1 << ' ' << detail::fmt17(v[k]) << '\n';
  }
}

inline void write(std::ostream& out, const SparsityPattern& p) {
  out << "%%MatrixMarket matrix coordinate pattern general\n";
  out << p.rows() << ' ' << p.cols() << ' ' << p.nnz() << '\n';
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j : p.row(i)) out << i + 1 << ' ' << j + 1 << '\n';
}

/// Reads a matrix; pattern files yield unit values. Duplicates are summed.
inline SparseMatrix read_matrix(std::istream& in, const std::string& source = "<stream>") {
  long line_no = 0;
  const auto h = detail::read_header(in, source, line_no);
  auto t = detail::read_entries(in, h, source, line_no);
  return SparseMatrix::from_triplets(h.rows, h.cols, std::move(t));
}

/// Reads the structure of any coordinate file, ignoring values.
inline SparsityPattern read_pattern(std::istream& in, const std::string& source = "<stream>") {
  long line_no = 0;
  const auto h = detail::read_header(in, source, line_no);
  auto t = detail::read_entries(in, h, source, line_no);
  std::vector<std::pair<Index, Index>> e;
  e.reserve(t.size());
  for (const auto& x : t) e.emplace_back(x.row, x.col);
  return SparsityPattern::from_entries(h.rows, h.cols, std::move(e));
}

template <class T>
void save(const std::string& path, const T& obj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write(out, obj);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline SparseMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_matrix(in, path);
}

inline SparsityPattern load_pattern(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_pattern(in, path);
}

}  // namespace bandlq::mm
