#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bandlq/error.hpp"
#include "bandlq/sparse.hpp"

namespace bandlq {

/// Outcome of one Lyapunov solve, either method.
struct SolveReport {
  std::string method;
  Index n = 0;
  Index w = -1;
  Index nnz_pattern = 0;
  Index nnz_m1 = 0;    ///< reduced matrix size (least squares only)
  Index peak_nnz = 0;  ///< largest sparse matrix materialized during the solve
  Index iterations = 0;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  bool stalled = false;
  std::optional<double> error;  ///< relative error against an exact solution
  double wall_ms = 0.0;

  // gradient projection extras
  Index q = 0, p = 0, k1 = 0, k2 = 0;
  double spai_residual = std::numeric_limits<double>::quiet_NaN();
  double x3_fill = std::numeric_limits<double>::quiet_NaN();

  /// ||M1^T r|| per CGLS iteration, or J per gradient-projection iteration.
  std::vector<double> history;
};

/// Wall-clock stopwatch in milliseconds.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

namespace csv {

/// %.17g, with nan/inf spelled consistently.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string num(Index v) { return std::to_string(v); }

inline std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }

/// Solve-report columns. Wall time is kept out so reports are reproducible
/// byte for byte; timings go to a separate file.
inline const char* kSolveHeader =
    "method,n,w,nnz_pattern,nnz_m1,peak_nnz,iterations,final_residual,converged,"
    "stalled,e_k,q,p,k1,k2,spai_residual,x3_fill";

inline void write_row(std::ostream& out, const SolveReport& r) {
  out << r.method << ',' << r.n << ',' << r.w << ',' << r.nnz_pattern << ',' << r.nnz_m1 << ','
      << r.peak_nnz << ',' << r.iterations << ',' << num(r.final_residual) << ','
      << (r.converged ? 1 : 0) << ',' << (r.stalled ? 1 : 0) << ',' << opt(r.error) << ','
      << r.q << ',' << r.p << ',' << r.k1 << ',' << r.k2 << ',' << num(r.spai_residual) << ','
      << num(r.x3_fill) << '\n';
}

inline void write_history(const std::string& path, const std::string& column,
                          const std::vector<double>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "iteration," << column << '\n';
  for (std::size_t i = 0; i < history.size(); ++i) out << i << ',' << num(history[i]) << '\n';
}

}  // namespace csv

}  // namespace bandlq
