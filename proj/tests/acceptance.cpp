// Acceptance suite: one PASS/FAIL line per criterion; exits nonzero when any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

using namespace bandlq;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body,
               double time_limit_s = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit_s > 0.0 && s >= time_limit_s) {
    r.pass = false;
    r.detail += "; runtime " + csv::num(s) + " s exceeds " + csv::num(time_limit_s) + " s";
  }
  if (!r.pass) ++failures;
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.1f", s);
  std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): "
            << r.detail << " [" << secs << " s]" << std::endl;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Step {
  DescriptorModel model;
  SparseMatrix abar, p;
};

/// First Newton step operands from Z0 = 10 I on the heat analog.
Step heat_step(Index nx) {
  Step s{heat_analog(nx), {}, {}};
  const LqProblem prob = LqProblem::uniform(s.model);
  std::tie(s.abar, s.p) =
      newton_step_operands(feedback(SparseMatrix::identity(s.model.states(), 10.0), prob), prob);
  return s;
}

double rel(const Dense& a, const Dense& ref) { return (a - ref).norm() / ref.norm(); }

std::vector<double> random_state(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> x(static_cast<std::size_t>(n));
  for (double& v : x) v = g(rng);
  return x;
}

// Column (i, j) of M is vec(E^T e_i e_j^T Abar + Abar^T e_i e_j^T E).
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

/// Largest entrywise gap between M1 and the matching block of M; dropped
/// equations must be zero in M on the pattern columns.
double reduced_gap(const ReducedSystem& sys, const Dense& m, const Dense& p, bool& structural_ok) {
  const Index n = sys.n;
  const Dense m1 = dense(sys.m1);
  std::set<Index> kept;
  double gap = 0.0;
  for (std::size_t r = 0; r < sys.row_map.size(); ++r) {
    const auto [rr, ss] = sys.row_map[r];
    const Index eq = ss * n + rr;
    kept.insert(eq);
    gap = std::max(gap, std::abs(sys.p1[r] - p(rr, ss)));
    for (std::size_t c = 0; c < sys.column_map.size(); ++c) {
      const auto [i, j] = sys.column_map[c];
      gap = std::max(gap, std::abs(m1(static_cast<Index>(r), static_cast<Index>(c)) - m(eq, j * n + i)));
    }
  }
  for (Index eq = 0; eq < n * n; ++eq) {
    if (kept.count(eq)) continue;
    if (p(eq % n, eq / n) != 0.0) structural_ok = false;
    for (const auto& [i, j] : sys.column_map)
      if (m(eq, j * n + i) != 0.0) structural_ok = false;
  }
  return gap;
}

// Column-wise argmin ||I - E X||_F on pat by dense Householder QR.
Dense dense_right_spai(const Dense& e, const SparsityPattern& pat) {
  const Index n = e.rows();
  const SparsityPattern patt = transpose(pat);
  Dense x = Dense::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    auto support = patt.row(j);
    Dense block(n, static_cast<Index>(support.size()));
    for (std::size_t c = 0; c < support.size(); ++c)
      block.col(static_cast<Index>(c)) = e.col(support[c]);
    const Eigen::VectorXd sol = block.householderQr().solve(Eigen::VectorXd::Unit(n, j));
    for (std::size_t c = 0; c < support.size(); ++c) x(support[c], j) = sol(static_cast<Index>(c));
  }
  return x;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + BANDLQ_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Newton runs on the 169-node analog shared by criteria 6 and 10.
RiccatiSolution newton_169(Index w) {
  NewtonConfig cfg;
  cfg.pattern.w = w;
  cfg.n_max = 10;
  cfg.cgls.tol = 1e-7;
  return solve_riccati(LqProblem::uniform(heat_analog(13)), cfg);
}

}  // namespace

int main() {
  const double root = std::sqrt(2.0) - 1.0;

  criterion(1, "scalar Riccati ground truth", [&] {
    NewtonConfig cfg;
    cfg.full_pattern = true;
    cfg.cgls.tol = 1e-12;
    cfg.residual_tol = 1e-12;
    cfg.n_max = 40;
    const auto sol = solve_riccati(scalar_problem(), cfg);
    const double z = sol.Z.coeff(0, 0), f = sol.F.coeff(0, 0);
    const bool ok = std::abs(z - root) <= 1e-6 && std::abs(f - root) <= 1e-6;
    return Outcome{ok, "Z = " + csv::num(z) + ", F = " + csv::num(f) + ", sqrt(2) - 1 = " +
                           csv::num(root)};
  }, 1.0);

  criterion(2, "Method 1 full pattern vs dense_lyap, 20 instances", [&] {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Index n = 10 + static_cast<Index>((s * 7) % 41);  // 10..50
      const SparseMatrix e = random_spd(n, 1, 100 + s), abar = random_stable(n, 2, 200 + s);
      const SparseMatrix p = random_rhs(n, 1, 300 + s);
      const SparseMatrix exact = oracle::dense_lyap(abar, e, p);
      const auto sol = solve_lyap_lsq(abar, e, p, SparsityPattern::full(n, n), {1e-10, 100000}, &exact);
      worst = std::max(worst, sol.report.error.value_or(1.0));
    }
    return Outcome{worst <= 1e-6, "max relative error " + fmt(worst) + " (limit 1e-06)"};
  }, 30.0);

  criterion(3, "reduced system vs explicit Kronecker matrix, 50 instances", [&] {
    double worst = 0.0;
    bool structural = true;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const Index n = 1 + static_cast<Index>(s % 8);
      const SparseMatrix abar = random_sparse(n, n, 0.5, s), e = random_sparse(n, n, 0.5, s + 50);
      const SparseMatrix p = random_sparse(n, n, 0.5, s + 100);
      const SparsityPattern pat = s % 2 ? SparsityPattern::full(n, n)
                                        : pattern_union(SparsityPattern::identity(n),
                                                        nonzero_pattern(random_sparse(n, n, 0.4, s + 150)));
      const ReducedSystem sys = assemble_reduced(abar, e, p, pat);
      worst = std::max(worst, reduced_gap(sys, explicit_m(dense(abar), dense(e)), dense(p), structural));
    }
    return Outcome{worst <= 1e-15 && structural,
                   "max entrywise gap " + fmt(worst) + (structural ? "" : ", dropped row not empty")};
  });

  criterion(4, "w = 2 pattern mass on 169 analog", [&] {
    const Step s = heat_step(13);
    const Dense z = oracle::dense_lyap(dense(s.abar), dense(s.model.E), dense(s.p));
    auto mass = [&](Index w, double& density) {
      PatternConfig cfg;
      cfg.w = w;
      const SparsityPattern pat = apriori_pattern(s.abar, s.model.E, s.p, cfg);
      double inside = 0.0;
      for (Index i = 0; i < z.rows(); ++i)
        for (Index j : pat.row(i)) inside += z(i, j) * z(i, j);
      density = static_cast<double>(pat.nnz()) / static_cast<double>(z.size());
      return inside / z.squaredNorm();
    };
    std::string d;
    double frac = 0.0;
    for (Index w : {2, 1, 0}) {
      double density = 0.0;
      const double m = mass(w, density);
      if (w == 2) frac = m;
      d += (d.empty() ? "" : "; ") + std::string("w = ") + std::to_string(w) + " mass " + csv::num(m) +
           " at density " + fmt(density);
    }
    return Outcome{frac >= 0.8, d};
  });

  criterion(5, "Method 1 error vs w on 169 and 841 analogs", [&] {
    bool ok = true;
    std::string detail;
    for (Index nx : {13, 29}) {
      const Step s = heat_step(nx);
      const Index n = s.model.states();
      const SparseMatrix exact = oracle::dense_lyap(s.abar, s.model.E, s.p, 1000);
      std::vector<double> errs;
      for (Index w = 0; w <= 3; ++w) {
        PatternConfig pc;
        pc.w = w;
        const SparsityPattern pat = apriori_pattern(s.abar, s.model.E, s.p, pc);
        const auto sol = solve_lyap_lsq(s.abar, s.model.E, s.p, pat, {1e-7, 20000}, &exact);
        errs.push_back(sol.report.error.value_or(1.0));
      }
      for (std::size_t i = 1; i < errs.size(); ++i) ok = ok && errs[i] <= 1.05 * errs[i - 1];
      detail += (detail.empty() ? "" : "; ") + std::string("n = ") + std::to_string(n) + " e(w=0..3) =";
      for (double e : errs) detail += " " + fmt(e);
    }
    return Outcome{ok, detail};
  });

  std::vector<RiccatiSolution> runs;
  criterion(6, "Newton steady residual vs w and full-pattern drop", [&] {
    std::string detail = "n = 169 final v_k(w=0,1,2) =";
    bool ok = true;
    for (Index w = 0; w <= 2; ++w) {
      runs.push_back(newton_169(w));
      detail += " " + fmt(runs.back().reports.back().v);
      if (w > 0) ok = ok && runs[w].reports.back().v <= runs[w - 1].reports.back().v;
    }
    double worst_drop = std::numeric_limits<double>::infinity();
    for (auto g : {grid2d(5, 5, Discretization::FiniteElement2D), grid2d(7, 7, Discretization::FiniteElement2D),
                   grid1d(40, Discretization::FiniteElement1D)}) {
      g.diffusivity = 0.1;
      NewtonConfig cfg;
      cfg.full_pattern = true;
      cfg.cgls.tol = 1e-10;
      cfg.cgls.max_iter = 100000;
      cfg.residual_tol = 1e-10;
      const auto sol = solve_riccati(LqProblem::uniform(generate_model(g, 0.5, 8)), cfg);
      worst_drop = std::min(worst_drop, sol.reports.front().v / sol.reports.back().v);
    }
    ok = ok && worst_drop >= 1e3;
    detail += "; full pattern n <= 49 smallest v_1/v_final = " + fmt(worst_drop);
    return Outcome{ok, detail};
  });

  criterion(7, "gradient vs central differences, n = 10, 5 seeds", [&] {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Index n = 10;
      const SparseMatrix abar = random_stable(n, 2, seed), e = random_spd(n, 1, seed + 10);
      const SparseMatrix p = random_rhs(n, 1, seed + 20);
      const SparsityPattern mask = pattern_power_sum(nonzero_pattern(random_banded(n, 2, seed + 30)), 1);
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<Triplet> t;
      for (Index i = 0; i < n; ++i)
        for (Index j : mask.row(i)) t.push_back({i, j, u(rng)});
      const SparseMatrix z = SparseMatrix::from_triplets(n, n, std::move(t));
      const LyapunovOperator op(abar, e);
      const SparseMatrix grad = lyap_gradient(op, op.residual(z, p), mask);
      const double h = 1e-4;
      for (Index i = 0; i < n; ++i)
        for (Index j : mask.row(i)) {
          const SparseMatrix bump = SparseMatrix::from_triplets(n, n, {{i, j, h}});
          const double fd = (lyap_objective(op, spadd(z, bump), p) -
                             lyap_objective(op, spadd(z, bump, 1.0, -1.0), p)) / (2.0 * h);
          worst = std::max(worst, std::abs(grad.coeff(i, j) - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    return Outcome{worst <= 1e-5, "max relative gap " + fmt(worst) + " (limit 1e-05)"};
  });

  criterion(8, "Faber order and quadrature convergence", [&] {
    using clock = std::chrono::steady_clock;
    auto secs = [](clock::time_point t0) {
      return std::chrono::duration<double>(clock::now() - t0).count();
    };
    auto t0 = clock::now();
    const Outcome a = [&] {
      const Step s = heat_step(8);
      const SparseMatrix inv = spai(s.model.E, inverse_pattern(s.model.E, 3)).inverse;
      const SparseMatrix a1 = spgemm(transpose(inv), transpose(s.abar));
      const SpectrumBounds b = spectrum_bounds(a1);
      const double t = 0.1;
      const Dense ref = oracle::dense_expm(t * oracle::to_dense(a1));
      FaberConfig cfg;
      cfg.k2 = 4;
      std::vector<double> errs;
      for (Index p : {5, 10, 20, 30}) {
        cfg.p = p;
        errs.push_back(rel(oracle::to_dense(faber_expm(a1, t, b, cfg)), ref));
      }
      bool ok = errs.back() < errs.front();
      for (std::size_t i = 1; i < errs.size(); ++i) ok = ok && errs[i] <= errs[i - 1] * (1.0 + 1e-9) + 1e-12;
      std::string d = "error(p=5,10,20,30) =";
      for (double e : errs) d += " " + fmt(e);
      return Outcome{ok, d};
    }();
    const double ta = secs(t0);
    t0 = clock::now();
    const Outcome b = [&] {
      const Step s = heat_step(10);
      const Dense exact = oracle::dense_lyap(dense(s.abar), dense(s.model.E), dense(s.p));
      GpConfig cfg;
      cfg.k1 = 3;
      std::vector<double> errs;
      for (Index q : {5, 10, 20, 40}) {
        cfg.q = q;
        errs.push_back(rel(dense(initial_guess(s.abar, s.model.E, s.p, cfg, {}).x3), exact));
      }
      bool ok = true;
      for (std::size_t i = 1; i < errs.size(); ++i) ok = ok && errs[i] < errs[i - 1];
      std::string d = "error(q=5,10,20,40) =";
      for (double e : errs) d += " " + fmt(e);
      return Outcome{ok, d};
    }();
    const double tb = secs(t0);
    return Outcome{a.pass && b.pass && ta < 60.0 && tb < 60.0,
                   "(a) n = 64 " + a.detail + " in " + fmt(ta) + " s; (b) n = 100 " + b.detail +
                       " in " + fmt(tb) + " s"};
  });

  criterion(9, "SPAI residual vs k1 and dense least squares", [&] {
    auto mass2d = [](Index nx) {
      return generate_model(grid2d(nx, nx, Discretization::FiniteElement2D), 0.5, 1).E;
    };
    const SparseMatrix m1 = generate_model(grid1d(30, Discretization::FiniteElement1D), 0.5, 1).E;
    bool monotone = true;
    std::string d = "residual(k1=1,2,3):";
    for (const SparseMatrix& e : {m1, mass2d(8), mass2d(13)}) {
      double prev = std::numeric_limits<double>::infinity();
      d += " n=" + std::to_string(e.rows());
      for (Index k1 : {1, 2, 3}) {
        const double r = spai(e, inverse_pattern(e, k1)).residual;
        monotone = monotone && r <= prev * (1.0 + 1e-12);
        prev = r;
        d += " " + fmt(r);
      }
    }
    double gap = 0.0;
    for (const SparseMatrix& e : {m1, mass2d(8)})
      for (Index k1 : {1, 2, 3}) {
        const SparsityPattern pat = inverse_pattern(e, k1);
        gap = std::max(gap, max_abs_diff(dense(detail::spai_right(e, pat).first),
                                         dense_right_spai(dense(e), pat)));
      }
    return Outcome{monotone && gap <= 1e-10, d + "; max column gap " + fmt(gap)};
  });

  criterion(10, "w = 0 closed loop on 169 analog", [&] {
    const LqProblem prob = LqProblem::uniform(heat_analog(13));
    const RiccatiSolution sol = runs.size() > 0 ? runs[0] : newton_169(0);
    const Dense acl = dense(prob.model.A) - dense(prob.model.B) * dense(sol.F);
    const double re = oracle::max_real_part(oracle::pencil_eigs(acl, dense(prob.model.E)));
    const SparseMatrix f_exact = oracle::from_dense(oracle::dense_riccati(prob).F);
    double worst = -1.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto x0 = random_state(prob.model.states(), 100 + seed);
      const double approx = simulate_closed_loop(prob, sol.F, x0, 1e-3, 2000, 2).cost;
      const double exact = simulate_closed_loop(prob, f_exact, x0, 1e-3, 2000, 2).cost;
      worst = std::max(worst, approx / exact - 1.0);
    }
    return Outcome{re < 0.0 && worst <= 0.10,
                   "max Re(eig) " + fmt(re) + ", worst cost excess " + fmt(100.0 * worst) + "%"};
  });

  criterion(11, "nnz(M1)/n scaling and Method 2 peak memory, w = 1", [&] {
    std::vector<double> ratio;
    bool smaller = true;
    std::string d;
    for (Index nx : {13, 29, 61}) {
      const Step s = heat_step(nx);
      const Index n = s.model.states();
      PatternConfig pc;
      pc.w = 1;
      const SparsityPattern pat = apriori_pattern(s.abar, s.model.E, s.p, pc);
      const Index m1 = assemble_reduced(s.abar, s.model.E, s.p, pat).m1.nnz();
      GpConfig gp;
      gp.max_iter = 50;
      const Index peak = solve_lyap_gp_initialized(s.abar, s.model.E, s.p, pat, gp, {}).report.peak_nnz;
      ratio.push_back(static_cast<double>(m1) / static_cast<double>(n));
      smaller = smaller && peak < m1;
      d += (d.empty() ? "" : "; ") + std::string("n = ") + std::to_string(n) + " nnz(M1)/n " +
           fmt(ratio.back()) + ", GP peak " + std::to_string(peak) + " vs nnz(M1) " + std::to_string(m1);
    }
    const double spread = *std::max_element(ratio.begin(), ratio.end()) /
                          *std::min_element(ratio.begin(), ratio.end());
    return Outcome{spread < 3.0 && smaller, "spread " + fmt(spread) + "x; " + d};
  });

  criterion(12, "byte-identical outputs across two runs", [&] {
    const fs::path root_dir = fs::path(BANDLQ_TEST_WORKDIR) / "acceptance_determinism";
    fs::remove_all(root_dir);
    fs::create_directories(root_dir);
    const fs::path cfg = root_dir / "run.json";
    std::ofstream(cfg) << R"({
      "model": {"dimension": 2, "nodes": 7, "diffusivity": 0.1,
                "discretization": "FE-bilinear-2D", "io_fraction": 0.5, "seed": 5},
      "pattern": {"w": 1},
      "riccati": {"n_max": 6},
      "sim": {"x0": "random", "steps": 500},
      "oracle": {"enabled": true}
    })";
    for (const char* sub : {"a", "b"}) {
      const std::string base = " --config " + cfg.string() + " --out " + (root_dir / sub).string();
      if (run_cli("genmodel" + base) != 0) return Outcome{false, "genmodel failed"};
      if (run_cli("solve" + base) == 1) return Outcome{false, "solve failed"};
    }
    int files = 0, differ = 0;
    std::string which;
    for (const auto& entry : fs::directory_iterator(root_dir / "a")) {
      const auto ext = entry.path().extension();
      if (ext != ".mtx" && ext != ".csv") continue;
      if (entry.path().filename() == "timings.csv") continue;
      ++files;
      if (slurp(entry.path()) != slurp(root_dir / "b" / entry.path().filename())) {
        ++differ;
        which += " " + entry.path().filename().string();
      }
    }
    return Outcome{files >= 10 && differ == 0,
                   std::to_string(files) + " Matrix Market/CSV files compared, " +
                       std::to_string(differ) + " differ" + which};
  });

  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " criteria FAILED")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
