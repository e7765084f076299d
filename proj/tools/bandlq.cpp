// bandlq: model generation, banded Lyapunov/Riccati solves, closed-loop
// simulation and scaling benchmarks. Exit codes: 0 converged, 2 completed
// without convergence, 1 error.

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bandlq/bandlq.hpp"
#include "bandlq/config.hpp"
#include "bandlq/oracle.hpp"

#ifndef BANDLQ_VERSION
#define BANDLQ_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace bandlq;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kNotConverged = 2;

class DependencyError : public Error {
 public:
  using Error::Error;
};

int worst(int a, int b) {
  if (a == kError || b == kError) return kError;
  return std::max(a, b);
}

/// Flat JSON object with numbers rendered at 17 significant digits.
class JsonWriter {
 public:
  JsonWriter& num(const std::string& k, double v) { return raw(k, json_num(v)); }
  JsonWriter& num(const std::string& k, Index v) { return raw(k, std::to_string(v)); }
  JsonWriter& num(const std::string& k, std::uint64_t v) { return raw(k, std::to_string(v)); }
  JsonWriter& str(const std::string& k, const std::string& v) {
    return raw(k, nlohmann::json(v).dump());
  }
  JsonWriter& boolean(const std::string& k, bool v) { return raw(k, v ? "true" : "false"); }
  JsonWriter& object(const std::string& k, const JsonWriter& o) { return raw(k, o.render(1)); }
  JsonWriter& raw(const std::string& k, std::string v) {
    items_.emplace_back(k, std::move(v));
    return *this;
  }

  std::string render(int depth = 0) const {
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    std::string s = "{\n";
    for (std::size_t i = 0; i < items_.size(); ++i) {
      s += pad + nlohmann::json(items_[i].first).dump() + ": " + items_[i].second;
      s += i + 1 < items_.size() ? ",\n" : "\n";
    }
    return s + std::string(static_cast<std::size_t>(2 * depth), ' ') + "}";
  }

  void save(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << render() << '\n';
  }

 private:
  static std::string json_num(double v) { return std::isfinite(v) ? csv::num(v) : "null"; }
  std::vector<std::pair<std::string, std::string>> items_;
};

struct Options {
  std::string config;
  std::string out;
  std::string oracle;
  std::optional<std::uint64_t> seed;
  std::string stage = "all";
};

class Run {
 public:
  Run(const Options& opt, std::string command) : command_(std::move(command)) {
    cfg_ = load_config(opt.config);
    if (!opt.out.empty()) cfg_.output = opt.out;
    if (opt.oracle == "on") cfg_.oracle.enabled = true;
    if (opt.oracle == "off") cfg_.oracle.enabled = false;
    if (opt.seed) cfg_.model.seed = *opt.seed;
    dir_ = cfg_.output;
    fs::create_directories(dir_);
    timings_.open(dir_ / "timings.csv", std::ios::binary);
    timings_ << "stage,wall_ms\n";
  }

  const RunConfig& cfg() const { return cfg_; }
  const fs::path& dir() const { return dir_; }

  void time(const std::string& stage, double ms) {
    timings_ << stage << ',' << csv::num(ms) << '\n';
    timings_.flush();
  }

  void write_manifest(const std::string& stage) const {
    JsonWriter seeds;
    seeds.num("model", cfg_.model.seed).num("x0", cfg_.sim.x0_seed);
    JsonWriter m;
    m.str("command", command_)
        .str("stage", stage)
        .str("version", BANDLQ_VERSION)
        .str("config_hash", config_hash(cfg_))
        .object("seeds", seeds)
        .raw("config", [&] {
          auto j = to_json(cfg_);
          j.erase("output");  // outputs do not depend on where they are written
          return j.dump();
        }());
    m.save(dir_ / "manifest.json");
  }

  fs::path bundle_dir() const {
    return cfg_.model.bundle.empty() ? dir_ : fs::path(cfg_.model.bundle);
  }

  bool oracle_for(Index n) const { return cfg_.oracle.enabled && n <= cfg_.oracle.n_cap; }

 private:
  RunConfig cfg_;
  std::string command_;
  fs::path dir_;
  std::ofstream timings_;
};

fs::path require(const fs::path& file, const std::string& producer) {
  if (!fs::exists(file))
    throw DependencyError("missing prerequisite '" + file.string() + "'; run " + producer +
                          " first");
  return file;
}

LqProblem problem_of(DescriptorModel m, const RunConfig& cfg) {
  LqProblem p = LqProblem::uniform(std::move(m), cfg.q_weight, cfg.r_weight);
  p.validate();
  return p;
}

// ---- genmodel ----

JsonWriter grid_json(const GridSpec& g) {
  JsonWriter j;
  j.num("dimension", static_cast<Index>(g.dimension))
      .raw("nodes", nlohmann::json(g.nodes).dump())
      .raw("length", [&] {
        std::string s = "[";
        for (std::size_t i = 0; i < g.length.size(); ++i)
          s += (i ? ", " : "") + csv::num(g.length[i]);
        return s + "]";
      }())
      .num("diffusivity", g.diffusivity)
      .str("discretization", to_string(g.discretization));
  return j;
}

void save_bundle(const DescriptorModel& m, const RunConfig& cfg, const fs::path& dir) {
  mm::save((dir / "E.mtx").string(), m.E);
  mm::save((dir / "A.mtx").string(), m.A);
  mm::save((dir / "B.mtx").string(), m.B);
  mm::save((dir / "C.mtx").string(), m.C);
  {
    std::ofstream perm(dir / "perm.txt", std::ios::binary);
    for (Index i : m.permutation.forward()) perm << i << '\n';
  }
  JsonWriter j;
  j.num("n", m.states())
      .num("inputs", m.inputs())
      .num("outputs", m.outputs())
      .num("nnz_E", m.E.nnz())
      .num("nnz_A", m.A.nnz())
      .num("nnz_B", m.B.nnz())
      .num("nnz_C", m.C.nnz())
      .num("bandwidth_E", bandwidth(nonzero_pattern(m.E)))
      .num("bandwidth_A", bandwidth(nonzero_pattern(m.A)))
      .num("io_fraction", cfg.model.io_fraction)
      .num("seed", cfg.model.seed)
      .object("grid", grid_json(m.grid));
  j.save(dir / "model.json");
}

DescriptorModel load_bundle(const fs::path& dir) {
  const std::string hint = "'bandlq genmodel'";
  DescriptorModel m;
  m.E = mm::load_matrix(require(dir / "E.mtx", hint).string());
  m.A = mm::load_matrix(require(dir / "A.mtx", hint).string());
  m.B = mm::load_matrix(require(dir / "B.mtx", hint).string());
  m.C = mm::load_matrix(require(dir / "C.mtx", hint).string());
  m.permutation = Permutation::identity(m.A.rows());
  return m;
}

int cmd_genmodel(const Options& opt) {
  Run run(opt, "genmodel");
  Stopwatch clock;
  const DescriptorModel m =
      generate_model(run.cfg().model.grid, run.cfg().model.io_fraction, run.cfg().model.seed);
  save_bundle(m, run.cfg(), run.dir());
  run.time("genmodel", clock.ms());
  run.write_manifest("genmodel");
  std::cout << "model n=" << m.states() << " written to " << run.dir().string() << '\n';
  return kOk;
}

// ---- solve stages ----

/// Operands of the first Newton step from Z0 = z0_scale I.
std::pair<SparseMatrix, SparseMatrix> first_step(const LqProblem& prob, const NewtonConfig& nc) {
  const Index n = prob.model.states();
  const SparseMatrix f = feedback(SparseMatrix::identity(n, nc.z0_scale), prob);
  return newton_step_operands(f, prob);
}

SparsityPattern solution_pattern(const SparseMatrix& abar, const SparseMatrix& e,
                                 const SparseMatrix& p, const NewtonConfig& nc) {
  const Index n = abar.rows();
  return nc.full_pattern ? SparsityPattern::full(n, n) : apriori_pattern(abar, e, p, nc.pattern);
}

int stage_pattern(Run& run, const LqProblem& prob) {
  const auto& nc = run.cfg().newton;
  Stopwatch clock;
  auto [abar, p] = first_step(prob, nc);
  const SparsityPattern pat = solution_pattern(abar, prob.model.E, p, nc);
  mm::save((run.dir() / "pattern.mtx").string(), pat);
  const Index n = pat.rows();
  JsonWriter j;
  j.num("n", n)
      .num("w", nc.full_pattern ? Index{-1} : nc.pattern.w)
      .boolean("full", nc.full_pattern)
      .num("nnz", pat.nnz())
      .num("density", static_cast<double>(pat.nnz()) / (static_cast<double>(n) * n));
  if (run.oracle_for(n)) {
    // share of the exact solution's Frobenius mass that falls on the pattern
    const SparseMatrix exact = oracle::dense_lyap(abar, prob.model.E, p, run.cfg().oracle.n_cap);
    const double total = frobenius(exact);
    const double on = frobenius(project(exact, pat));
    j.num("mass_captured", total > 0.0 ? (on * on) / (total * total) : 1.0);
  }
  j.save(run.dir() / "density.json");
  run.time("pattern", clock.ms());
  return kOk;
}

int stage_lyap(Run& run, const LqProblem& prob) {
  const auto& nc = run.cfg().newton;
  const SparsityPattern pat =
      mm::load_pattern(require(run.dir() / "pattern.mtx", "the pattern stage").string());
  Stopwatch clock;
  auto [abar, p] = first_step(prob, nc);
  const Index n = abar.rows();
  if (pat.rows() != n || pat.cols() != n)
    throw ShapeError("pattern.mtx is " + detail::shape_str(pat.rows(), pat.cols()) +
                     " but the model has n = " + std::to_string(n));
  std::optional<SparseMatrix> exact;
  if (run.oracle_for(n)) exact = oracle::dense_lyap(abar, prob.model.E, p, run.cfg().oracle.n_cap);
  const SparseMatrix* ex = exact ? &*exact : nullptr;

  SparseMatrix z;
  SolveReport rep;
  if (nc.method == LyapMethod::Lsq) {
    auto sol = solve_lyap_lsq(abar, prob.model.E, p, pat, nc.cgls, ex);
    z = std::move(sol.z);
    rep = std::move(sol.report);
  } else {
    auto sol = solve_lyap_gp_initialized(abar, prob.model.E, p, pat, nc.gp, nc.faber, ex);
    z = std::move(sol.z);
    rep = std::move(sol.report);
  }
  rep.w = nc.full_pattern ? -1 : nc.pattern.w;
  mm::save((run.dir() / "Zhat.mtx").string(), z);
  {
    std::ofstream out(run.dir() / "lyap_report.csv", std::ios::binary);
    out << csv::kSolveHeader << '\n';
    csv::write_row(out, rep);
  }
  csv::write_history((run.dir() / "lyap_history.csv").string(),
                     nc.method == LyapMethod::Lsq ? "normal_residual" : "objective", rep.history);
  run.time("lyap", clock.ms());
  return rep.converged ? kOk : kNotConverged;
}

int stage_riccati(Run& run, const LqProblem& prob) {
  const auto& nc = run.cfg().newton;
  Stopwatch clock;
  const RiccatiSolution sol = solve_riccati(prob, nc);
  const Index n = prob.model.states();
  {
    std::ofstream out(run.dir() / "newton_report.csv", std::ios::binary);
    out << "k,v_k,lyap_residual,nnz_z,nnz_f,lyap_iterations,lyap_converged\n";
    for (const auto& r : sol.reports)
      out << r.k << ',' << csv::num(r.v) << ',' << csv::num(r.lyap_residual) << ',' << r.nnz_z
          << ',' << r.nnz_f << ',' << r.lyap_iterations << ',' << (r.lyap_converged ? 1 : 0)
          << '\n';
  }
  for (const auto& r : sol.reports) run.time("riccati_step_" + std::to_string(r.k), r.wall_ms);

  const bool failed =
      sol.status == NewtonStatus::Diverged || sol.status == NewtonStatus::LyapunovFailure;
  JsonWriter j;
  j.str("status", to_string(sol.status))
      .str("message", sol.message)
      .num("steps", static_cast<Index>(sol.reports.size()))
      .num("n", n)
      .num("nnz_pattern", sol.pattern.nnz());
  if (!sol.reports.empty()) {
    j.num("v_1", sol.reports.front().v).num("v_final", sol.reports.back().v);
  }
  if (!failed) {
    mm::save((run.dir() / "Zricc.mtx").string(), sol.Z);
    mm::save((run.dir() / "F.mtx").string(), sol.F);
    if (run.oracle_for(n)) {
      const auto ref = oracle::dense_riccati(prob, run.cfg().oracle.n_cap, nc.z0_scale);
      j.num("e", metric_e(sol.Z, oracle::from_dense(ref.Z)));
      j.num("f_error", metric_e(sol.F, oracle::from_dense(ref.F)));
    }
  }
  j.save(run.dir() / "riccati.json");
  run.time("riccati", clock.ms());
  if (failed) {
    std::cerr << "riccati: " << to_string(sol.status) << ": " << sol.message << '\n';
    return kError;
  }
  return sol.status == NewtonStatus::Converged ? kOk : kNotConverged;
}

std::vector<double> initial_state(const SimSection& s, Index n) {
  std::vector<double> x(static_cast<std::size_t>(n), 1.0);
  if (s.x0 == "random") {
    std::mt19937_64 rng(s.x0_seed);
    // uniform on [-1, 1) from the top 53 bits; portable across standard libraries
    for (double& v : x) v = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
  }
  return x;
}

int stage_simulate(Run& run, const LqProblem& prob) {
  const auto& sc = run.cfg().sim;
  const SparseMatrix f =
      mm::load_matrix(require(run.dir() / "F.mtx", "the riccati stage").string());
  Stopwatch clock;
  const Index n = prob.model.states();
  const std::vector<double> x0 = initial_state(sc, n);
  const SimulationResult sim = simulate_closed_loop(prob, f, x0, sc.dt, sc.steps, sc.max_rows);
  {
    std::ofstream out(run.dir() / "trajectory.csv", std::ios::binary);
    out << "step,t,x_norm,cost_rate\n";
    for (const auto& r : sim.trajectory)
      out << r.step << ',' << csv::num(r.t) << ',' << csv::num(r.x_norm) << ','
          << csv::num(r.cost_rate) << '\n';
  }
  double xf = 0.0;
  for (double v : sim.x_final) xf += v * v;
  JsonWriter j;
  j.num("cost", sim.cost)
      .num("dt", sc.dt)
      .num("steps", sc.steps)
      .str("x0", sc.x0)
      .num("x_final_norm", std::sqrt(xf));
  if (run.oracle_for(n)) {
    const oracle::DenseLq d(prob);
    const oracle::Dense acl = d.A - d.B * oracle::to_dense(f);
    const double re = oracle::max_real_part(oracle::pencil_eigs(acl, d.E, run.cfg().oracle.n_cap));
    const auto ref = oracle::dense_riccati(prob, run.cfg().oracle.n_cap, run.cfg().newton.z0_scale);
    const SimulationResult best =
        simulate_closed_loop(prob, oracle::from_dense(ref.F), x0, sc.dt, sc.steps, 2);
    j.num("max_real_eig", re)
        .boolean("stable", re < 0.0)
        .num("oracle_cost", best.cost)
        .num("excess", best.cost > 0.0 ? sim.cost / best.cost - 1.0 : 0.0);
  }
  j.save(run.dir() / "cost.json");
  run.time("simulate", clock.ms());
  return kOk;
}

int cmd_solve(const Options& opt) {
  static const std::vector<std::string> kStages{"pattern", "lyap", "riccati", "simulate"};
  Run run(opt, "solve");
  run.write_manifest(opt.stage);
  const LqProblem prob = problem_of(load_bundle(run.bundle_dir()), run.cfg());
  int code = kOk;
  for (const auto& s : kStages) {
    if (opt.stage != "all" && opt.stage != s) continue;
    int c = kOk;
    if (s == "pattern") c = stage_pattern(run, prob);
    if (s == "lyap") c = stage_lyap(run, prob);
    if (s == "riccati") c = stage_riccati(run, prob);
    if (s == "simulate") c = stage_simulate(run, prob);
    code = worst(code, c);
    std::cout << s << ": " << (c == kOk ? "ok" : c == kNotConverged ? "not converged" : "failed")
              << '\n';
    if (c == kError) break;
  }
  return code;
}

// ---- bench ----

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '"') c = ';';
  return s;
}

int cmd_bench(const Options& opt) {
  Run run(opt, "bench");
  run.write_manifest("bench");
  const auto& cfg = run.cfg();
  std::ofstream out(run.dir() / "bench.csv", std::ios::binary);
  out << "n,method,w,nnz_pattern,nnz_m1,peak_nnz,iterations,converged,e,wall_ms,status\n";
  int code = kOk;
  for (Index size : cfg.bench.sizes) {
    GridSpec g = cfg.model.grid;
    g.nodes.assign(static_cast<std::size_t>(g.dimension), size);
    const Index n = g.state_dim();
    auto fail_row = [&](const std::string& method, const std::string& what) {
      out << n << ',' << method << ',' << cfg.bench.w << ",,,,,0,,," << csv_safe(what) << '\n';
      code = worst(code, kNotConverged);
    };
    NewtonConfig nc = cfg.newton;
    nc.pattern.w = cfg.bench.w;
    nc.full_pattern = false;
    std::optional<LqProblem> prob;
    SparseMatrix abar, p;
    SparsityPattern pat;
    try {
      prob = problem_of(generate_model(g, cfg.model.io_fraction, cfg.model.seed), cfg);
      std::tie(abar, p) = first_step(*prob, nc);
      pat = apriori_pattern(abar, prob->model.E, p, nc.pattern);
    } catch (const std::exception& e) {
      fail_row("setup", e.what());
      continue;
    }
    const SparseMatrix& e = prob->model.E;
    std::optional<SparseMatrix> exact;
    if (run.oracle_for(n)) {
      try {
        Stopwatch clock;
        exact = oracle::dense_lyap(abar, e, p, cfg.oracle.n_cap);
        out << n << ",dense," << cfg.bench.w << ',' << n * n << ",," << n * n << ",0,1,0,"
            << csv::num(clock.ms()) << ",ok\n";
      } catch (const std::exception& ex) {
        fail_row("dense", ex.what());
      }
    }
    const SparseMatrix* ex = exact ? &*exact : nullptr;
    for (const auto& method : cfg.bench.methods) {
      try {
        SolveReport rep = method == "lsq"
                              ? solve_lyap_lsq(abar, e, p, pat, nc.cgls, ex).report
                              : solve_lyap_gp_initialized(abar, e, p, pat, nc.gp, nc.faber, ex).report;
        out << n << ',' << method << ',' << cfg.bench.w << ',' << rep.nnz_pattern << ','
            << (method == "lsq" ? std::to_string(rep.nnz_m1) : "") << ',' << rep.peak_nnz << ','
            << rep.iterations << ',' << (rep.converged ? 1 : 0) << ',' << csv::opt(rep.error)
            << ',' << csv::num(rep.wall_ms) << ",ok\n";
        if (!rep.converged) code = worst(code, kNotConverged);
      } catch (const std::exception& ex2) {
        fail_row(method, ex2.what());
      }
      out.flush();
    }
    std::cout << "bench n=" << n << " done\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Banded approximate solutions of large Lyapunov and Riccati equations"};
  app.set_version_flag("--version", BANDLQ_VERSION);
  app.require_subcommand(1);
  Options opt;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (overrides the config)");
    sub->add_option("--seed", opt.seed, "model seed (overrides the config)");
  };
  auto* gen = app.add_subcommand("genmodel", "write the descriptor model bundle");
  common(gen);
  auto* solve = app.add_subcommand("solve", "run pattern, lyap, riccati and simulate stages");
  common(solve);
  solve->add_option("--stage", opt.stage, "single stage to run")
      ->check(CLI::IsMember({"all", "pattern", "lyap", "riccati", "simulate"}));
  solve->add_option("--oracle", opt.oracle, "dense reference solutions")
      ->check(CLI::IsMember({"on", "off"}));
  auto* bench = app.add_subcommand("bench", "Lyapunov solver scaling over grid sizes");
  common(bench);
  bench->add_option("--oracle", opt.oracle, "dense reference rows")
      ->check(CLI::IsMember({"on", "off"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kError;
  }

  try {
    if (gen->parsed()) return cmd_genmodel(opt);
    if (solve->parsed()) return cmd_solve(opt);
    if (bench->parsed()) return cmd_bench(opt);
  } catch (const DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << '\n';
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
