#pragma once

// Run configuration: strict JSON schema with defaults, unknown keys rejected.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bandlq/control.hpp"
#include "bandlq/error.hpp"
#include "bandlq/model.hpp"
#include "bandlq/oracle.hpp"

namespace bandlq {

/// Schema or syntax problem in a config file; what() carries file:line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ModelSection {
  GridSpec grid;
  double io_fraction = 0.5;
  std::uint64_t seed = 1;
  std::string bundle;  ///< read the model from this directory instead of the output dir
};

struct SimSection {
  double dt = 1e-3;
  Index steps = 2000;
  std::string x0 = "ones";  ///< "ones" or "random"
  std::uint64_t x0_seed = 7;
  Index max_rows = 1000;
};

struct OracleSection {
  bool enabled = false;
  Index n_cap = oracle::kDefaultCap;
};

struct BenchSection {
  std::vector<Index> sizes{13, 29};  ///< interior nodes per axis
  std::vector<std::string> methods{"lsq", "gp"};
  Index w = 1;
};

struct RunConfig {
  ModelSection model;
  NewtonConfig newton;  ///< pattern, lyap and riccati sections
  double q_weight = 1.0;
  double r_weight = 1.0;
  SimSection sim;
  OracleSection oracle;
  BenchSection bench;
  std::string output = "out";
};

namespace detail {

inline long line_of(const std::string& text, std::size_t offset) {
  long line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

/// Best-effort line of a key path: finds each quoted key in turn.
inline long locate(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& k : path) {
    const auto hit = text.find('"' + k + '"', pos);
    if (hit == std::string::npos) break;
    pos = hit;
  }
  return line_of(text, pos);
}

class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::vector<std::string> path, const std::string& file,
               const std::string& text)
      : j_(j), path_(std::move(path)), file_(file), text_(text) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string dotted;
    for (const auto& k : path) dotted += (dotted.empty() ? "" : ".") + k;
    throw ConfigError(file_ + ":" + std::to_string(locate(text_, path)) + ": " +
                      (dotted.empty() ? "" : "'" + dotted + "': ") + msg);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    auto p = sub(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(p, "expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(p, "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(p, "expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned()) fail(p, "expected a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(p, "expected a number");
    } else {
      if (!v.is_array()) fail(p, "expected an array");
      for (const auto& x : v) {
        using E = typename T::value_type;
        if constexpr (std::is_same_v<E, std::string>) {
          if (!x.is_string()) fail(p, "expected an array of strings");
        } else {
          if (!x.is_number()) fail(p, "expected an array of numbers");
          if (std::is_integral_v<E> && !x.is_number_integer())
            fail(p, "expected an array of integers");
        }
      }
    }
    out = v.get<T>();
  }

  /// Reads a number or a per-axis array into `out`.
  template <class E>
  void get_axes(const std::string& key, std::vector<E>& out, std::size_t axes) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (v.is_number()) {
      if (std::is_integral_v<E> && !v.is_number_integer()) fail(sub(key), "expected an integer");
      out.assign(axes, v.get<E>());
    } else {
      get(key, out);
    }
  }

  ConfigReader child(const std::string& key) {
    used_.insert(key);
    return ConfigReader(j_.at(key), sub(key), file_, text_);
  }

  std::vector<std::string> sub(const std::string& key) const {
    auto p = path_;
    p.push_back(key);
    return p;
  }

  /// Rejects keys that no get() asked for.
  void finish() const {
    for (const auto& item : j_.items())
      if (!used_.count(item.key())) fail(sub(item.key()), "unknown key");
  }

 private:
  const nlohmann::json& j_;
  std::vector<std::string> path_;
  const std::string& file_;
  const std::string& text_;
  std::set<std::string> used_;
};

}  // namespace detail

/// Parses `text` (named `file` in messages). Values not given keep their defaults.
inline RunConfig parse_config(const std::string& text, const std::string& file = "<config>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file + ":" + std::to_string(detail::line_of(text, e.byte)) + ": " +
                      e.what());
  }
  RunConfig cfg;
  detail::ConfigReader root(j, {}, file, text);
  auto run = [&](const std::string& key, auto&& body) {
    if (!root.has(key)) return;
    detail::ConfigReader c = root.child(key);
    body(c);
    c.finish();
  };
  auto wrap = [&](detail::ConfigReader& c, const std::string& key, auto&& validate) {
    try {
      validate();
    } catch (const InvalidArgument& e) {
      c.fail(c.sub(key), e.what());
    }
  };

  run("model", [&](detail::ConfigReader& c) {
    auto& g = cfg.model.grid;
    c.get("dimension", g.dimension);
    const auto axes = static_cast<std::size_t>(std::max(g.dimension, 1));
    if (g.nodes.size() != axes) g.nodes.assign(axes, g.nodes.front());
    if (g.length.size() != axes) g.length.assign(axes, g.length.front());
    c.get_axes("nodes", g.nodes, axes);
    c.get_axes("length", g.length, axes);
    c.get("diffusivity", g.diffusivity);
    std::string disc = to_string(g.discretization);
    c.get("discretization", disc);
    wrap(c, "discretization", [&] { g.discretization = parse_discretization(disc); });
    c.get("io_fraction", cfg.model.io_fraction);
    c.get("seed", cfg.model.seed);
    c.get("bundle", cfg.model.bundle);
    if (!(cfg.model.io_fraction > 0.0 && cfg.model.io_fraction <= 1.0))
      c.fail(c.sub("io_fraction"), "must lie in (0, 1]");
    wrap(c, "nodes", [&] { g.validate(); });
  });

  auto& nc = cfg.newton;
  run("pattern", [&](detail::ConfigReader& c) {
    c.get("w", nc.pattern.w);
    c.get("full", nc.full_pattern);
    c.get("binarize_each_step", nc.pattern.binarize_each_step);
    c.get("use_absolute_values", nc.pattern.use_absolute_values);
    c.get("freeze_after_newton_iter", nc.pattern.freeze_after_newton_iter);
    wrap(c, "w", [&] { nc.pattern.validate(); });
  });

  run("lyap", [&](detail::ConfigReader& c) {
    std::string method = to_string(nc.method);
    c.get("method", method);
    wrap(c, "method", [&] { nc.method = parse_lyap_method(method); });
    if (c.has("cgls")) {
      auto s = c.child("cgls");
      s.get("tol", nc.cgls.tol);
      s.get("max_iter", nc.cgls.max_iter);
      if (!(nc.cgls.tol > 0.0)) s.fail(s.sub("tol"), "must be positive");
      if (nc.cgls.max_iter < 1) s.fail(s.sub("max_iter"), "must be >= 1");
      s.finish();
    }
    if (c.has("gp")) {
      auto s = c.child("gp");
      s.get("delta_bar", nc.gp.delta_bar);
      s.get("zeta", nc.gp.zeta);
      s.get("sigma", nc.gp.sigma);
      s.get("max_iter", nc.gp.max_iter);
      s.get("q", nc.gp.q);
      s.get("k1", nc.gp.k1);
      s.get("stagnation_window", nc.gp.stagnation_window);
      s.get("stagnation_tol", nc.gp.stagnation_tol);
      s.get("p", nc.faber.p);
      s.get("k2", nc.faber.k2);
      s.get("W", nc.faber.W);
      wrap(s, "gp", [&] {
        nc.gp.validate();
        nc.faber.validate();
      });
      s.finish();
    }
  });

  run("riccati", [&](detail::ConfigReader& c) {
    c.get("z0_scale", nc.z0_scale);
    c.get("n_max", nc.n_max);
    c.get("residual_tol", nc.residual_tol);
    c.get("warm_start", nc.warm_start);
    c.get("q", cfg.q_weight);
    c.get("r", cfg.r_weight);
    if (nc.n_max < 1) c.fail(c.sub("n_max"), "must be >= 1");
    if (!(cfg.q_weight >= 0.0)) c.fail(c.sub("q"), "must be >= 0");
    if (!(cfg.r_weight > 0.0)) c.fail(c.sub("r"), "must be > 0");
  });

  run("sim", [&](detail::ConfigReader& c) {
    c.get("dt", cfg.sim.dt);
    c.get("steps", cfg.sim.steps);
    c.get("x0", cfg.sim.x0);
    c.get("x0_seed", cfg.sim.x0_seed);
    c.get("max_rows", cfg.sim.max_rows);
    if (!(cfg.sim.dt > 0.0)) c.fail(c.sub("dt"), "must be positive");
    if (cfg.sim.steps < 1) c.fail(c.sub("steps"), "must be >= 1");
    if (cfg.sim.max_rows < 2) c.fail(c.sub("max_rows"), "must be >= 2");
    if (cfg.sim.x0 != "ones" && cfg.sim.x0 != "random")
      c.fail(c.sub("x0"), "expected \"ones\" or \"random\"");
  });

  run("oracle", [&](detail::ConfigReader& c) {
    c.get("enabled", cfg.oracle.enabled);
    c.get("n_cap", cfg.oracle.n_cap);
    if (cfg.oracle.n_cap < 1) c.fail(c.sub("n_cap"), "must be >= 1");
  });

  run("bench", [&](detail::ConfigReader& c) {
    c.get("sizes", cfg.bench.sizes);
    c.get("methods", cfg.bench.methods);
    c.get("w", cfg.bench.w);
    if (cfg.bench.sizes.empty()) c.fail(c.sub("sizes"), "must not be empty");
    for (Index s : cfg.bench.sizes)
      if (s < 2) c.fail(c.sub("sizes"), "sizes are nodes per axis and must be >= 2");
    for (const auto& m : cfg.bench.methods)
      if (m != "lsq" && m != "gp") c.fail(c.sub("methods"), "unknown method '" + m + "'");
    if (cfg.bench.w < 0) c.fail(c.sub("w"), "must be >= 0");
  });

  root.get("output", cfg.output);
  root.finish();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// Effective configuration as JSON (keys sorted), used for hashing and manifests.
inline nlohmann::json to_json(const RunConfig& c) {
  const auto& n = c.newton;
  nlohmann::json j;
  j["model"] = {{"dimension", c.model.grid.dimension},
                {"nodes", c.model.grid.nodes},
                {"length", c.model.grid.length},
                {"diffusivity", c.model.grid.diffusivity},
                {"discretization", to_string(c.model.grid.discretization)},
                {"io_fraction", c.model.io_fraction},
                {"seed", c.model.seed},
                {"bundle", c.model.bundle}};
  j["pattern"] = {{"w", n.pattern.w},
                  {"full", n.full_pattern},
                  {"binarize_each_step", n.pattern.binarize_each_step},
                  {"use_absolute_values", n.pattern.use_absolute_values},
                  {"freeze_after_newton_iter", n.pattern.freeze_after_newton_iter}};
  j["lyap"] = {{"method", to_string(n.method)},
               {"cgls", {{"tol", n.cgls.tol}, {"max_iter", n.cgls.max_iter}}},
               {"gp",
                {{"delta_bar", n.gp.delta_bar},
                 {"zeta", n.gp.zeta},
                 {"sigma", n.gp.sigma},
                 {"max_iter", n.gp.max_iter},
                 {"q", n.gp.q},
                 {"k1", n.gp.k1},
                 {"stagnation_window", n.gp.stagnation_window},
                 {"stagnation_tol", n.gp.stagnation_tol},
                 {"p", n.faber.p},
                 {"k2", n.faber.k2},
                 {"W", n.faber.W}}}};
  j["riccati"] = {{"z0_scale", n.z0_scale},     {"n_max", n.n_max},
                  {"residual_tol", n.residual_tol}, {"warm_start", n.warm_start},
                  {"q", c.q_weight},            {"r", c.r_weight}};
  j["sim"] = {{"dt", c.sim.dt},
              {"steps", c.sim.steps},
              {"x0", c.sim.x0},
              {"x0_seed", c.sim.x0_seed},
              {"max_rows", c.sim.max_rows}};
  j["oracle"] = {{"enabled", c.oracle.enabled}, {"n_cap", c.oracle.n_cap}};
  j["bench"] = {{"sizes", c.bench.sizes}, {"methods", c.bench.methods}, {"w", c.bench.w}};
  j["output"] = c.output;
  return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

/// Hash of the effective configuration; the output directory does not take part.
inline std::string config_hash(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

}  // namespace bandlq
