#include "mfpmp/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mfpmp/errors.hpp"

namespace mfpmp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config error at '" + where + "': " + what);
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
}

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      fail(where + "." + item.key(), "unknown key");
    }
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

double opt_number(const json& parent, const char* key, double fallback,
                  const std::string& where) {
  if (!parent.contains(key)) return fallback;
  return get_number(parent.at(key), where + "." + key);
}

int opt_int(const json& parent, const char* key, int fallback, const std::string& where) {
  if (!parent.contains(key)) return fallback;
  return get_int(parent.at(key), where + "." + key);
}

Vec parse_vec(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  Vec v(static_cast<long>(j.size()));
  for (size_t c = 0; c < j.size(); ++c) {
    v[static_cast<long>(c)] = get_number(j.at(c), where + "[" + std::to_string(c) + "]");
  }
  return v;
}

Mat parse_mat(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of rows");
  const long rows = static_cast<long>(j.size());
  long cols = -1;
  Mat out;
  for (long a = 0; a < rows; ++a) {
    const Vec row = parse_vec(j.at(static_cast<size_t>(a)),
                              where + "[" + std::to_string(a) + "]");
    if (cols < 0) {
      cols = row.size();
      out = Mat(rows, cols);
    } else if (row.size() != cols) {
      fail(where, "ragged rows");
    }
    out.row(a) = row.transpose();
  }
  if (rows == 0) fail(where, "must not be empty");
  return out;
}

ModelSpec parse_model(const json& j, const std::string& where) {
  require_object(j, where);
  if (!j.contains("preset")) fail(where + ".preset", "missing");
  const std::string preset = j.at("preset").is_string()
                                 ? j.at("preset").get<std::string>()
                                 : throw ConfigError("config error at '" + where +
                                                     ".preset': expected a string");
  if (preset == "cucker_smale") {
    check_keys(j, where, {"preset", "m", "d_space", "sigma", "beta", "amp"});
    CuckerSmaleParams params;
    params.sigma = opt_number(j, "sigma", 1.0, where);
    params.beta = opt_number(j, "beta", 0.25, where);
    params.amp = opt_number(j, "amp", 1.0, where);
    const int m = opt_int(j, "m", 1, where);
    const int d_space = opt_int(j, "d_space", 1, where);
    return cucker_smale_model(params, m, d_space);
  }
  if (preset == "identity_debug") {
    check_keys(j, where, {"preset", "d", "m", "kernel_scale", "ell_weight", "u_max"});
    return identity_debug_model(opt_int(j, "d", 1, where), opt_int(j, "m", 1, where),
                                opt_number(j, "kernel_scale", 0.0, where),
                                opt_number(j, "ell_weight", 1.0, where),
                                opt_number(j, "u_max", 1.0, where));
  }
  if (preset == "lq_scalar") {
    check_keys(j, where, {"preset"});
    return lq_scalar_model();
  }
  fail(where + ".preset", "unknown preset '" + preset +
                              "' (expected cucker_smale | identity_debug | lq_scalar)");
}

InitialMeasureSpec parse_mu0(const json& j, int d, const std::string& where) {
  require_object(j, where);
  if (!j.contains("kind")) fail(where + ".kind", "missing");
  if (!j.at("kind").is_string()) fail(where + ".kind", "expected a string");
  const std::string kind = j.at("kind").get<std::string>();
  InitialMeasureSpec spec;
  if (kind == "uniform_box") {
    check_keys(j, where, {"kind", "lo", "hi", "support_radius", "qmc"});
    spec.kind = InitialMeasureKind::UniformBox;
    if (!j.contains("lo") || !j.contains("hi")) fail(where, "uniform_box needs lo and hi");
    spec.lo = parse_vec(j.at("lo"), where + ".lo");
    spec.hi = parse_vec(j.at("hi"), where + ".hi");
    if (spec.lo.size() != d || spec.hi.size() != d) {
      fail(where, "lo/hi must have the model dimension d = " + std::to_string(d));
    }
    if (j.contains("qmc")) {
      if (!j.at("qmc").is_boolean()) fail(where + ".qmc", "expected a boolean");
      spec.qmc = j.at("qmc").get<bool>();
    }
  } else if (kind == "gaussian_truncated") {
    check_keys(j, where, {"kind", "mean", "stddev", "radius", "support_radius"});
    spec.kind = InitialMeasureKind::GaussianTruncated;
    if (!j.contains("mean") || !j.contains("stddev") || !j.contains("radius")) {
      fail(where, "gaussian_truncated needs mean, stddev, radius");
    }
    spec.mean = parse_vec(j.at("mean"), where + ".mean");
    spec.stddev = parse_vec(j.at("stddev"), where + ".stddev");
    if (spec.mean.size() != d || spec.stddev.size() != d) {
      fail(where, "mean/stddev must have the model dimension d = " + std::to_string(d));
    }
    spec.radius = get_number(j.at("radius"), where + ".radius");
  } else if (kind == "atoms") {
    check_keys(j, where, {"kind", "atoms", "support_radius"});
    spec.kind = InitialMeasureKind::AtomsFromFile;
    if (!j.contains("atoms")) fail(where, "atoms kind needs the atoms array");
    spec.atoms = parse_mat(j.at("atoms"), where + ".atoms");
    if (spec.atoms.cols() != d) {
      fail(where + ".atoms", "atoms must have the model dimension d = " + std::to_string(d));
    }
  } else {
    fail(where + ".kind", "unknown kind '" + kind +
                              "' (expected uniform_box | gaussian_truncated | atoms)");
  }
  spec.support_radius = opt_number(j, "support_radius", 0.0, where);
  return spec;
}

void apply_override(json& root, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects KEY=VALUE, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // bare strings stay strings
  }
  json* node = &root;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos
                                                   ? std::string::npos
                                                   : dot - start);
    if (key.empty()) throw ConfigError("--set path has an empty segment: '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    if (!node->is_object()) {
      throw ConfigError("--set path '" + path + "' descends into a non-object");
    }
    start = dot + 1;
  }
}

}  // namespace

RunConfig config_from_json(nlohmann::json j) {
  require_object(j, "config");
  check_keys(j, "config",
             {"model", "initial", "grid", "sweep", "seed", "out_dir", "threads",
              "experiment"});
  RunConfig cfg;

  if (!j.contains("model")) fail("config.model", "missing");
  cfg.model = parse_model(j.at("model"), "model");
  const int d = cfg.model.d;

  if (!j.contains("initial")) fail("config.initial", "missing");
  const json& init = j.at("initial");
  require_object(init, "initial");
  check_keys(init, "initial", {"y0", "mu0", "N"});
  if (!init.contains("y0")) fail("initial.y0", "missing");
  cfg.y0 = parse_mat(init.at("y0"), "initial.y0");
  if (static_cast<int>(cfg.y0.rows()) != cfg.model.m) {
    fail("initial.y0", "needs m = " + std::to_string(cfg.model.m) + " rows");
  }
  if (static_cast<int>(cfg.y0.cols()) != d) {
    fail("initial.y0", "rows must have the model dimension d = " + std::to_string(d));
  }
  cfg.N = opt_int(init, "N", 0, "initial");
  if (cfg.N < 0) fail("initial.N", "must be >= 0");
  if (init.contains("mu0")) {
    cfg.mu0 = parse_mu0(init.at("mu0"), d, "initial.mu0");
    cfg.mu0_given = true;
    if (cfg.mu0.kind == InitialMeasureKind::AtomsFromFile) {
      if (cfg.N == 0) cfg.N = static_cast<int>(cfg.mu0.atoms.rows());
      if (cfg.N != static_cast<int>(cfg.mu0.atoms.rows())) {
        fail("initial.N", "does not match the listed atom count");
      }
    }
    if (cfg.N < 1) fail("initial.N", "must be >= 1 when mu0 is given");
  } else if (cfg.N > 0) {
    fail("initial.mu0", "missing (required when N > 0)");
  }

  if (!j.contains("grid")) fail("config.grid", "missing");
  const json& grid = j.at("grid");
  require_object(grid, "grid");
  check_keys(grid, "grid", {"T", "n_steps"});
  if (!grid.contains("T") || !grid.contains("n_steps")) {
    fail("config.grid", "needs T and n_steps");
  }
  cfg.grid.T = get_number(grid.at("T"), "grid.T");
  cfg.grid.n_steps = get_int(grid.at("n_steps"), "grid.n_steps");
  if (cfg.grid.T <= 0.0) fail("grid.T", "must be > 0");
  if (cfg.grid.n_steps < 1) fail("grid.n_steps", "must be >= 1");

  if (j.contains("sweep")) {
    const json& sweep = j.at("sweep");
    require_object(sweep, "sweep");
    check_keys(sweep, "sweep", {"damping", "max_iters", "tol", "hamiltonian_drift_tol"});
    cfg.sweep.damping = opt_number(sweep, "damping", cfg.sweep.damping, "sweep");
    cfg.sweep.max_iters = opt_int(sweep, "max_iters", cfg.sweep.max_iters, "sweep");
    cfg.sweep.tol = opt_number(sweep, "tol", cfg.sweep.tol, "sweep");
    cfg.sweep.hamiltonian_drift_tol =
        opt_number(sweep, "hamiltonian_drift_tol", cfg.sweep.hamiltonian_drift_tol, "sweep");
    if (cfg.sweep.damping <= 0.0 || cfg.sweep.damping > 1.0) {
      fail("sweep.damping", "must lie in (0, 1]");
    }
    if (cfg.sweep.max_iters < 1) fail("sweep.max_iters", "must be >= 1");
    if (cfg.sweep.tol <= 0.0) fail("sweep.tol", "must be > 0");
  }

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<long long>() < 0) {
      fail("config.seed", "expected a nonnegative integer");
    }
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("out_dir")) {
    if (!j.at("out_dir").is_string()) fail("config.out_dir", "expected a string");
    cfg.out_dir = j.at("out_dir").get<std::string>();
  }
  cfg.threads = opt_int(j, "threads", 1, "config");
  if (cfg.threads < 1) fail("config.threads", "must be >= 1");

  if (j.contains("experiment")) {
    const json& exp = j.at("experiment");
    require_object(exp, "experiment");
    check_keys(exp, "experiment",
               {"Ns", "epsilons", "test_functions", "wasserstein_p", "testfn_width",
                "weak_residual_scale"});
    if (exp.contains("Ns")) {
      if (!exp.at("Ns").is_array()) fail("experiment.Ns", "expected an array");
      for (const auto& v : exp.at("Ns")) cfg.Ns.push_back(get_int(v, "experiment.Ns[]"));
    }
    if (exp.contains("epsilons")) {
      if (!exp.at("epsilons").is_array()) fail("experiment.epsilons", "expected an array");
      for (const auto& v : exp.at("epsilons")) {
        cfg.epsilons.push_back(get_number(v, "experiment.epsilons[]"));
      }
    }
    if (exp.contains("test_functions")) {
      if (!exp.at("test_functions").is_array()) {
        fail("experiment.test_functions", "expected an array of names");
      }
      for (const auto& v : exp.at("test_functions")) {
        if (!v.is_string()) fail("experiment.test_functions[]", "expected a string");
        const std::string name = v.get<std::string>();
        if (name != "constant" && name != "linear" && name != "gaussian") {
          fail("experiment.test_functions[]",
               "unknown test function '" + name + "' (constant | linear | gaussian)");
        }
        cfg.test_functions.push_back(name);
      }
    }
    cfg.wasserstein_p = opt_int(exp, "wasserstein_p", 1, "experiment");
    if (cfg.wasserstein_p != 1 && cfg.wasserstein_p != 2) {
      fail("experiment.wasserstein_p", "must be 1 or 2");
    }
    cfg.testfn_width = opt_number(exp, "testfn_width", 0.0, "experiment");
    cfg.weak_residual_scale =
        opt_number(exp, "weak_residual_scale", cfg.weak_residual_scale, "experiment");
    if (cfg.weak_residual_scale <= 0.0) {
      fail("experiment.weak_residual_scale", "must be > 0");
    }
  }

  cfg.canonical = std::move(j);
  cfg.canonical["seed"] = cfg.seed;  // seed participates in the hash explicitly
  cfg.config_hash = fnv1a_hex(cfg.canonical.dump());
  return cfg;
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides,
                      const std::optional<std::uint64_t>& seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  for (const auto& assignment : overrides) apply_override(j, assignment);
  if (seed_override) j["seed"] = *seed_override;
  return config_from_json(std::move(j));
}

}  // namespace mfpmp
