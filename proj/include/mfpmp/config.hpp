#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfpmp/io.hpp"

namespace mfpmp {

// Parsed run configuration. The JSON schema is strict: unknown keys
// anywhere are rejected before any compute.
struct RunConfig {
  ModelSpec model;
  Mat y0;
  InitialMeasureSpec mu0;
  int N = 0;               // follower count (0 allowed for leaders-only)
  bool mu0_given = false;  // false when N = 0
  TimeGrid grid;
  SweepParams sweep;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int threads = 1;
  // Experiment blocks.
  std::vector<int> Ns;
  std::vector<double> epsilons;
  std::vector<std::string> test_functions;
  int wasserstein_p = 1;
  // Gaussian test-function shape (defaults fitted to the bundle when absent).
  double testfn_width = 0.0;
  // Verification gate for the weak transport residual, as a multiple of
  // dt^2 (the scheme's observable order).
  double weak_residual_scale = 100.0;

  std::string config_hash;  // canonical-dump hash after overrides
  nlohmann::json canonical;
};

// Loads + validates a config file, applies --set overrides (dotted
// paths, values parsed as JSON when possible) and the optional seed
// override, computes the canonical hash. Throws ConfigError with a
// field diagnostic on any violation.
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides,
                      const std::optional<std::uint64_t>& seed_override);

RunConfig config_from_json(nlohmann::json j);

}  // namespace mfpmp
