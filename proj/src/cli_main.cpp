#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfpmp/config.hpp"
#include "mfpmp/errors.hpp"
#include "mfpmp/limits.hpp"
#include "mfpmp/parallel.hpp"
#include "mfpmp/version.hpp"

namespace {

using mfpmp::ControlPath;
using mfpmp::EmpiricalMeasure;
using mfpmp::ExtremalBundle;
using mfpmp::Mat;
using mfpmp::RunConfig;
using mfpmp::Vec;
using nlohmann::json;

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

json bounds_json(const mfpmp::SupportBounds& b) {
  return json{{"rho_T", b.rho_T}, {"R_T", b.R_T}, {"C_T", b.C_T}};
}

json base_summary(const RunConfig& cfg) {
  return json{{"tool", mfpmp::kToolName},
              {"version", mfpmp::kToolVersion},
              {"config_hash", cfg.config_hash},
              {"seed", cfg.seed}};
}

void write_json(const std::string& path, const json& j) {
  mfpmp::atomic_write(path, j.dump(2) + "\n");
}

Mat initial_followers(const RunConfig& cfg) {
  if (cfg.N == 0) return Mat(0, cfg.model.d);
  return mfpmp::sample_initial_measure(cfg.mu0, cfg.N, cfg.seed).atoms;
}

int cmd_simulate(const RunConfig& cfg) {
  const Mat x0 = initial_followers(cfg);
  const ControlPath u = ControlPath::zeros(cfg.grid, cfg.model.D);
  const mfpmp::Trajectory traj =
      mfpmp::integrate_forward(cfg.model, cfg.y0, x0, u, cfg.grid);
  mfpmp::atomic_write(out_path(cfg, "trajectory.csv"),
                      mfpmp::trajectory_csv(traj, cfg.config_hash));
  json summary = base_summary(cfg);
  summary["T"] = cfg.grid.T;
  summary["n_steps"] = cfg.grid.n_steps;
  summary["max_state_norm"] = mfpmp::max_state_norm(traj);
  write_json(out_path(cfg, "summary.json"), summary);
  return 0;
}

int cmd_optimize(const RunConfig& cfg) {
  const Mat x0 = initial_followers(cfg);
  const ExtremalBundle bundle =
      mfpmp::forward_backward_sweep(cfg.model, cfg.y0, x0, cfg.grid, cfg.sweep);
  mfpmp::atomic_write(out_path(cfg, "bundle.csv"),
                      mfpmp::bundle_csv(bundle, cfg.config_hash));
  double drift = 0.0;
  for (double h : bundle.hamiltonian_series) {
    drift = std::max(drift, std::abs(h - bundle.hamiltonian_series.front()));
  }
  json summary = base_summary(cfg);
  summary["final_cost"] = bundle.final_cost;
  summary["iterations"] = bundle.iterations;
  summary["converged"] = bundle.converged;
  summary["final_residual"] =
      bundle.residual_history.empty() ? 0.0 : bundle.residual_history.back();
  summary["hamiltonian_drift"] = drift;
  summary["bounds"] = bounds_json(bundle.bounds);
  write_json(out_path(cfg, "summary.json"), summary);
  return bundle.converged ? 0 : 3;
}

int cmd_verify(const RunConfig& cfg) {
  const Mat x0 = initial_followers(cfg);
  const ExtremalBundle bundle =
      mfpmp::forward_backward_sweep(cfg.model, cfg.y0, x0, cfg.grid, cfg.sweep);
  const mfpmp::Trajectory& traj = bundle.trajectory;
  const int n = cfg.grid.n_steps;
  const int d = cfg.model.d;

  // Consistency of the phase-space lift against the finite-dimensional
  // system, sampled along the whole extremal (every node for short
  // grids, at most 64 evenly spaced nodes otherwise).
  const int probes = std::min(n + 1, 64);
  double e_uguale_max = 0.0;
  double lift_gap = 0.0;
  for (int s = 0; s < probes; ++s) {
    const int j = (probes == 1) ? 0 : static_cast<int>((static_cast<long>(s) * n) / (probes - 1));
    const auto& state = traj.states[static_cast<size_t>(j)];
    const auto& adj = bundle.adjoint[static_cast<size_t>(j)];
    const Vec& u = bundle.control.values[static_cast<size_t>(std::min(j, n - 1))];
    e_uguale_max = std::max(
        e_uguale_max, mfpmp::check_e_uguale(cfg.model, state.y, adj.q, state.x, adj.p, u));
    mfpmp::MeanFieldPoint point;
    point.y = state.y;
    point.q = adj.q;
    point.nu = mfpmp::lift(state.x, adj.p);
    point.u = u;
    point.support_radius = 1.1 * bundle.bounds.R_T;
    const double h_mf = mfpmp::hamiltonian_mf(cfg.model, point);
    const double h_n =
        mfpmp::hamiltonian_N(cfg.model, state.y, adj.q, state.x, adj.p, u);
    lift_gap = std::max(lift_gap, std::abs(h_mf - h_n));
  }

  const mfpmp::TerminalDiagnostics terminal = mfpmp::terminal_marginal_check(bundle);
  const double marginal_gap = mfpmp::first_marginal_gap(bundle);

  // Weak transport residuals for the configured test functions.
  std::vector<std::string> names = cfg.test_functions;
  if (names.empty()) names = {"constant", "linear", "gaussian"};
  json weak = json::object();
  double weak_worst = 0.0;
  const double dt = cfg.grid.dt();
  for (const std::string& name : names) {
    mfpmp::TestFunction fn;
    if (name == "constant") {
      fn = mfpmp::testfn_constant(d);
    } else if (name == "linear") {
      Vec a = Vec::Ones(2 * d);
      fn = mfpmp::testfn_linear(d, a);
    } else {
      // Center the bump on the time-average of the phase atoms; width
      // from config or fitted to the observed spread.
      Vec center = Vec::Zero(2 * d);
      double spread = 0.0;
      long count = 0;
      for (int j = 0; j <= n; ++j) {
        const mfpmp::PhaseMeasure nu = mfpmp::lift(
            traj.states[static_cast<size_t>(j)].x, bundle.adjoint[static_cast<size_t>(j)].p);
        for (int i = 0; i < nu.size(); ++i) {
          center += nu.atoms.row(i).transpose();
          ++count;
        }
      }
      if (count > 0) center /= static_cast<double>(count);
      for (int j = 0; j <= n; ++j) {
        const mfpmp::PhaseMeasure nu = mfpmp::lift(
            traj.states[static_cast<size_t>(j)].x, bundle.adjoint[static_cast<size_t>(j)].p);
        for (int i = 0; i < nu.size(); ++i) {
          spread = std::max(spread, (nu.atoms.row(i).transpose() - center).norm());
        }
      }
      const double width = (cfg.testfn_width > 0.0) ? cfg.testfn_width
                                                    : std::max(spread, 1e-6);
      fn = mfpmp::testfn_gaussian(d, center, width);
    }
    const std::vector<double> res = mfpmp::weak_pde_residual(cfg.model, bundle, fn);
    double worst = 0.0;
    for (double v : res) worst = std::max(worst, std::abs(v));
    weak[name] = worst;
    weak_worst = std::max(weak_worst, worst);
  }

  const bool pass = bundle.converged && e_uguale_max <= 1e-10 && lift_gap <= 1e-10 &&
                    terminal.max_r_norm == 0.0 && terminal.q_norm == 0.0 &&
                    marginal_gap == 0.0 &&
                    weak_worst <= cfg.weak_residual_scale * dt * dt;

  json report = base_summary(cfg);
  report["converged"] = bundle.converged;
  report["e_uguale_max"] = e_uguale_max;
  report["hamiltonian_lift_gap"] = lift_gap;
  report["weak_residual_max_by_testfn"] = weak;
  report["terminal_marginal"] =
      json{{"max_r_norm", terminal.max_r_norm}, {"q_norm", terminal.q_norm}};
  report["first_marginal_gap"] = marginal_gap;
  report["pass"] = pass;
  write_json(out_path(cfg, "verify.json"), report);
  return pass ? 0 : 3;
}

int cmd_converge(const RunConfig& cfg) {
  if (cfg.Ns.size() < 2) {
    throw mfpmp::ConfigError("converge needs experiment.Ns with at least 2 entries");
  }
  if (!cfg.mu0_given) {
    throw mfpmp::ConfigError("converge needs initial.mu0 to sample follower atoms");
  }
  const mfpmp::ConvergenceReport report =
      mfpmp::convergence_study(cfg.model, cfg.y0, cfg.mu0, cfg.Ns, cfg.grid, cfg.sweep,
                               cfg.seed, cfg.wasserstein_p);
  mfpmp::atomic_write(out_path(cfg, "convergence.csv"),
                      mfpmp::convergence_csv(report, cfg.config_hash));
  json rows = json::array();
  bool all_converged = true;
  for (const auto& row : report.rows) {
    json r{{"N", row.N},
           {"cost", row.cost},
           {"iterations", row.iterations},
           {"converged", row.converged},
           {"control_l1_gap_ref", row.control_l1_gap_ref},
           {"r_duplication_gap", row.r_duplication_gap},
           {"note", row.note}};
    if (row.w1_terminal_prev) r["w1_terminal_prev"] = *row.w1_terminal_prev;
    rows.push_back(std::move(r));
    all_converged = all_converged && row.converged;
  }
  json summary = base_summary(cfg);
  summary["wasserstein_p"] = report.wasserstein_p;
  summary["rows"] = rows;
  write_json(out_path(cfg, "convergence.json"), summary);
  return all_converged ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field optimal control of leader-follower crowd dynamics"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file")->required();
    cmd->add_option("--set", overrides, "dotted-path override KEY=VALUE (repeatable)");
    cmd->add_option("--out", out_dir, "output directory (overrides config out_dir)");
    cmd->add_option("--seed", seed, "seed override");
    cmd->add_option("--threads", threads, "worker thread count override");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "integrate the forward system, u = 0");
  CLI::App* optimize = app.add_subcommand("optimize", "solve the PMP by forward-backward sweep");
  CLI::App* verify = app.add_subcommand("verify", "run the mean-field consistency checks");
  CLI::App* converge = app.add_subcommand("converge", "run the N-convergence study");
  for (CLI::App* cmd : {simulate, optimize, verify, converge}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg = mfpmp::load_config(config_path, overrides, seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads) {
      if (*threads < 1) throw mfpmp::ConfigError("--threads must be >= 1");
      cfg.threads = *threads;
    }
    mfpmp::set_num_threads(cfg.threads);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (optimize->parsed()) return cmd_optimize(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
    return cmd_converge(cfg);
  } catch (const mfpmp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const mfpmp::BlowUpError& e) {
    std::cerr << "numeric blow-up: " << e.what() << "\n";
    return 2;
  } catch (const mfpmp::NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
