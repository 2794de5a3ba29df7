// Acceptance gate: one pass/fail line per criterion, nonzero exit when
// any criterion fails. Tolerances are pinned in the line text.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mfpmp/config.hpp"
#include "mfpmp/errors.hpp"
#include "mfpmp/limits.hpp"
#include "mfpmp/meanfield.hpp"
#include "mfpmp/parallel.hpp"
#include "mfpmp/rng.hpp"

using namespace mfpmp;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& label, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << label << " — " << detail << "\n";
  std::cout.flush();
  if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

struct Instance {
  Mat y, q, x, p;
  Vec u;
};

Instance random_instance(Rng& rng, const ModelSpec& spec, int N, double scale) {
  Instance inst;
  inst.y = Mat(spec.m, spec.d);
  inst.q = Mat(spec.m, spec.d);
  inst.x = Mat(N, spec.d);
  inst.p = Mat(N, spec.d);
  inst.u = Vec(spec.D);
  for (int k = 0; k < spec.m; ++k)
    for (int c = 0; c < spec.d; ++c) {
      inst.y(k, c) = rng.uniform(-scale, scale);
      inst.q(k, c) = rng.uniform(-scale, scale);
    }
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < spec.d; ++c) {
      inst.x(i, c) = rng.uniform(-scale, scale);
      inst.p(i, c) = rng.uniform(-scale, scale) / static_cast<double>(N);
    }
  for (int a = 0; a < spec.D; ++a) inst.u[a] = rng.uniform(spec.u_lo[a], spec.u_hi[a]);
  return inst;
}

ModelSpec flock(int m, int d_space, double sigma, double beta, double amp) {
  return cucker_smale_model(CuckerSmaleParams{sigma, beta, amp}, m, d_space);
}

// Demo follower cloud: positions in [-1,1]^s, velocities in [-0.5,0.5]^s.
Mat demo_cloud(int N, int d_space, std::uint64_t seed) {
  InitialMeasureSpec mu0;
  mu0.kind = InitialMeasureKind::UniformBox;
  mu0.lo = Vec(2 * d_space);
  mu0.hi = Vec(2 * d_space);
  for (int c = 0; c < d_space; ++c) {
    mu0.lo[c] = -1.0;
    mu0.hi[c] = 1.0;
    mu0.lo[d_space + c] = -0.5;
    mu0.hi[d_space + c] = 0.5;
  }
  return sample_initial_measure(mu0, N, seed).atoms;
}

// ---------------------------------------------------------------- criterion 1
void criterion_gradient_gate() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int m = 1 + rep % 3;
    const int d_space = 1 + rep % 2;
    ModelSpec spec = flock(m, d_space, 0.7 + 0.05 * (rep % 5), 0.2 + 0.05 * (rep % 4),
                           0.8 + 0.05 * (rep % 3));
    const int N = (rep == 0) ? 32 : 1 + (rep * 5) % 32;
    Instance inst = random_instance(rng, spec, N, 1.2);
    const HamiltonianGradient an =
        grad_hamiltonian(spec, inst.y, inst.q, inst.x, inst.p, inst.u);

    auto fd_block = [&](Mat& block, const Mat& an_block) {
      for (int r = 0; r < block.rows(); ++r) {
        for (int c = 0; c < block.cols(); ++c) {
          const double at = block(r, c);
          const double h = 1e-6 * (1.0 + std::abs(at));
          block(r, c) = at + h;
          const double hi = hamiltonian_N(spec, inst.y, inst.q, inst.x, inst.p, inst.u);
          block(r, c) = at - h;
          const double lo = hamiltonian_N(spec, inst.y, inst.q, inst.x, inst.p, inst.u);
          block(r, c) = at;
          const double fd = (hi - lo) / (2.0 * h);
          worst = std::max(worst,
                           std::abs(fd - an_block(r, c)) / (1.0 + std::abs(fd)));
        }
      }
    };
    fd_block(inst.y, an.dy);
    fd_block(inst.q, an.dq);
    fd_block(inst.x, an.dx);
    fd_block(inst.p, an.dp);
  }
  const double elapsed = seconds_since(t0);
  report("criterion 1: gradient gate (20 random flocking instances, m<=3, N<=32, "
         "d_space<=2; rel tol 1e-6; < 10 s)",
         worst <= 1e-6 && elapsed < 10.0,
         "worst rel err " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

// ------------------------------------------------------- criteria 2 and 3
void criterion_rotation_and_lift() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  double worst_rot = 0.0;
  double worst_lift = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int m = 1 + rep % 3;
    const int d_space = 1 + rep % 2;
    ModelSpec spec = flock(m, d_space, 0.8 + 0.04 * (rep % 6), 0.2 + 0.05 * (rep % 4),
                           0.9 + 0.02 * (rep % 5));
    const int N = 2 + (rep * 7) % 63;  // up to 64
    const Instance inst = random_instance(rng, spec, N, 1.0);
    worst_rot = std::max(
        worst_rot, check_e_uguale(spec, inst.y, inst.q, inst.x, inst.p, inst.u));
    MeanFieldPoint pt;
    pt.y = inst.y;
    pt.q = inst.q;
    pt.nu = lift(inst.x, inst.p);
    pt.u = inst.u;
    const double hn = hamiltonian_N(spec, inst.y, inst.q, inst.x, inst.p, inst.u);
    worst_lift = std::max(worst_lift, std::abs(hamiltonian_mf(spec, pt) - hn));
  }
  const double elapsed = seconds_since(t0);
  report("criterion 2: extended-PMP rotation identity (50 random in-support "
         "configurations, two independent code paths; tol 1e-10; < 10 s)",
         worst_rot <= 1e-10 && elapsed < 10.0,
         "worst gap " + fmt(worst_rot) + ", " + fmt(elapsed) + " s");
  report("criterion 3: phase-space lift identity on the same instances (tol 1e-12)",
         worst_lift <= 1e-12, "worst gap " + fmt(worst_lift));
}

// --------------------------------------------------- criteria 4 and 5
void criterion_lq_and_kkt() {
  ModelSpec spec = lq_scalar_model();
  Mat y0(1, 1);
  y0 << 1.0;
  const Mat x0(0, 1);
  TimeGrid grid{1.0, 1000};  // dt = 1e-3
  SweepParams params;
  params.damping = 0.5;
  params.tol = 1e-8;
  params.max_iters = 80;
  const ExtremalBundle bundle = forward_backward_sweep(spec, y0, x0, grid, params);
  const double cost_err = std::abs(bundle.final_cost - std::tanh(1.0));
  report("criterion 4: scalar LQ oracle (optimal cost tanh(1) to 1e-6 at dt = 1e-3, "
         "< 50 iterations, damping 0.5)",
         bundle.converged && cost_err <= 1e-6 && bundle.iterations < 50,
         "cost err " + fmt(cost_err) + ", " + std::to_string(bundle.iterations) +
             " iterations, converged = " + (bundle.converged ? "yes" : "no"));

  // Projected reduced gradient at the converged control.
  const ReducedCost at_opt = reduced_cost_and_gradient(spec, y0, x0, grid, bundle.control);
  const double pg = projected_gradient_norm(spec, bundle.control, at_opt.gradient);

  // Finite-difference match of the reduced gradient, probed on the LQ
  // problem at u = 0 and on a flocking instance (nodes away from T so
  // the reference derivative is O(dt), not degenerate).
  double worst_rel = 0.0;
  auto fd_probe = [&worst_rel](const ModelSpec& s, const Mat& yy, const Mat& xx,
                               const TimeGrid& g, const std::vector<int>& nodes) {
    const ControlPath u = ControlPath::zeros(g, s.D);
    const ReducedCost rc = reduced_cost_and_gradient(s, yy, xx, g, u);
    for (int j : nodes) {
      for (int a = 0; a < s.D; ++a) {
        const double h = 1e-5;
        ControlPath up = u, dn = u;
        up.values[static_cast<size_t>(j)][a] += h;
        dn.values[static_cast<size_t>(j)][a] -= h;
        const double fp = reduced_cost_and_gradient(s, yy, xx, g, up).value;
        const double fm = reduced_cost_and_gradient(s, yy, xx, g, dn).value;
        const double fd = (fp - fm) / (2.0 * h);
        const double an = g.dt() * rc.gradient[static_cast<size_t>(j)][a];
        worst_rel = std::max(worst_rel,
                             std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8}));
      }
    }
  };
  fd_probe(spec, y0, x0, grid, {0, 200, 400, 600, 800});
  ModelSpec cs = flock(1, 1, 1.0, 0.25, 1.0);
  Mat ycs(1, 2);
  ycs << 0.0, 0.9;
  fd_probe(cs, ycs, demo_cloud(8, 1, 7), TimeGrid{0.5, 200}, {0, 50, 100, 150});

  report("criterion 5: KKT fixed point (projected reduced gradient <= 1e-7 at sweep "
         "tol 1e-8; reduced gradient vs node finite differences, rel tol 1e-4)",
         pg <= 1e-7 && worst_rel <= 1e-4,
         "projected gradient " + fmt(pg) + ", worst FD rel err " + fmt(worst_rel));
}

// ---------------------------------------------------------------- criterion 6
void criterion_demo_constancy() {
  ModelSpec spec = flock(1, 1, 1.0, 0.25, 1.0);
  Mat y0(1, 2);
  y0 << 0.0, 0.9;
  const Mat x0 = demo_cloud(32, 1, 4242);
  TimeGrid grid{2.0, 2000};  // dt = 1e-3
  SweepParams params;
  params.damping = 0.3;
  params.tol = 1e-6;
  params.max_iters = 400;
  const ExtremalBundle bundle = forward_backward_sweep(spec, y0, x0, grid, params);
  double lo = bundle.hamiltonian_series.front(), hi = lo;
  for (double h : bundle.hamiltonian_series) {
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  const double h0 = bundle.hamiltonian_series.front();
  const double gate = 1e-4 * (1.0 + std::abs(h0));
  report("criterion 6: Hamiltonian constancy on the converged flocking demo "
         "(m=1, N=32, T=2, dt=1e-3; max-min <= 1e-4*(1+|H(0)|))",
         bundle.converged && (hi - lo) <= gate,
         "drift " + fmt(hi - lo) + " vs gate " + fmt(gate) + ", " +
             std::to_string(bundle.iterations) + " iterations");

  // Demo behavior pinned alongside the criterion: the damped iteration
  // settles monotonically after the first few steps and the optimized
  // control strictly beats the zero control.
  bool monotone = true;
  for (size_t k = 5; k + 1 < bundle.residual_history.size(); ++k) {
    if (bundle.residual_history[k + 1] > bundle.residual_history[k] * (1.0 + 1e-12)) {
      monotone = false;
    }
  }
  const double zero_cost =
      reduced_cost_and_gradient(spec, y0, x0, grid,
                                ControlPath::zeros(grid, spec.D))
          .value;
  report("demo example: damped residuals decrease monotonically after iteration 5 "
         "(damping 0.3) and the optimum strictly improves on u = 0",
         monotone && bundle.final_cost < zero_cost,
         "final cost " + fmt(bundle.final_cost) + " vs zero-control cost " +
             fmt(zero_cost));
}

// ---------------------------------------------------------------- criterion 7
void criterion_conservation_and_order() {
  // Pooled momentum: mean leader velocity + mean follower velocity is a
  // linear first integral of the uncontrolled flow.
  ModelSpec spec = flock(2, 2, 0.8, 0.3, 1.2);
  Rng rng(707);
  Mat y0(2, 4);
  for (int k = 0; k < 2; ++k)
    for (int c = 0; c < 4; ++c) y0(k, c) = rng.uniform(-1.0, 1.0);
  const Mat x0 = demo_cloud(16, 2, 17);
  TimeGrid grid{1.0, 1000};  // dt = 1e-3
  const Trajectory traj =
      integrate_forward(spec, y0, x0, ControlPath::zeros(grid, spec.D), grid);
  auto pooled = [](const SwarmState& s) {
    Vec w = Vec::Zero(2);
    for (int k = 0; k < s.leaders(); ++k)
      w += s.y.row(k).tail(2).transpose() / s.leaders();
    for (int i = 0; i < s.followers(); ++i)
      w += s.x.row(i).tail(2).transpose() / s.followers();
    return w;
  };
  const Vec ref = pooled(traj.states.front());
  double drift = 0.0;
  for (const auto& s : traj.states) {
    drift = std::max(drift, (pooled(s) - ref).cwiseAbs().maxCoeff());
  }

  // Order test on the constant-influence two-body closed form.
  ModelSpec relax = constant_phi_follower_model(1.0, 1);
  Mat xr(2, 2);
  xr << 0.0, 1.0,
        0.0, -1.0;
  const Mat yr(0, 2);
  auto terminal_error = [&](int n) {
    TimeGrid g{1.0, n};
    const Trajectory t =
        integrate_forward(relax, yr, xr, ControlPath::zeros(g, relax.D), g);
    return std::abs(t.states.back().x(0, 1) - std::exp(-1.0));
  };
  const double ratio = terminal_error(20) / terminal_error(40);
  report("criterion 7: conservation and order (pooled momentum drift <= 1e-10 over "
         "T=1 at dt=1e-3 with u=0; RK4 error ratio at dt vs dt/2 in [8, 32])",
         drift <= 1e-10 && ratio >= 8.0 && ratio <= 32.0,
         "drift " + fmt(drift) + ", order ratio " + fmt(ratio));
}

// ---------------------------------------------------------------- criterion 8
ExtremalBundle g_small_bundle;  // reused by criterion 10

void criterion_duplication() {
  ModelSpec spec = flock(1, 1, 1.0, 0.25, 1.0);
  Mat y0(1, 2);
  y0 << 0.0, 0.9;
  const Mat x0 = demo_cloud(8, 1, 99);
  EmpiricalMeasure base{x0};
  const Mat x0_dup = replicate_atoms(base, 2).atoms;
  TimeGrid grid{1.0, 100};
  SweepParams params;
  params.damping = 0.5;
  params.tol = 1e-9;
  params.max_iters = 200;
  const ExtremalBundle a = forward_backward_sweep(spec, y0, x0, grid, params);
  const ExtremalBundle b = forward_backward_sweep(spec, y0, x0_dup, grid, params);
  g_small_bundle = a;
  double worst_r = 0.0, worst_p = 0.0;
  for (size_t j = 0; j < a.adjoint.size(); ++j) {
    const Mat ra = a.adjoint[j].r();
    const Mat rb = b.adjoint[j].r();
    for (int i = 0; i < 8; ++i) {
      worst_r = std::max(worst_r, (rb.row(2 * i) - ra.row(i)).cwiseAbs().maxCoeff());
      worst_r = std::max(worst_r, (rb.row(2 * i + 1) - ra.row(i)).cwiseAbs().maxCoeff());
      worst_p = std::max(worst_p, (b.adjoint[j].p.row(2 * i) - 0.5 * a.adjoint[j].p.row(i))
                                      .cwiseAbs()
                                      .maxCoeff());
    }
  }
  const double du = control_path_l1_distance(a.control, b.control);
  report("criterion 8: follower duplication N -> 2N (r-trajectories and optimal "
         "control unchanged to 1e-10, p halves)",
         a.converged && b.converged && worst_r <= 1e-10 && du <= 1e-10 &&
             worst_p <= 1e-10,
         "max r gap " + fmt(worst_r) + ", control L1 gap " + fmt(du) +
             ", max |p_dup - p/2| " + fmt(worst_p));
}

// ---------------------------------------------------------------- criterion 9
void criterion_transport_oracle() {
  Rng rng(909);
  auto random_measure = [&](int N, int dim) {
    EmpiricalMeasure mu;
    mu.atoms = Mat(N, dim);
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < dim; ++c) mu.atoms(i, c) = rng.uniform(-2.0, 2.0);
    return mu;
  };
  bool brute_ok = true;
  for (int N = 2; N <= 7 && brute_ok; ++N) {
    for (int rep = 0; rep < 3 && brute_ok; ++rep) {
      const int dim = 2 + rep % 2;
      const EmpiricalMeasure mu = random_measure(N, dim);
      const EmpiricalMeasure nu = random_measure(N, dim);
      for (int p : {1, 2}) {
        Mat cost(N, N);
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) {
            const double gap = (mu.atoms.row(i) - nu.atoms.row(j)).norm();
            cost(i, j) = (p == 1) ? gap : gap * gap;
          }
        std::vector<int> perm(static_cast<size_t>(N));
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
          double total = 0.0;
          for (int i = 0; i < N; ++i) total += cost(i, perm[static_cast<size_t>(i)]);
          best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const double mean = best / static_cast<double>(N);
        const double oracle = (p == 1) ? mean : std::sqrt(mean);
        if (wasserstein(mu, nu, p) != oracle) brute_ok = false;
      }
    }
  }
  double worst_sort = 0.0;
  for (int N : {8, 33, 64}) {
    const EmpiricalMeasure mu = random_measure(N, 1);
    const EmpiricalMeasure nu = random_measure(N, 1);
    EmpiricalMeasure mu2, nu2;
    mu2.atoms = Mat::Zero(N, 2);
    nu2.atoms = Mat::Zero(N, 2);
    mu2.atoms.col(0) = mu.atoms.col(0);
    nu2.atoms.col(0) = nu.atoms.col(0);
    for (int p : {1, 2}) {
      worst_sort = std::max(
          worst_sort, std::abs(wasserstein(mu, nu, p) - wasserstein(mu2, nu2, p)));
    }
  }
  report("criterion 9: transport oracle (assignment equals brute-force permutation "
         "minimum exactly for N <= 7; equals the 1-D sort formula to 1e-12 for N <= 64)",
         brute_ok && worst_sort <= 1e-12,
         std::string("brute-force match = ") + (brute_ok ? "exact" : "MISMATCH") +
             ", worst sort-vs-assignment gap " + fmt(worst_sort));
}

// --------------------------------------------------------------- criterion 10
void criterion_boundary() {
  const ExtremalBundle& bundle = g_small_bundle;
  const bool have = !bundle.trajectory.states.empty();
  TerminalDiagnostics td;
  double gap = -1.0;
  if (have) {
    td = terminal_marginal_check(bundle);
    gap = first_marginal_gap(bundle);
  }
  report("criterion 10: boundary conditions (q(T) = 0 and max |r_i(T)| = 0 exactly; "
         "lift first marginal equals the follower measure at every node)",
         have && td.q_norm == 0.0 && td.max_r_norm == 0.0 && gap == 0.0,
         "q(T) norm " + fmt(td.q_norm) + ", r(T) max " + fmt(td.max_r_norm) +
             ", marginal gap " + fmt(gap));
}

// --------------------------------------------------------------- criterion 11
void criterion_gamma_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelSpec spec = flock(1, 1, 1.0, 0.25, 1.0);
  Mat y0(1, 2);
  y0 << 0.0, 0.9;
  InitialMeasureSpec mu0;
  mu0.kind = InitialMeasureKind::UniformBox;
  mu0.lo = Vec(2);
  mu0.hi = Vec(2);
  mu0.lo << -1.0, -0.5;
  mu0.hi << 1.0, 0.5;
  TimeGrid grid{1.0, 100};
  SweepParams params;
  params.damping = 0.3;
  params.tol = 1e-6;
  params.max_iters = 400;
  const ConvergenceReport rep =
      convergence_study(spec, y0, mu0, {16, 32, 64, 128}, grid, params, 13, 1);
  bool all_conv = true;
  for (const auto& row : rep.rows) all_conv = all_conv && row.converged;
  std::vector<double> gaps;
  for (size_t i = 1; i < rep.rows.size(); ++i) {
    gaps.push_back(std::abs(rep.rows[i].cost - rep.rows[i - 1].cost));
  }
  bool gaps_nonincreasing = true;
  for (size_t i = 1; i < gaps.size(); ++i) {
    if (gaps[i] > gaps[i - 1]) gaps_nonincreasing = false;
  }
  bool w1_decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < rep.rows.size(); ++i) {
    const double w = rep.rows[i].w1_terminal_prev.value_or(-1.0);
    if (w < 0.0 || w >= prev) w1_decreasing = false;
    prev = w;
  }
  const double elapsed = seconds_since(t0);
  std::string detail = "cost gaps";
  for (double g : gaps) detail += " " + fmt(g);
  detail += "; W1";
  for (size_t i = 1; i < rep.rows.size(); ++i) {
    detail += " " + fmt(rep.rows[i].w1_terminal_prev.value_or(-1.0));
  }
  detail += "; " + fmt(elapsed) + " s";
  report("criterion 11: Gamma-convergence trend (prefix-coupled study Ns = "
         "{16,32,64,128}: |F_N - F_2N| nonincreasing, consecutive terminal W1 "
         "decreasing; < 300 s single-threaded)",
         all_conv && gaps_nonincreasing && w1_decreasing && elapsed < 300.0, detail);
}

// --------------------------------------------------------------- criterion 12
void criterion_weak_residual_order() {
  ModelSpec spec = flock(1, 1, 1.0, 0.25, 1.0);
  Mat y0(1, 2);
  y0 << 0.0, 0.9;
  const Mat x0 = demo_cloud(32, 1, 4242);
  SweepParams params;
  params.damping = 0.3;
  params.tol = 1e-6;
  params.max_iters = 400;
  auto solve = [&](int n) {
    return forward_backward_sweep(spec, y0, x0, TimeGrid{2.0, n}, params);
  };
  const ExtremalBundle coarse = solve(200);
  const ExtremalBundle fine = solve(400);

  // One fixed Gaussian bump for both resolutions, fitted to the coarse
  // bundle's phase cloud.
  Vec center = Vec::Zero(4);
  long count = 0;
  for (size_t j = 0; j < coarse.trajectory.states.size(); ++j) {
    const PhaseMeasure nu =
        lift(coarse.trajectory.states[j].x, coarse.adjoint[j].p);
    for (int i = 0; i < nu.size(); ++i) {
      center += nu.atoms.row(i).transpose();
      ++count;
    }
  }
  center /= static_cast<double>(count);
  double spread = 0.0;
  for (size_t j = 0; j < coarse.trajectory.states.size(); ++j) {
    const PhaseMeasure nu =
        lift(coarse.trajectory.states[j].x, coarse.adjoint[j].p);
    for (int i = 0; i < nu.size(); ++i) {
      spread = std::max(spread, (nu.atoms.row(i).transpose() - center).norm());
    }
  }
  const TestFunction bump = testfn_gaussian(spec.d, center, std::max(spread, 1e-6));
  auto max_residual = [&](const ExtremalBundle& b) {
    const std::vector<double> res = weak_pde_residual(spec, b, bump);
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, std::abs(r));
    return worst;
  };
  const double r_coarse = max_residual(coarse);
  const double r_fine = max_residual(fine);
  const double ratio = r_coarse / r_fine;
  report("criterion 12: weak transport residual order (Gaussian test function on the "
         "converged demo bundle; residual ratio at dt vs dt/2 within [2, 8])",
         coarse.converged && fine.converged && ratio >= 2.0 && ratio <= 8.0,
         "residuals " + fmt(r_coarse) + " -> " + fmt(r_fine) + ", ratio " + fmt(ratio));
}

// --------------------------------------------------------------- criterion 13
void criterion_stability() {
  ModelSpec spec = flock(1, 1, 1.0, 0.25, 1.0);
  Mat y0(1, 2);
  y0 << 0.0, 0.9;
  const Mat x0 = demo_cloud(16, 1, 55);
  TimeGrid grid{1.0, 100};
  const ControlPath u = ControlPath::zeros(grid, spec.D);
  const std::vector<StabilityRow> rows =
      stability_probe(spec, y0, x0, grid, u, {1e-2, 5e-3, 2.5e-3}, 13);
  double lo = rows.front().ratio, hi = rows.front().ratio;
  for (const auto& row : rows) {
    lo = std::min(lo, row.ratio);
    hi = std::max(hi, row.ratio);
  }
  const double spread = hi / lo - 1.0;
  std::string detail = "gap/eps";
  for (const auto& row : rows) detail += " " + fmt(row.ratio);
  detail += "; spread " + fmt(100.0 * spread) + "%";
  report("criterion 13: stability probe (gap/eps at eps in {1e-2, 5e-3, 2.5e-3} "
         "varies by < 20%)",
         spread < 0.2, detail);
}

// --------------------------------------------------------------- criterion 14
void criterion_determinism() {
  const fs::path base = fs::temp_directory_path() / "mfpmp_acceptance";
  std::error_code ec;
  fs::remove_all(base, ec);
  fs::create_directories(base);
  const fs::path cfg_path = base / "lq.json";
  {
    std::ofstream out(cfg_path);
    out << R"({
      "model": {"preset": "lq_scalar"},
      "initial": {"y0": [[1.0]], "N": 0},
      "grid": {"T": 1.0, "n_steps": 500},
      "sweep": {"damping": 0.5, "tol": 1e-8, "max_iters": 80},
      "seed": 5
    })";
  }
  auto run = [&](const std::string& out_dir) {
    const std::string cmd = std::string(MFPMP_CLI_PATH) + " optimize --config " +
                            cfg_path.string() + " --out " + (base / out_dir).string() +
                            " > " + (base / "run.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  const int code_a = run("a");
  const int code_b = run("b");
  const bool same_bundle = slurp(base / "a" / "bundle.csv") == slurp(base / "b" / "bundle.csv");
  const bool same_summary =
      slurp(base / "a" / "summary.json") == slurp(base / "b" / "summary.json");
  const bool nonempty = !slurp(base / "a" / "bundle.csv").empty();
  report("criterion 14: determinism (repeated cmd_optimize with identical config and "
         "seed yields byte-identical artifacts)",
         code_a == 0 && code_b == 0 && nonempty && same_bundle && same_summary,
         std::string("exit codes ") + std::to_string(code_a) + "/" +
             std::to_string(code_b) + ", bundle identical = " +
             (same_bundle ? "yes" : "no") + ", summary identical = " +
             (same_summary ? "yes" : "no"));
}

void guarded(void (*fn)(), const std::string& label) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(label, false, std::string("unexpected exception: ") + e.what());
  }
}

}  // namespace

int main() {
  set_num_threads(1);
  const auto t0 = std::chrono::steady_clock::now();
  guarded(criterion_gradient_gate, "criterion 1: gradient gate");
  guarded(criterion_rotation_and_lift, "criteria 2/3: rotation and lift identities");
  guarded(criterion_lq_and_kkt, "criteria 4/5: LQ oracle and KKT");
  guarded(criterion_demo_constancy, "criterion 6: Hamiltonian constancy");
  guarded(criterion_conservation_and_order, "criterion 7: conservation and order");
  guarded(criterion_duplication, "criterion 8: duplication invariance");
  guarded(criterion_transport_oracle, "criterion 9: transport oracle");
  guarded(criterion_boundary, "criterion 10: boundary conditions");
  guarded(criterion_gamma_trend, "criterion 11: Gamma-convergence trend");
  guarded(criterion_weak_residual_order, "criterion 12: weak residual order");
  guarded(criterion_stability, "criterion 13: stability probe");
  guarded(criterion_determinism, "criterion 14: determinism");
  std::cout << (g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << " ("
            << g_failures << " failing) in " << fmt(seconds_since(t0)) << " s\n";
  return g_failures == 0 ? 0 : 1;
}
