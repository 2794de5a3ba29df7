#include "mfpmp/limits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mfpmp/errors.hpp"
#include "mfpmp/rng.hpp"

namespace mfpmp {

namespace {

bool inside_support(const Vec& z, double support_radius) {
  return support_radius <= 0.0 || z.norm() <= support_radius;
}

}  // namespace

EmpiricalMeasure sample_initial_measure(const InitialMeasureSpec& spec, int N,
                                        std::uint64_t seed) {
  if (N < 1) throw ConfigError("sample_initial_measure: N must be >= 1");

  EmpiricalMeasure mu;
  if (spec.kind == InitialMeasureKind::AtomsFromFile) {
    if (static_cast<int>(spec.atoms.rows()) != N) {
      throw ConfigError("sample_initial_measure: atom list has " +
                        std::to_string(spec.atoms.rows()) + " rows, expected N = " +
                        std::to_string(N));
    }
    for (int i = 0; i < N; ++i) {
      if (!inside_support(spec.atoms.row(i).transpose(), spec.support_radius)) {
        throw ConfigError("sample_initial_measure: listed atom " + std::to_string(i) +
                          " violates the support radius");
      }
    }
    mu.atoms = spec.atoms;
    return mu;
  }

  int dim = 0;
  if (spec.kind == InitialMeasureKind::UniformBox) {
    if (spec.lo.size() == 0 || spec.lo.size() != spec.hi.size()) {
      throw ConfigError("sample_initial_measure: uniform-box needs matching lo/hi");
    }
    for (int c = 0; c < spec.lo.size(); ++c) {
      if (spec.lo[c] > spec.hi[c]) {
        throw ConfigError("sample_initial_measure: lo > hi in component " +
                          std::to_string(c));
      }
    }
    dim = static_cast<int>(spec.lo.size());
  } else {
    if (spec.mean.size() == 0 || spec.mean.size() != spec.stddev.size()) {
      throw ConfigError("sample_initial_measure: gaussian needs matching mean/stddev");
    }
    if (spec.radius <= 0.0) {
      throw ConfigError("sample_initial_measure: gaussian truncation radius must be > 0");
    }
    dim = static_cast<int>(spec.mean.size());
  }

  mu.atoms = Mat(N, dim);
  Rng rng(seed);
  std::uint64_t halton_index = 1;
  long rejections = 0;
  const long reject_cap = 1000000;
  int produced = 0;
  while (produced < N) {
    Vec z(dim);
    if (spec.kind == InitialMeasureKind::UniformBox) {
      if (spec.qmc) {
        for (int c = 0; c < dim; ++c) {
          z[c] = spec.lo[c] + (spec.hi[c] - spec.lo[c]) * halton(halton_index, halton_base(c));
        }
        ++halton_index;
      } else {
        for (int c = 0; c < dim; ++c) z[c] = rng.uniform(spec.lo[c], spec.hi[c]);
      }
      if (!inside_support(z, spec.support_radius)) {
        if (++rejections > reject_cap) {
          throw ConfigError("sample_initial_measure: support rejection failed after 1e6 draws");
        }
        continue;
      }
    } else {
      for (int c = 0; c < dim; ++c) z[c] = spec.mean[c] + spec.stddev[c] * rng.normal();
      const bool in_trunc = (z - spec.mean).norm() <= spec.radius;
      if (!in_trunc || !inside_support(z, spec.support_radius)) {
        if (++rejections > reject_cap) {
          throw ConfigError("sample_initial_measure: support rejection failed after 1e6 draws");
        }
        continue;
      }
    }
    mu.atoms.row(produced) = z.transpose();
    ++produced;
  }
  return mu;
}

namespace {

// W1 between two uniform empiricals of possibly different atom counts,
// after replicating both to the least common multiple.
double wasserstein_lcm(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int p) {
  const long la = a.size();
  const long lb = b.size();
  const long l = std::lcm(la, lb);
  const EmpiricalMeasure ra = replicate_atoms(a, static_cast<int>(l / la));
  const EmpiricalMeasure rb = replicate_atoms(b, static_cast<int>(l / lb));
  return wasserstein(ra, rb, p);
}

// Duplicates every follower atom (consecutively), re-runs forward and
// backward with the same control, and reports the max gap between the
// duplicated r-trajectories and the original.
double duplication_gap(const ModelSpec& spec, const Mat& y0, const Mat& x0,
                       const ControlPath& control, const TimeGrid& grid,
                       const std::vector<AdjointState>& adj_ref) {
  const int N = static_cast<int>(x0.rows());
  EmpiricalMeasure base{x0};
  const Mat x0_dup = replicate_atoms(base, 2).atoms;
  const Trajectory traj_dup = integrate_forward(spec, y0, x0_dup, control, grid);
  const std::vector<AdjointState> adj_dup = integrate_backward(spec, traj_dup, control);
  double worst = 0.0;
  for (size_t jn = 0; jn < adj_dup.size(); ++jn) {
    const Mat r_ref = adj_ref[jn].r();
    const Mat r_dup = adj_dup[jn].r();
    for (int i = 0; i < N; ++i) {
      worst = std::max(worst,
                       (r_dup.row(2 * i) - r_ref.row(i)).cwiseAbs().maxCoeff());
      worst = std::max(worst,
                       (r_dup.row(2 * i + 1) - r_ref.row(i)).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace

ConvergenceReport convergence_study(const ModelSpec& spec, const Mat& y0,
                                    const InitialMeasureSpec& mu0spec,
                                    const std::vector<int>& Ns,
                                    const TimeGrid& grid,
                                    const SweepParams& params,
                                    std::uint64_t seed, int wasserstein_p) {
  if (Ns.size() < 2) throw ConfigError("convergence_study: need at least 2 entries in Ns");
  for (size_t i = 1; i < Ns.size(); ++i) {
    if (Ns[i] <= Ns[i - 1]) {
      throw ConfigError("convergence_study: Ns must be strictly increasing");
    }
  }
  if (Ns.front() < 1) throw ConfigError("convergence_study: N must be >= 1");

  ConvergenceReport report;
  report.seed = seed;
  report.wasserstein_p = wasserstein_p;

  // Prefix coupling: one draw at the largest N; row N uses the first N
  // atoms, so consecutive rows differ only by the appended tail.
  const int n_max = Ns.back();
  const EmpiricalMeasure pool = sample_initial_measure(mu0spec, n_max, seed);

  std::vector<ExtremalBundle> bundles;
  bundles.reserve(Ns.size());
  for (size_t row = 0; row < Ns.size(); ++row) {
    const int N = Ns[row];
    const Mat x0 = pool.atoms.topRows(N);
    ConvergenceRow out;
    out.N = N;
    try {
      ExtremalBundle bundle = forward_backward_sweep(spec, y0, x0, grid, params);
      out.cost = bundle.final_cost;
      out.iterations = bundle.iterations;
      out.converged = bundle.converged;
      if (!bundle.converged) out.note = "max_iters";
      out.r_duplication_gap =
          duplication_gap(spec, y0, x0, bundle.control, grid, bundle.adjoint);
      bundles.push_back(std::move(bundle));
    } catch (const BlowUpError& e) {
      out.converged = false;
      out.note = std::string("blow-up: ") + e.what();
      bundles.emplace_back();  // placeholder keeps row/bundle indices aligned
    }
    report.rows.push_back(std::move(out));
  }

  // Terminal-measure gaps between consecutive rows.
  for (size_t row = 1; row < report.rows.size(); ++row) {
    if (bundles[row].trajectory.states.empty() ||
        bundles[row - 1].trajectory.states.empty()) {
      continue;
    }
    const EmpiricalMeasure cur{bundles[row].trajectory.states.back().x};
    const EmpiricalMeasure prev{bundles[row - 1].trajectory.states.back().x};
    report.rows[row].w1_terminal_prev = wasserstein_lcm(prev, cur, wasserstein_p);
  }
  // Control gap to the largest-N reference.
  if (!bundles.empty() && !bundles.back().trajectory.states.empty()) {
    const ControlPath& ref = bundles.back().control;
    for (size_t row = 0; row < report.rows.size(); ++row) {
      if (bundles[row].trajectory.states.empty()) continue;
      report.rows[row].control_l1_gap_ref =
          control_path_l1_distance(bundles[row].control, ref);
    }
  }
  return report;
}

std::vector<StabilityRow> stability_probe(const ModelSpec& spec, const Mat& y0,
                                          const Mat& x0, const TimeGrid& grid,
                                          const ControlPath& control,
                                          const std::vector<double>& epsilons,
                                          std::uint64_t seed) {
  for (size_t i = 0; i < epsilons.size(); ++i) {
    if (epsilons[i] <= 0.0) throw ConfigError("stability_probe: epsilons must be positive");
    if (i > 0 && epsilons[i] >= epsilons[i - 1]) {
      throw ConfigError("stability_probe: epsilons must be decreasing");
    }
  }
  const int m = static_cast<int>(y0.rows());
  const int N = static_cast<int>(x0.rows());
  const int d = spec.d;

  // One fixed random direction, normalized in the product metric
  // sum_k |dy_k| + (1/N) sum_i |dx_i| so that a perturbation of size
  // eps moves the initial point by exactly eps in that metric.
  Rng rng(seed);
  Mat dir_y(m, d), dir_x(N, d);
  for (int k = 0; k < m; ++k)
    for (int c = 0; c < d; ++c) dir_y(k, c) = rng.normal();
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < d; ++c) dir_x(i, c) = rng.normal();
  double norm_x = 0.0;
  for (int k = 0; k < m; ++k) norm_x += dir_y.row(k).norm();
  for (int i = 0; i < N; ++i) norm_x += dir_x.row(i).norm() / static_cast<double>(N);
  if (norm_x <= 0.0) throw ConfigError("stability_probe: degenerate direction");
  dir_y /= norm_x;
  dir_x /= norm_x;

  const Trajectory base = integrate_forward(spec, y0, x0, control, grid);
  std::vector<StabilityRow> rows;
  rows.reserve(epsilons.size());
  for (double eps : epsilons) {
    const Trajectory pert =
        integrate_forward(spec, y0 + eps * dir_y, x0 + eps * dir_x, control, grid);
    double gap = 0.0;
    for (int k = 0; k < m; ++k) {
      gap += (pert.states.back().y.row(k) - base.states.back().y.row(k)).norm();
    }
    if (N > 0) {
      const EmpiricalMeasure mu_base{base.states.back().x};
      const EmpiricalMeasure mu_pert{pert.states.back().x};
      gap += wasserstein(mu_base, mu_pert, 1);
    }
    rows.push_back(StabilityRow{eps, gap, gap / eps});
  }
  return rows;
}

}  // namespace mfpmp
