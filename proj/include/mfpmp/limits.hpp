#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfpmp/meanfield.hpp"

namespace mfpmp {

enum class InitialMeasureKind { UniformBox, GaussianTruncated, AtomsFromFile };

struct InitialMeasureSpec {
  InitialMeasureKind kind = InitialMeasureKind::UniformBox;
  // uniform-box: componentwise bounds.
  Vec lo, hi;
  // gaussian-truncated: center, per-component std, truncation radius
  // around the center.
  Vec mean;
  Vec stddev;
  double radius = 0.0;
  // atoms-from-file: explicit atom rows.
  Mat atoms;
  // Support constraint: samples must land within support_radius of the
  // origin (rejection sampled).
  double support_radius = 0.0;
  // Uniform-box only: use a Halton sequence instead of i.i.d. draws.
  bool qmc = false;
};

// Deterministic given (spec, N, seed). i.i.d. draws (or Halton points)
// rejection-sampled into the support constraint; more than 1e6
// rejections is a config error. atoms-from-file requires exactly N rows.
EmpiricalMeasure sample_initial_measure(const InitialMeasureSpec& spec, int N,
                                        std::uint64_t seed);

struct ConvergenceRow {
  int N = 0;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  // W1 between this row's terminal follower measure and the previous
  // (smaller-N) row's, after replication to a common atom count.
  std::optional<double> w1_terminal_prev;
  // L1-in-time distance of this row's control path to the largest-N row's.
  double control_l1_gap_ref = 0.0;
  // Max |r - r_dup| over the grid after duplicating every follower and
  // re-running forward+backward with the same control.
  double r_duplication_gap = 0.0;
  std::string note;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::uint64_t seed = 0;
  int wasserstein_p = 1;
};

// Solves the N-agent problem for each N in Ns by the sweep, with
// prefix-coupled initial atoms: the largest-N atom set is sampled once
// and row N takes its first N atoms, so per-N comparisons carry no
// resampling noise. Per-row sweep failures are recorded, not fatal.
ConvergenceReport convergence_study(const ModelSpec& spec, const Mat& y0,
                                    const InitialMeasureSpec& mu0spec,
                                    const std::vector<int>& Ns,
                                    const TimeGrid& grid,
                                    const SweepParams& params,
                                    std::uint64_t seed, int wasserstein_p = 1);

struct StabilityRow {
  double epsilon = 0.0;
  double gap = 0.0;    // sum_k |dy_k(T)| + W1(mu(T), mu'(T))
  double ratio = 0.0;  // gap / epsilon
};

// Perturbs (y0, x0) by epsilon along a fixed random unit direction,
// integrates both with the same control, and reports the terminal gap
// in the product metric (leader l2-sum plus follower W1) per epsilon.
std::vector<StabilityRow> stability_probe(const ModelSpec& spec, const Mat& y0,
                                          const Mat& x0, const TimeGrid& grid,
                                          const ControlPath& control,
                                          const std::vector<double>& epsilons,
                                          std::uint64_t seed);

}  // namespace mfpmp
