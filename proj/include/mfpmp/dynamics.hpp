#pragma once

#include <vector>

#include "mfpmp/model.hpp"

namespace mfpmp {

struct TimeGrid {
  double T = 0.0;
  int n_steps = 0;
  double dt() const { return T / n_steps; }
  double node(int j) const { return T * static_cast<double>(j) / n_steps; }
};

// Leader rows y (m x d) and follower rows x (N x d). N = 0 degenerates
// to leaders-only dynamics with the empirical kernel term dropped.
struct SwarmState {
  Mat y;
  Mat x;
  int leaders() const { return static_cast<int>(y.rows()); }
  int followers() const { return static_cast<int>(x.rows()); }
};

// Piecewise-constant control: values[j] holds on [t_j, t_{j+1}).
struct ControlPath {
  TimeGrid grid;
  std::vector<Vec> values;  // n_steps entries

  static ControlPath zeros(const TimeGrid& grid, int D) {
    ControlPath c;
    c.grid = grid;
    c.values.assign(static_cast<size_t>(grid.n_steps), Vec::Zero(D));
    return c;
  }
};

struct Trajectory {
  TimeGrid grid;
  std::vector<SwarmState> states;  // n_steps + 1 entries
  ControlPath control;
};

struct SupportBounds {
  double rho_T = 0.0;  // forward support radius (max agent norm seen)
  double R_T = 0.0;    // phase-space radius for (x, r); filled by the sweep
  double C_T = 0.0;    // stability constant from the configured Lipschitz data
};

// Hard cap for the blow-up monitor.
inline constexpr double kBlowUpCap = 1e6;

// (K * mu)(z) = (1/N) sum_j K(z - x_j); zero vector for an empty atom set.
Vec kernel_convolution(const ModelSpec& spec, const Mat& atoms, const Vec& z);

// Right-hand side of the coupled leader/follower system:
//   leader k:   (K * mu)(y_k) + f_k(y) + B_k u
//   follower i: (K * mu)(x_i) + g(y)(x_i)
// u is clamped into U; violations beyond 1e-12 emit a one-time warning.
SwarmState rhs_discrete(const ModelSpec& spec, const SwarmState& state, const Vec& u);

// Classical fixed-step RK4 with the control held at its left-node value
// within each step. Deterministic given inputs. Throws BlowUpError when
// a state exceeds kBlowUpCap or goes non-finite.
Trajectory integrate_forward(const ModelSpec& spec, const Mat& y0, const Mat& x0,
                             const ControlPath& control, const TimeGrid& grid);

// Closed-form a-priori radius sqrt(C0 + 2*C2*T) * exp(C1*T), used as a
// soft monitor (the configured constants may underestimate the true
// growth data, so exceeding the bound warns rather than fails).
double gronwall_support_bound(const TimeGrid& grid, double C0, double C1, double C2);

// Max agent norm over all stored states.
double max_state_norm(const Trajectory& traj);

}  // namespace mfpmp
