#include "mfpmp/dynamics.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "mfpmp/errors.hpp"
#include "mfpmp/parallel.hpp"

namespace mfpmp {

Vec kernel_convolution(const ModelSpec& spec, const Mat& atoms, const Vec& z) {
  const int N = static_cast<int>(atoms.rows());
  Vec acc = Vec::Zero(spec.d);
  if (N == 0) return acc;
  Vec kz(spec.d);
  for (int j = 0; j < N; ++j) {
    spec.K(z - atoms.row(j).transpose(), kz);
    acc += kz;
  }
  return acc / static_cast<double>(N);
}

namespace {

Vec clamp_control(const ModelSpec& spec, const Vec& u) {
  static bool warned = false;
  Vec out = u;
  double worst = 0.0;
  for (int c = 0; c < u.size(); ++c) {
    if (out[c] < spec.u_lo[c]) {
      worst = std::max(worst, spec.u_lo[c] - out[c]);
      out[c] = spec.u_lo[c];
    } else if (out[c] > spec.u_hi[c]) {
      worst = std::max(worst, out[c] - spec.u_hi[c]);
      out[c] = spec.u_hi[c];
    }
  }
  if (worst > 1e-12 && !warned) {
    warned = true;
    std::cerr << "warning: control clamped into the admissible box (excess "
              << worst << "); further clamps are silent\n";
  }
  return out;
}

}  // namespace

SwarmState rhs_discrete(const ModelSpec& spec, const SwarmState& state, const Vec& u) {
  const int m = state.leaders();
  const int N = state.followers();
  if (static_cast<int>(u.size()) != spec.D) {
    throw ConfigError("rhs_discrete: control dimension " + std::to_string(u.size()) +
                      " does not match D = " + std::to_string(spec.D));
  }
  const Vec uc = clamp_control(spec, u);
  SwarmState out;
  out.y = Mat::Zero(m, spec.d);
  out.x = Mat::Zero(N, spec.d);

  parallel_for(m, [&](int k) {
    Vec rhs = kernel_convolution(spec, state.x, state.y.row(k).transpose());
    Vec fk(spec.d);
    spec.f(state.y, k, fk);
    rhs += fk;
    if (!spec.B.empty()) rhs += spec.B[static_cast<size_t>(k)] * uc;
    out.y.row(k) = rhs.transpose();
  });
  parallel_for(N, [&](int i) {
    Vec rhs = kernel_convolution(spec, state.x, state.x.row(i).transpose());
    Vec gi(spec.d);
    spec.g(state.y, state.x.row(i).transpose(), gi);
    rhs += gi;
    out.x.row(i) = rhs.transpose();
  });
  return out;
}

namespace {

SwarmState axpy(const SwarmState& a, double h, const SwarmState& b) {
  SwarmState out;
  out.y = a.y + h * b.y;
  out.x = a.x + h * b.x;
  return out;
}

void check_state(const SwarmState& s, int step) {
  auto bad = [&](const Mat& mat) {
    return !mat.allFinite() || (mat.size() > 0 && mat.cwiseAbs().maxCoeff() > kBlowUpCap);
  };
  if (bad(s.y) || bad(s.x)) {
    throw BlowUpError("state exceeded cap " + std::to_string(kBlowUpCap) +
                          " or went non-finite during forward integration",
                      step);
  }
}

}  // namespace

Trajectory integrate_forward(const ModelSpec& spec, const Mat& y0, const Mat& x0,
                             const ControlPath& control, const TimeGrid& grid) {
  if (grid.n_steps < 1) throw ConfigError("integrate_forward: n_steps must be >= 1");
  if (grid.T <= 0.0) throw ConfigError("integrate_forward: T must be > 0");
  if (static_cast<int>(control.values.size()) != grid.n_steps) {
    throw ConfigError("integrate_forward: control has " +
                      std::to_string(control.values.size()) + " entries, expected " +
                      std::to_string(grid.n_steps));
  }
  if (static_cast<int>(y0.rows()) != spec.m) {
    throw ConfigError("integrate_forward: y0 has " + std::to_string(y0.rows()) +
                      " leader rows, model declares m = " + std::to_string(spec.m));
  }
  if (y0.size() > 0 && static_cast<int>(y0.cols()) != spec.d) {
    throw ConfigError("integrate_forward: y0 column count does not match d");
  }
  if (x0.size() > 0 && static_cast<int>(x0.cols()) != spec.d) {
    throw ConfigError("integrate_forward: x0 column count does not match d");
  }

  Trajectory traj;
  traj.grid = grid;
  traj.control = control;
  traj.states.reserve(static_cast<size_t>(grid.n_steps) + 1);
  SwarmState s{y0, x0};
  check_state(s, 0);
  traj.states.push_back(s);
  const double dt = grid.dt();
  for (int j = 0; j < grid.n_steps; ++j) {
    const Vec& u = control.values[static_cast<size_t>(j)];
    SwarmState k1 = rhs_discrete(spec, s, u);
    SwarmState k2 = rhs_discrete(spec, axpy(s, 0.5 * dt, k1), u);
    SwarmState k3 = rhs_discrete(spec, axpy(s, 0.5 * dt, k2), u);
    SwarmState k4 = rhs_discrete(spec, axpy(s, dt, k3), u);
    s.y += (dt / 6.0) * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
    s.x += (dt / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    check_state(s, j + 1);
    traj.states.push_back(s);
  }
  return traj;
}

double gronwall_support_bound(const TimeGrid& grid, double C0, double C1, double C2) {
  return std::sqrt(C0 + 2.0 * C2 * grid.T) * std::exp(C1 * grid.T);
}

double max_state_norm(const Trajectory& traj) {
  double worst = 0.0;
  for (const auto& s : traj.states) {
    for (int k = 0; k < s.leaders(); ++k) worst = std::max(worst, s.y.row(k).norm());
    for (int i = 0; i < s.followers(); ++i) worst = std::max(worst, s.x.row(i).norm());
  }
  return worst;
}

}  // namespace mfpmp
