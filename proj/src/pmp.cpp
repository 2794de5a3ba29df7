#include "mfpmp/pmp.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "mfpmp/errors.hpp"
#include "mfpmp/parallel.hpp"

namespace mfpmp {

double hamiltonian_N(const ModelSpec& spec, const Mat& y, const Mat& q,
                     const Mat& x, const Mat& p, const Vec& u) {
  const int m = static_cast<int>(y.rows());
  const int N = static_cast<int>(x.rows());
  double acc = 0.0;
  Vec gi(spec.d), fk(spec.d);
  for (int i = 0; i < N; ++i) {
    const Vec xi = x.row(i).transpose();
    Vec vel = kernel_convolution(spec, x, xi);
    spec.g(y, xi, gi);
    vel += gi;
    acc += p.row(i).dot(vel.transpose());
  }
  for (int k = 0; k < m; ++k) {
    Vec vel = kernel_convolution(spec, x, y.row(k).transpose());
    spec.f(y, k, fk);
    vel += fk;
    if (!spec.B.empty()) vel += spec.B[static_cast<size_t>(k)] * u;
    acc += q.row(k).dot(vel.transpose());
  }
  acc -= running_cost_atoms(spec, y, x);
  acc -= spec.gamma(u);
  return acc;
}

void grad_hamiltonian_rescaled(const ModelSpec& spec, const Mat& y, const Mat& q,
                               const Mat& x, const Mat& r_scaled, Mat& dy_out,
                               Mat& n_dx_out) {
  const int m = static_cast<int>(y.rows());
  const int N = static_cast<int>(x.rows());
  const int d = spec.d;
  dy_out.resize(m, d);
  n_dx_out.resize(N, d);

  const Vec sig_bar = (N > 0) ? omega_mean(spec, x) : Vec::Zero(d);
  const Vec s_bar = (N > 0) ? ell_sig_mean(spec, y, x, sig_bar) : Vec::Zero(d);

  parallel_for(N, [&](int i) {
    const Vec xi = x.row(i).transpose();
    const Vec ri = r_scaled.row(i).transpose();
    Vec acc = Vec::Zero(d);
    Mat dk(d, d);
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;  // r_i - r_i = 0
      spec.DK(xi - x.row(j).transpose(), dk);
      acc.noalias() += dk.transpose() * (ri - r_scaled.row(j).transpose());
    }
    acc /= static_cast<double>(N);
    Mat dgx(d, d);
    spec.Dg_x(y, xi, dgx);
    acc.noalias() += dgx.transpose() * ri;
    for (int k = 0; k < m; ++k) {
      spec.DK(y.row(k).transpose() - xi, dk);
      acc.noalias() -= dk.transpose() * q.row(k).transpose();
    }
    Vec gxi(d);
    spec.ell_grad_xi(y, xi, sig_bar, gxi);
    acc -= gxi;
    Mat dom(d, d);
    spec.Domega(xi, dom);
    acc.noalias() -= dom.transpose() * s_bar;
    n_dx_out.row(i) = acc.transpose();
  });

  parallel_for(m, [&](int k) {
    Vec acc = Vec::Zero(d);
    const Vec yk = y.row(k).transpose();
    if (N > 0) {
      Mat dgy(d, m * d), dk(d, d), gy(m, d);
      Vec gsum = Vec::Zero(d), ksum = Vec::Zero(d), lsum = Vec::Zero(d);
      for (int i = 0; i < N; ++i) {
        const Vec xi = x.row(i).transpose();
        spec.Dg_y(y, xi, dgy);
        gsum.noalias() += dgy.block(0, k * d, d, d).transpose() * r_scaled.row(i).transpose();
        spec.DK(yk - xi, dk);
        ksum.noalias() += dk.transpose() * q.row(k).transpose();
        spec.ell_grad_y(y, xi, sig_bar, gy);
        lsum += gy.row(k).transpose();
      }
      acc += (gsum + ksum - lsum) / static_cast<double>(N);
    } else {
      Mat gy(m, d);
      spec.ell_grad_y(y, Vec::Zero(d), Vec::Zero(d), gy);
      acc -= gy.row(k).transpose();
    }
    Mat dfa(d, m * d);
    for (int a = 0; a < m; ++a) {
      spec.Df(y, a, dfa);
      acc.noalias() += dfa.block(0, k * d, d, d).transpose() * q.row(a).transpose();
    }
    dy_out.row(k) = acc.transpose();
  });
}

HamiltonianGradient grad_hamiltonian(const ModelSpec& spec, const Mat& y,
                                     const Mat& q, const Mat& x, const Mat& p,
                                     const Vec& u) {
  const int m = static_cast<int>(y.rows());
  const int N = static_cast<int>(x.rows());
  HamiltonianGradient grad;
  const Mat r = p * static_cast<double>(N);
  grad_hamiltonian_rescaled(spec, y, q, x, r, grad.dy, grad.dx);
  if (N > 0) grad.dx /= static_cast<double>(N);

  grad.dq.resize(m, spec.d);
  Vec fk(spec.d);
  for (int k = 0; k < m; ++k) {
    Vec vel = kernel_convolution(spec, x, y.row(k).transpose());
    spec.f(y, k, fk);
    vel += fk;
    if (!spec.B.empty()) vel += spec.B[static_cast<size_t>(k)] * u;
    grad.dq.row(k) = vel.transpose();
  }
  grad.dp.resize(N, spec.d);
  Vec gi(spec.d);
  for (int i = 0; i < N; ++i) {
    const Vec xi = x.row(i).transpose();
    Vec vel = kernel_convolution(spec, x, xi);
    spec.g(y, xi, gi);
    vel += gi;
    grad.dp.row(i) = vel.transpose();
  }
  return grad;
}

namespace {

Vec clip_to_box(const ModelSpec& spec, Vec u) {
  for (int c = 0; c < u.size(); ++c) {
    u[c] = std::min(std::max(u[c], spec.u_lo[c]), spec.u_hi[c]);
  }
  return u;
}

Vec control_drive(const ModelSpec& spec, const Mat& q) {
  Vec b = Vec::Zero(spec.D);
  for (size_t k = 0; k < spec.B.size(); ++k) {
    b.noalias() += spec.B[k].transpose() * q.row(static_cast<long>(k)).transpose();
  }
  return b;
}

}  // namespace

Vec maximize_hamiltonian_control(const ModelSpec& spec, const Mat& q) {
  const Vec b = control_drive(spec, q);
  if (spec.quadratic_gamma) {
    return clip_to_box(spec, 0.5 * b);
  }
  // Generic strictly convex gamma: projected Newton on the concave
  // objective psi(u) = b.u - gamma(u).
  const int D = spec.D;
  auto psi = [&](const Vec& u) { return b.dot(u) - spec.gamma(u); };
  Vec u = clip_to_box(spec, Vec::Zero(D));
  Vec gg(D), ggp(D), ggm(D);
  for (int iter = 0; iter < 100; ++iter) {
    spec.gamma_grad(u, gg);
    const Vec grad = b - gg;  // gradient of psi
    // Finite-difference Hessian of gamma (symmetric by construction of
    // the average below).
    Mat H(D, D);
    for (int c = 0; c < D; ++c) {
      const double h = 1e-6 * (1.0 + std::abs(u[c]));
      Vec up = u, um = u;
      up[c] += h;
      um[c] -= h;
      spec.gamma_grad(up, ggp);
      spec.gamma_grad(um, ggm);
      H.col(c) = (ggp - ggm) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose());
    Eigen::LDLT<Mat> ldlt(H);
    Vec step;
    if (ldlt.info() == Eigen::Success) {
      step = ldlt.solve(grad);
    } else {
      step = grad / (1.0 + H.norm());
    }
    double alpha = 1.0;
    Vec u_new = clip_to_box(spec, u + alpha * step);
    const double base = psi(u);
    while (psi(u_new) < base - 1e-14 && alpha > 1e-10) {
      alpha *= 0.5;
      u_new = clip_to_box(spec, u + alpha * step);
    }
    const double move = (u_new - u).cwiseAbs().maxCoeff();
    u = u_new;
    if (move < 1e-12) return u;
  }
  throw NonConvergence("control maximization did not reach tolerance in 100 iterations");
}

namespace {

struct AdjointPair {
  Mat q;  // m x d
  Mat r;  // N x d (rescaled)
};

AdjointPair adjoint_rhs(const ModelSpec& spec, const SwarmState& state,
                        const AdjointPair& a) {
  AdjointPair out;
  Mat dy, ndx;
  grad_hamiltonian_rescaled(spec, state.y, a.q, state.x, a.r, dy, ndx);
  out.q = -dy;
  out.r = -ndx;
  return out;
}

void check_adjoint(const AdjointPair& a, int step) {
  auto bad = [](const Mat& mat) {
    return !mat.allFinite() || (mat.size() > 0 && mat.cwiseAbs().maxCoeff() > kBlowUpCap);
  };
  if (bad(a.q) || bad(a.r)) {
    throw BlowUpError("adjoint exceeded cap or went non-finite during backward integration",
                      step);
  }
}

}  // namespace

std::vector<AdjointState> integrate_backward(const ModelSpec& spec,
                                             const Trajectory& trajectory,
                                             const ControlPath& control) {
  const int n = trajectory.grid.n_steps;
  if (control.grid.n_steps != n) {
    throw ConfigError("integrate_backward: control grid does not match trajectory grid");
  }
  const int m = trajectory.states.front().leaders();
  const int N = trajectory.states.front().followers();
  const int d = spec.d;
  const double dt = trajectory.grid.dt();

  auto to_state = [&](const AdjointPair& a) {
    AdjointState s;
    s.q = a.q;
    s.p = (N > 0) ? Mat(a.r / static_cast<double>(N)) : Mat(0, d);
    return s;
  };

  std::vector<AdjointState> adj(static_cast<size_t>(n) + 1);
  AdjointPair a{Mat::Zero(m, d), Mat::Zero(N, d)};
  adj[static_cast<size_t>(n)] = to_state(a);
  for (int j = n - 1; j >= 0; --j) {
    const SwarmState& s1 = trajectory.states[static_cast<size_t>(j) + 1];
    const SwarmState& s0 = trajectory.states[static_cast<size_t>(j)];
    SwarmState smid;
    smid.y = 0.5 * (s0.y + s1.y);
    smid.x = 0.5 * (s0.x + s1.x);
    const AdjointPair k1 = adjoint_rhs(spec, s1, a);
    const AdjointPair k2 =
        adjoint_rhs(spec, smid, AdjointPair{a.q - 0.5 * dt * k1.q, a.r - 0.5 * dt * k1.r});
    const AdjointPair k3 =
        adjoint_rhs(spec, smid, AdjointPair{a.q - 0.5 * dt * k2.q, a.r - 0.5 * dt * k2.r});
    const AdjointPair k4 =
        adjoint_rhs(spec, s0, AdjointPair{a.q - dt * k3.q, a.r - dt * k3.r});
    a.q -= (dt / 6.0) * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
    a.r -= (dt / 6.0) * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
    check_adjoint(a, j);
    adj[static_cast<size_t>(j)] = to_state(a);
  }
  return adj;
}

namespace {

// Grid quadrature of the cost functional: trapezoid on the node values
// of the running cost plus the exact (left-endpoint) integral of the
// gamma term over the piecewise-constant control.
double path_cost(const ModelSpec& spec, const Trajectory& traj) {
  const int n = traj.grid.n_steps;
  const double dt = traj.grid.dt();
  double lsum = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double lj = running_cost_atoms(spec, traj.states[static_cast<size_t>(j)].y,
                                         traj.states[static_cast<size_t>(j)].x);
    lsum += (j == 0 || j == n) ? 0.5 * lj : lj;
  }
  double gsum = 0.0;
  for (int j = 0; j < n; ++j) {
    gsum += spec.gamma(traj.control.values[static_cast<size_t>(j)]);
  }
  return dt * (lsum + gsum);
}

double control_l1_gap(const TimeGrid& grid, const std::vector<Vec>& a,
                      const std::vector<Vec>& b) {
  double acc = 0.0;
  for (size_t j = 0; j < a.size(); ++j) {
    acc += (a[j] - b[j]).cwiseAbs().sum();
  }
  return acc * grid.dt();
}

SupportBounds measure_bounds(const ModelSpec& spec, const Trajectory& traj,
                             const std::vector<AdjointState>& adj) {
  SupportBounds bounds;
  bounds.rho_T = max_state_norm(traj);
  const int N = traj.states.front().followers();
  double r2 = 0.0;
  if (N > 0) {
    for (size_t jn = 0; jn < traj.states.size(); ++jn) {
      const Mat r = adj[jn].r();
      for (int i = 0; i < N; ++i) {
        r2 = std::max(r2, traj.states[jn].x.row(i).squaredNorm() + r.row(i).squaredNorm());
      }
    }
  }
  bounds.R_T = std::sqrt(r2);
  double c0 = 0.0;
  const SwarmState& s0 = traj.states.front();
  for (int k = 0; k < s0.leaders(); ++k) c0 = std::max(c0, s0.y.row(k).squaredNorm());
  for (int i = 0; i < s0.followers(); ++i) c0 = std::max(c0, s0.x.row(i).squaredNorm());
  bounds.C_T = gronwall_support_bound(traj.grid, c0, spec.C_K, spec.C_K);
  return bounds;
}

}  // namespace

ExtremalBundle forward_backward_sweep(const ModelSpec& spec, const Mat& y0,
                                      const Mat& x0, const TimeGrid& grid,
                                      const SweepParams& params,
                                      const ControlPath* u_init) {
  if (!spec.validated) {
    throw ConfigError("forward_backward_sweep: model spec has not passed validation");
  }
  if (params.damping <= 0.0 || params.damping > 1.0) {
    throw ConfigError("forward_backward_sweep: damping must lie in (0, 1]");
  }
  if (params.tol <= 0.0) throw ConfigError("forward_backward_sweep: tol must be > 0");
  if (params.max_iters < 1) {
    throw ConfigError("forward_backward_sweep: max_iters must be >= 1");
  }

  ControlPath u = u_init ? *u_init : ControlPath::zeros(grid, spec.D);
  if (static_cast<int>(u.values.size()) != grid.n_steps) {
    throw ConfigError("forward_backward_sweep: u_init grid mismatch");
  }
  for (auto& uj : u.values) uj = clip_to_box(spec, uj);

  const int n = grid.n_steps;
  const double dt = grid.dt();
  const double lambda = params.damping;

  ExtremalBundle bundle;
  Trajectory traj;
  std::vector<AdjointState> adj;
  bool stale = true;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    traj = integrate_forward(spec, y0, x0, u, grid);
    adj = integrate_backward(spec, traj, u);
    stale = false;
    // Pointwise maximization against the step-averaged adjoint.
    std::vector<Vec> u_max(static_cast<size_t>(n));
    parallel_for(n, [&](int j) {
      const Mat qbar =
          0.5 * (adj[static_cast<size_t>(j)].q + adj[static_cast<size_t>(j) + 1].q);
      u_max[static_cast<size_t>(j)] = maximize_hamiltonian_control(spec, qbar);
    });
    double delta = 0.0;
    for (int j = 0; j < n; ++j) {
      delta += (u_max[static_cast<size_t>(j)] - u.values[static_cast<size_t>(j)])
                   .cwiseAbs()
                   .sum();
    }
    delta *= lambda * dt;  // L1-in-time norm of the damped update
    bundle.residual_history.push_back(delta);
    bundle.iterations = iter + 1;
    if (delta < params.tol) {
      bundle.converged = true;
      break;
    }
    for (int j = 0; j < n; ++j) {
      u.values[static_cast<size_t>(j)] +=
          lambda * (u_max[static_cast<size_t>(j)] - u.values[static_cast<size_t>(j)]);
    }
    stale = true;
  }
  if (stale) {
    traj = integrate_forward(spec, y0, x0, u, grid);
    adj = integrate_backward(spec, traj, u);
  }
  if (!bundle.converged) {
    std::cerr << "warning: forward_backward_sweep reached max_iters = "
              << params.max_iters << " with residual "
              << (bundle.residual_history.empty() ? 0.0 : bundle.residual_history.back())
              << "\n";
  }

  bundle.trajectory = traj;
  bundle.adjoint = adj;
  bundle.control = u;
  bundle.hamiltonian_series.resize(static_cast<size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    const Vec& uj = u.values[static_cast<size_t>(std::min(j, n - 1))];
    bundle.hamiltonian_series[static_cast<size_t>(j)] = hamiltonian_N(
        spec, traj.states[static_cast<size_t>(j)].y, adj[static_cast<size_t>(j)].q,
        traj.states[static_cast<size_t>(j)].x, adj[static_cast<size_t>(j)].p, uj);
  }
  bundle.bounds = measure_bounds(spec, traj, adj);
  bundle.final_cost = path_cost(spec, traj);
  return bundle;
}

ReducedCost reduced_cost_and_gradient(const ModelSpec& spec, const Mat& y0,
                                      const Mat& x0, const TimeGrid& grid,
                                      const ControlPath& control) {
  ReducedCost out;
  const Trajectory traj = integrate_forward(spec, y0, x0, control, grid);
  const std::vector<AdjointState> adj = integrate_backward(spec, traj, control);
  out.value = path_cost(spec, traj);
  const int n = grid.n_steps;
  out.gradient.resize(static_cast<size_t>(n));
  Vec gg(spec.D);
  for (int j = 0; j < n; ++j) {
    const Mat qbar =
        0.5 * (adj[static_cast<size_t>(j)].q + adj[static_cast<size_t>(j) + 1].q);
    spec.gamma_grad(control.values[static_cast<size_t>(j)], gg);
    out.gradient[static_cast<size_t>(j)] = gg - control_drive(spec, qbar);
  }
  return out;
}

double projected_gradient_norm(const ModelSpec& spec, const ControlPath& control,
                               const std::vector<Vec>& gradient) {
  const double dt = control.grid.dt();
  double acc = 0.0;
  for (size_t j = 0; j < gradient.size(); ++j) {
    const Vec& u = control.values[j];
    const Vec& g = gradient[j];
    for (int c = 0; c < g.size(); ++c) {
      const double eps_lo = 1e-12 * (1.0 + std::abs(spec.u_lo[c]));
      const double eps_hi = 1e-12 * (1.0 + std::abs(spec.u_hi[c]));
      const bool at_lo = u[c] <= spec.u_lo[c] + eps_lo;
      const bool at_hi = u[c] >= spec.u_hi[c] - eps_hi;
      double pg = g[c];
      if (at_lo && pg > 0.0) pg = 0.0;  // descent would leave the box
      if (at_hi && pg < 0.0) pg = 0.0;
      acc += std::abs(pg);
    }
  }
  return acc * dt;
}

// Shared by the convergence harness: L1-in-time distance between two
// control paths on the same grid.
double control_path_l1_distance(const ControlPath& a, const ControlPath& b) {
  return control_l1_gap(a.grid, a.values, b.values);
}

}  // namespace mfpmp
