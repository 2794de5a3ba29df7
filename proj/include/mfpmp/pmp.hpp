#pragma once

#include <vector>

#include "mfpmp/dynamics.hpp"

namespace mfpmp {

// Leader adjoints q (m x d) and follower adjoints p (N x d). The
// backward pass works internally in the rescaled variable r = N*p so
// follower adjoints keep O(1) magnitude in N.
struct AdjointState {
  Mat q;
  Mat p;
  Mat r() const { return p * static_cast<double>(p.rows()); }
};

struct SweepParams {
  double damping = 0.3;                 // lambda in (0, 1]
  int max_iters = 200;
  double tol = 1e-8;                    // L1-in-time control update norm
  double hamiltonian_drift_tol = 1e-3;  // reporting threshold only
};

struct ExtremalBundle {
  Trajectory trajectory;
  std::vector<AdjointState> adjoint;    // per node, n_steps + 1 entries
  ControlPath control;
  std::vector<double> residual_history; // L1 control-update norms per iteration
  std::vector<double> hamiltonian_series;
  SupportBounds bounds;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct HamiltonianGradient {
  Mat dy;  // m x d
  Mat dq;  // m x d (equals the leader dynamics rows)
  Mat dx;  // N x d
  Mat dp;  // N x d (equals the follower dynamics rows)
};

// Control-Hamiltonian of the coupled system,
//   sum_i p_i.((K*mu)(x_i) + g(y)(x_i)) + sum_k q_k.((K*mu)(y_k) + f_k(y) + B_k u)
//   - L(y, mu) - gamma(u).
double hamiltonian_N(const ModelSpec& spec, const Mat& y, const Mat& q,
                     const Mat& x, const Mat& p, const Vec& u);

// Exact analytic gradient blocks of hamiltonian_N. The x-block is
// assembled in the rescaled variable r = N*p (the two kernel sums merge
// because DK is even) and divided back; the moment term carries the
// measure-averaged grad_sig factor, which is what matches finite
// differences of hamiltonian_N.
HamiltonianGradient grad_hamiltonian(const ModelSpec& spec, const Mat& y,
                                     const Mat& q, const Mat& x, const Mat& p,
                                     const Vec& u);

// As grad_hamiltonian but the x-block is returned premultiplied by N
// (the natural scale of the r-adjoint equation); dp is omitted.
// Backward integration consumes this form directly.
void grad_hamiltonian_rescaled(const ModelSpec& spec, const Mat& y, const Mat& q,
                               const Mat& x, const Mat& r_scaled, Mat& dy_out,
                               Mat& n_dx_out);

// Unique argmax over the box U of sum_k q_k.B_k u - gamma(u).
// Quadratic gamma: componentwise clip((sum_k B_k^T q_k)/2). General
// strictly convex gamma: projected Newton (finite-difference Hessian)
// to tolerance 1e-12, at most 100 iterations.
Vec maximize_hamiltonian_control(const ModelSpec& spec, const Mat& q);

// Backward RK4 for the adjoint system from (q, p)(T) = 0, interpolating
// stored forward states linearly at the half-step stage points. The
// adjoint right-hand side does not involve u directly (the control
// enters only through the stored trajectory); the control argument is
// kept for interface symmetry.
std::vector<AdjointState> integrate_backward(const ModelSpec& spec,
                                             const Trajectory& trajectory,
                                             const ControlPath& control);

// Damped fixed-point iteration: forward integrate, backward integrate,
// pointwise maximization against the step-averaged adjoint, update
// u <- (1-lambda) u + lambda u_max, until the L1-in-time update norm
// drops below tol. Never throws on max_iters: returns a warning bundle
// with converged = false.
ExtremalBundle forward_backward_sweep(const ModelSpec& spec, const Mat& y0,
                                      const Mat& x0, const TimeGrid& grid,
                                      const SweepParams& params,
                                      const ControlPath* u_init = nullptr);

struct ReducedCost {
  double value = 0.0;
  // Per-node time-density of the cost gradient,
  //   g_j = gamma'(u_j) - sum_k B_k^T qbar_{k,j},
  // with qbar the step-averaged adjoint. The derivative of the cost
  // with respect to the node value u_j is dt * g_j up to O(dt^3).
  std::vector<Vec> gradient;
};

// Cost of a control path: gamma term by left-endpoint rule (exact for
// piecewise-constant u), running-cost term by trapezoid over node
// values. The gradient comes from one backward pass.
ReducedCost reduced_cost_and_gradient(const ModelSpec& spec, const Mat& y0,
                                      const Mat& x0, const TimeGrid& grid,
                                      const ControlPath& control);

// Componentwise projection of the gradient density onto the box's
// tangent cone at u (zero where a bound is active and the gradient
// pushes outward); L1-in-time norm. Zero at a KKT point.
double projected_gradient_norm(const ModelSpec& spec, const ControlPath& control,
                               const std::vector<Vec>& gradient);

// L1-in-time distance between two control paths on the same grid.
double control_path_l1_distance(const ControlPath& a, const ControlPath& b);

}  // namespace mfpmp
