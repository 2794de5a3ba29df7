#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mfpmp/measures.hpp"
#include "mfpmp/pmp.hpp"

namespace mfpmp {

// Evaluation point of the constrained phase-space Hamiltonian: leader
// state and adjoint, phase measure, control, and the support radius
// outside of which the Hamiltonian is +infinity.
struct MeanFieldPoint {
  Mat y;
  Mat q;
  PhaseMeasure nu;
  Vec u;
  double support_radius = 0.0;
};

// Fixed symplectic block matrix [[0, I], [-I, 0]] of size 2d x 2d.
Mat symplectic_matrix(int d);

// Phase-space Hamiltonian on an empirical measure:
//   (1/(2N^2)) sum_ij (r_i - r_j).K(x_i - x_j)
//   + (1/N) sum_i r_i.g(y)(x_i) + sum_k (1/N) sum_i q_k.K(y_k - x_i)
//   + sum_k q_k.(f_k(y) + B_k u) - L(y, first marginal) - gamma(u).
// Throws SupportViolation when an atom leaves B(0, support_radius).
double hamiltonian_mf(const ModelSpec& spec, const MeanFieldPoint& point);

// Closed-form measure gradient at a phase point (x, r): the x-block
// carries the merged kernel sum, the leader coupling, and the exact
// cost gradient (including the measure-averaged moment factor); the
// r-block is (K * mu)(x) + g(y)(x). Independent of u and q's pairing
// with B. 2d-vector (x-block first).
Vec wasserstein_gradient(const ModelSpec& spec, const MeanFieldPoint& point,
                         const Vec& at_x, const Vec& at_r);

// Cross-checks the symplectic rotation of the measure gradient against
// the finite-dimensional gradient blocks computed by the pmp module's
// independent code path: at every atom,
//   J grad_nu H (x_i, r_i)  vs  (grad_{p_i} H_N, -N grad_{x_i} H_N).
// Returns the maximum componentwise absolute discrepancy.
double check_e_uguale(const ModelSpec& spec, const Mat& y, const Mat& q,
                      const Mat& x, const Mat& p, const Vec& u);

struct TestFunction {
  std::string name;
  std::function<double(const Vec&)> phi;        // on R^{2d}
  std::function<void(const Vec&, Vec&)> grad;   // 2d gradient
};

TestFunction testfn_constant(int d);
TestFunction testfn_linear(int d, const Vec& a);
TestFunction testfn_gaussian(int d, const Vec& center, double width);

// Weak-form transport residual of the phase measure along a bundle:
// for each node, the time derivative of (1/N) sum_i phi(x_i, r_i)
// (centered differences at interior nodes, one-sided second-order at
// the endpoints) minus (1/N) sum_i grad_phi.(J grad_nu H)(x_i, r_i).
std::vector<double> weak_pde_residual(const ModelSpec& spec,
                                      const ExtremalBundle& bundle,
                                      const TestFunction& testfn);

struct TerminalDiagnostics {
  double max_r_norm = 0.0;
  double q_norm = 0.0;
};

// Terminal adjoint diagnostics; both are exactly zero for any bundle
// built by the backward pass (the terminal datum is set, not solved).
TerminalDiagnostics terminal_marginal_check(const ExtremalBundle& bundle);

// Max over nodes of the atomwise distance between the lift's first
// marginal and the forward follower measure (exactly zero by
// construction; reported for the verification artifact).
double first_marginal_gap(const ExtremalBundle& bundle);

}  // namespace mfpmp
