#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace mfpmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Problem instance: interaction kernel, leader drift, follower field,
// running-cost integrand, moment map, control cost and control box.
//
// Derivative layout conventions (agent dimension d, m leaders, control
// dimension D; leader block y is an m x d matrix with one row per leader):
//   DK(z)        : d x d,      DK(c, l)        = dK_c / dz_l
//   Df(y, k)     : d x (m*d),  block columns l*d..l*d+d-1 are d f_k / d y_l
//   Dg_x(y, x)   : d x d
//   Dg_y(y, x)   : d x (m*d),  same column blocking as Df
//   ell_grad_y   : m x d,      row k is the gradient in the k-th leader
//   Domega(x)    : d x d
// All callbacks write into caller-provided storage (already sized) so
// the integrator hot loops do not allocate.
struct ModelSpec {
  int d = 0;  // state dimension per agent
  int D = 0;  // control dimension
  int m = 0;  // number of leaders

  // Sublinear growth constant: ||K(z)|| <= C_K (1 + ||z||).
  double C_K = 0.0;

  std::function<void(const Vec&, Vec&)> K;
  std::function<void(const Vec&, Mat&)> DK;

  std::function<void(const Mat&, int, Vec&)> f;
  std::function<void(const Mat&, int, Mat&)> Df;

  std::function<void(const Mat&, const Vec&, Vec&)> g;
  std::function<void(const Mat&, const Vec&, Mat&)> Dg_x;
  std::function<void(const Mat&, const Vec&, Mat&)> Dg_y;

  std::vector<Mat> B;  // m constant d x D matrices

  // Running-cost integrand ell(y, xi, sigma) and its three gradients.
  std::function<double(const Mat&, const Vec&, const Vec&)> ell;
  std::function<void(const Mat&, const Vec&, const Vec&, Mat&)> ell_grad_y;
  std::function<void(const Mat&, const Vec&, const Vec&, Vec&)> ell_grad_xi;
  std::function<void(const Mat&, const Vec&, const Vec&, Vec&)> ell_grad_sig;

  std::function<void(const Vec&, Vec&)> omega;
  std::function<void(const Vec&, Mat&)> Domega;

  std::function<double(const Vec&)> gamma;
  std::function<void(const Vec&, Vec&)> gamma_grad;

  // Control box U = prod_j [u_lo_j, u_hi_j].
  Vec u_lo, u_hi;

  // True when gamma(u) = ||u||^2; enables the closed-form maximizer.
  bool quadratic_gamma = false;

  // Set by validate_model (or by the built-in factories, whose
  // definitions are themselves covered by the validation tests).
  // Solver entry points refuse unvalidated specs.
  bool validated = false;

  std::string name;
};

struct CuckerSmaleParams {
  double sigma = 1.0;  // communication length-scale, > 0
  double beta = 1.0;   // decay exponent, >= 0
  double amp = 1.0;    // kernel amplitude, > 0
};

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double worst_error = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

// Probes kernel oddness/sublinearity, DK evenness, strict convexity of
// gamma, and all supplied derivatives against central finite
// differences (relative tolerance 1e-5). Probe points come from a
// fixed-seed quasi-random (Halton) set scaled to probe_radius, so
// validation is deterministic. On success marks the spec validated.
ValidationReport validate_model(ModelSpec& spec, double probe_radius,
                                int samples, std::uint64_t seed,
                                double convexity_margin = 1e-6);

// Flocking instance with radial influence phi(z) = amp/(sigma^2+|z|^2)^beta.
// Agent state is (position, velocity), so d = 2*d_space; the control
// enters the leader velocity block; the running cost is the pooled
// velocity-variance cost; gamma(u) = ||u||^2 and U = [-1,1]^(d_space*m).
ModelSpec cucker_smale_model(const CuckerSmaleParams& params, int m, int d_space);

// Followers-only variant (m = 0) with a constant influence phi == amp.
// Used by the closed-form relaxation tests; not a CLI preset.
ModelSpec constant_phi_follower_model(double amp, int d_space);

// Debug instance: K(z) = kernel_scale*z, f = 0, g = 0, block-identity B,
// ell = ell_weight*|xi|^2, gamma = ||u||^2, U = [-u_max, u_max]^(d*m).
ModelSpec identity_debug_model(int d, int m, double kernel_scale,
                               double ell_weight, double u_max);

// Scalar leaders-only instance: dy = u, running cost y^2 + u^2,
// U = [-2, 2]. The classical Riccati problem in this framework.
ModelSpec lq_scalar_model();

// L(y, mu) = (1/N) sum_i ell(y, x_i, (1/N) sum_j omega(x_j)) for the
// uniform empirical measure carried by the rows of x. With zero
// followers (leaders-only degenerate problems) the integrand is
// evaluated at a zero follower state and zero moment: L = ell(y, 0, 0).
double running_cost_atoms(const ModelSpec& spec, const Mat& y, const Mat& x);

// Mean moment (1/N) sum_j omega(x_j); zero vector for N = 0.
Vec omega_mean(const ModelSpec& spec, const Mat& x);

// Measure-averaged cost moment gradient (1/N) sum_a grad_sig ell(y, x_a, sig_bar),
// the factor multiplying Domega in the exact x-gradient of L.
Vec ell_sig_mean(const ModelSpec& spec, const Mat& y, const Mat& x,
                 const Vec& sig_bar);

}  // namespace mfpmp
