#include "mfpmp/meanfield.hpp"

#include <cmath>
#include <string>

#include "mfpmp/errors.hpp"

namespace mfpmp {

Mat symplectic_matrix(int d) {
  Mat J = Mat::Zero(2 * d, 2 * d);
  J.block(0, d, d, d).setIdentity();
  J.block(d, 0, d, d) = -Mat::Identity(d, d);
  return J;
}

namespace {

void check_support(const PhaseMeasure& nu, double radius) {
  if (radius <= 0.0) return;  // no ball configured: unconstrained evaluation
  for (int i = 0; i < nu.size(); ++i) {
    if (nu.atoms.row(i).norm() > radius) {
      throw SupportViolation("measure outside the R_T ball (atom " + std::to_string(i) +
                             "): the constrained Hamiltonian is +infinity there");
    }
  }
}

// The averaged moment factor of the running-cost gradient, assembled
// from the measure's own first-marginal atoms.
Vec moment_factor(const ModelSpec& spec, const Mat& y, const PhaseMeasure& nu,
                  Vec& sig_bar_out) {
  const int N = nu.size();
  const int d = nu.d;
  sig_bar_out = Vec::Zero(d);
  Vec w(d);
  for (int j = 0; j < N; ++j) {
    spec.omega(nu.atoms.row(j).head(d).transpose(), w);
    sig_bar_out += w;
  }
  if (N > 0) sig_bar_out /= static_cast<double>(N);
  Vec s_bar = Vec::Zero(d);
  Vec gs(d);
  for (int a = 0; a < N; ++a) {
    spec.ell_grad_sig(y, nu.atoms.row(a).head(d).transpose(), sig_bar_out, gs);
    s_bar += gs;
  }
  if (N > 0) s_bar /= static_cast<double>(N);
  return s_bar;
}

}  // namespace

double hamiltonian_mf(const ModelSpec& spec, const MeanFieldPoint& point) {
  check_support(point.nu, point.support_radius);
  const int N = point.nu.size();
  const int d = point.nu.d;
  const int m = static_cast<int>(point.y.rows());
  const Mat& atoms = point.nu.atoms;
  double acc = 0.0;
  Vec kz(d), gz(d), fk(d);

  // Symmetric kernel double sum over phase atoms.
  if (N > 0) {
    double pair_sum = 0.0;
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        spec.K(atoms.row(i).head(d).transpose() - atoms.row(j).head(d).transpose(), kz);
        pair_sum += (atoms.row(i).tail(d) - atoms.row(j).tail(d)).dot(kz.transpose());
      }
    }
    acc += pair_sum / (2.0 * static_cast<double>(N) * static_cast<double>(N));

    // Leader-field drift against r, both as integrals over nu.
    double drift = 0.0;
    for (int i = 0; i < N; ++i) {
      spec.g(point.y, atoms.row(i).head(d).transpose(), gz);
      drift += atoms.row(i).tail(d).dot(gz.transpose());
    }
    acc += drift / static_cast<double>(N);

    // Leader coupling to the measure.
    for (int k = 0; k < m; ++k) {
      double lead = 0.0;
      for (int i = 0; i < N; ++i) {
        spec.K(point.y.row(k).transpose() - atoms.row(i).head(d).transpose(), kz);
        lead += point.q.row(k).dot(kz.transpose());
      }
      acc += lead / static_cast<double>(N);
    }
  }

  for (int k = 0; k < m; ++k) {
    spec.f(point.y, k, fk);
    Vec vel = fk;
    if (!spec.B.empty()) vel += spec.B[static_cast<size_t>(k)] * point.u;
    acc += point.q.row(k).dot(vel.transpose());
  }

  // Running cost on the first marginal.
  const Mat first = atoms.leftCols(d);
  acc -= running_cost_atoms(spec, point.y, first);
  acc -= spec.gamma(point.u);
  return acc;
}

Vec wasserstein_gradient(const ModelSpec& spec, const MeanFieldPoint& point,
                         const Vec& at_x, const Vec& at_r) {
  check_support(point.nu, point.support_radius);
  const int N = point.nu.size();
  const int d = point.nu.d;
  const int m = static_cast<int>(point.y.rows());
  const Mat& atoms = point.nu.atoms;

  Vec xblock = Vec::Zero(d);
  Vec rblock = Vec::Zero(d);
  Mat dk(d, d);
  Vec kz(d);

  // x-block: integral of (r - r').DK(x - x') e_l over nu.
  if (N > 0) {
    Vec pair = Vec::Zero(d);
    for (int j = 0; j < N; ++j) {
      spec.DK(at_x - atoms.row(j).head(d).transpose(), dk);
      pair.noalias() += dk.transpose() * (at_r - atoms.row(j).tail(d).transpose());
    }
    xblock += pair / static_cast<double>(N);
  }
  Mat dgx(d, d);
  spec.Dg_x(point.y, at_x, dgx);
  xblock.noalias() += dgx.transpose() * at_r;
  for (int k = 0; k < m; ++k) {
    spec.DK(point.y.row(k).transpose() - at_x, dk);
    xblock.noalias() -= dk.transpose() * point.q.row(k).transpose();
  }
  Vec sig_bar;
  const Vec s_bar = moment_factor(spec, point.y, point.nu, sig_bar);
  Vec gxi(d);
  spec.ell_grad_xi(point.y, at_x, sig_bar, gxi);
  xblock -= gxi;
  Mat dom(d, d);
  spec.Domega(at_x, dom);
  xblock.noalias() -= dom.transpose() * s_bar;

  // r-block: (K * mu)(x) + g(y)(x), with the convolution summed here
  // over the measure's first marginal.
  if (N > 0) {
    Vec conv = Vec::Zero(d);
    for (int j = 0; j < N; ++j) {
      spec.K(at_x - atoms.row(j).head(d).transpose(), kz);
      conv += kz;
    }
    rblock += conv / static_cast<double>(N);
  }
  Vec gz(d);
  spec.g(point.y, at_x, gz);
  rblock += gz;

  Vec out(2 * d);
  out.head(d) = xblock;
  out.tail(d) = rblock;
  return out;
}

double check_e_uguale(const ModelSpec& spec, const Mat& y, const Mat& q,
                      const Mat& x, const Mat& p, const Vec& u) {
  const int N = static_cast<int>(x.rows());
  const int d = spec.d;
  MeanFieldPoint point;
  point.y = y;
  point.q = q;
  point.nu = lift(x, p);
  point.u = u;
  point.support_radius = 0.0;  // identity check: no ball constraint

  // Finite-dimensional side through the pmp module's code path.
  const HamiltonianGradient fin = grad_hamiltonian(spec, y, q, x, p, u);

  double worst = 0.0;
  for (int i = 0; i < N; ++i) {
    const Vec at_x = point.nu.atoms.row(i).head(d).transpose();
    const Vec at_r = point.nu.atoms.row(i).tail(d).transpose();
    const Vec grad = wasserstein_gradient(spec, point, at_x, at_r);
    // J (xblock, rblock) = (rblock, -xblock).
    Vec mf(2 * d);
    mf.head(d) = grad.tail(d);
    mf.tail(d) = -grad.head(d);
    Vec fd(2 * d);
    fd.head(d) = fin.dp.row(i).transpose();
    fd.tail(d) = -static_cast<double>(N) * fin.dx.row(i).transpose();
    worst = std::max(worst, (mf - fd).cwiseAbs().maxCoeff());
  }
  return worst;
}

TestFunction testfn_constant(int d) {
  TestFunction f;
  f.name = "constant";
  f.phi = [](const Vec&) { return 1.0; };
  f.grad = [d](const Vec&, Vec& out) {
    out = Vec::Zero(2 * d);
  };
  return f;
}

TestFunction testfn_linear(int d, const Vec& a) {
  if (a.size() != 2 * d) throw ConfigError("testfn_linear: direction must have size 2d");
  TestFunction f;
  f.name = "linear";
  f.phi = [a](const Vec& z) { return a.dot(z); };
  f.grad = [a](const Vec&, Vec& out) { out = a; };
  return f;
}

TestFunction testfn_gaussian(int d, const Vec& center, double width) {
  if (center.size() != 2 * d) {
    throw ConfigError("testfn_gaussian: center must have size 2d");
  }
  if (width <= 0.0) throw ConfigError("testfn_gaussian: width must be > 0");
  TestFunction f;
  f.name = "gaussian";
  const double w2 = width * width;
  f.phi = [center, w2](const Vec& z) {
    return std::exp(-(z - center).squaredNorm() / (2.0 * w2));
  };
  f.grad = [center, w2](const Vec& z, Vec& out) {
    const double v = std::exp(-(z - center).squaredNorm() / (2.0 * w2));
    out = -(v / w2) * (z - center);
  };
  return f;
}

std::vector<double> weak_pde_residual(const ModelSpec& spec,
                                      const ExtremalBundle& bundle,
                                      const TestFunction& testfn) {
  const Trajectory& traj = bundle.trajectory;
  const int n = traj.grid.n_steps;
  const double dt = traj.grid.dt();
  const int N = traj.states.front().followers();
  const int d = spec.d;
  if (n < 2) throw ConfigError("weak_pde_residual: need at least 2 steps");

  // Phase-average of the test function at each node.
  std::vector<double> avg(static_cast<size_t>(n) + 1, 0.0);
  std::vector<PhaseMeasure> lifts(static_cast<size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    lifts[static_cast<size_t>(j)] =
        lift(traj.states[static_cast<size_t>(j)].x, bundle.adjoint[static_cast<size_t>(j)].p);
    double acc = 0.0;
    for (int i = 0; i < N; ++i) {
      acc += testfn.phi(lifts[static_cast<size_t>(j)].atoms.row(i).transpose());
    }
    avg[static_cast<size_t>(j)] = (N > 0) ? acc / static_cast<double>(N) : 0.0;
  }

  std::vector<double> residual(static_cast<size_t>(n) + 1, 0.0);
  Vec gphi(2 * d);
  for (int j = 0; j <= n; ++j) {
    double ddt;
    if (j == 0) {
      ddt = (-3.0 * avg[0] + 4.0 * avg[1] - avg[2]) / (2.0 * dt);
    } else if (j == n) {
      ddt = (3.0 * avg[static_cast<size_t>(n)] - 4.0 * avg[static_cast<size_t>(n) - 1] +
             avg[static_cast<size_t>(n) - 2]) /
            (2.0 * dt);
    } else {
      ddt = (avg[static_cast<size_t>(j) + 1] - avg[static_cast<size_t>(j) - 1]) / (2.0 * dt);
    }
    MeanFieldPoint point;
    point.y = traj.states[static_cast<size_t>(j)].y;
    point.q = bundle.adjoint[static_cast<size_t>(j)].q;
    point.nu = lifts[static_cast<size_t>(j)];
    point.u = traj.control.values[static_cast<size_t>(std::min(j, n - 1))];
    point.support_radius = 0.0;
    double rhs = 0.0;
    for (int i = 0; i < N; ++i) {
      const Vec z = point.nu.atoms.row(i).transpose();
      const Vec grad = wasserstein_gradient(spec, point, z.head(d), z.tail(d));
      Vec flow(2 * d);
      flow.head(d) = grad.tail(d);
      flow.tail(d) = -grad.head(d);
      testfn.grad(z, gphi);
      rhs += gphi.dot(flow);
    }
    if (N > 0) rhs /= static_cast<double>(N);
    residual[static_cast<size_t>(j)] = ddt - rhs;
  }
  return residual;
}

TerminalDiagnostics terminal_marginal_check(const ExtremalBundle& bundle) {
  TerminalDiagnostics diag;
  const AdjointState& terminal = bundle.adjoint.back();
  const Mat r = terminal.r();
  for (int i = 0; i < r.rows(); ++i) {
    diag.max_r_norm = std::max(diag.max_r_norm, r.row(i).norm());
  }
  diag.q_norm = terminal.q.norm();
  return diag;
}

double first_marginal_gap(const ExtremalBundle& bundle) {
  double worst = 0.0;
  for (size_t j = 0; j < bundle.trajectory.states.size(); ++j) {
    const Mat& x = bundle.trajectory.states[j].x;
    if (x.rows() == 0) continue;
    const PhaseMeasure nu = lift(x, bundle.adjoint[j].p);
    const EmpiricalMeasure first = marginal(nu, Marginal::First);
    const double gap = (first.atoms - x).cwiseAbs().maxCoeff();
    worst = std::max(worst, gap);
  }
  return worst;
}

}  // namespace mfpmp
