#include "mfpmp/model.hpp"

#include <cmath>
#include <sstream>

#include "mfpmp/errors.hpp"
#include "mfpmp/rng.hpp"

namespace mfpmp {

namespace {

bool finite(const Vec& v) { return v.allFinite(); }

// Halton points in the ball of the given radius, one coordinate stream
// per dimension. Deterministic; the seed offsets the sequence index.
Vec probe_point(int dim, double radius, std::uint64_t seed, int index) {
  Vec z(dim);
  const std::uint64_t base_index = 1 + (seed % 1024) + static_cast<std::uint64_t>(index);
  for (int c = 0; c < dim; ++c) {
    z[c] = (2.0 * halton(base_index, halton_base(c)) - 1.0) * radius;
  }
  return z;
}

double rel_err(double err, double scale) { return err / (1.0 + scale); }

}  // namespace

ValidationReport validate_model(ModelSpec& spec, double probe_radius, int samples,
                                std::uint64_t seed, double convexity_margin) {
  if (probe_radius <= 0.0) throw ConfigError("validate_model: probe_radius must be positive");
  if (samples < 1) throw ConfigError("validate_model: samples must be >= 1");

  ValidationReport report;
  const int d = spec.d;
  const int D = spec.D;
  const int m = spec.m;
  const double fd_tol = 1e-5;

  auto check_finite = [&](const Vec& v, const std::string& where, const Vec& at) {
    if (!finite(v)) {
      std::ostringstream os;
      os << "model evaluates to non-finite value in " << where << " at point [";
      for (int c = 0; c < at.size(); ++c) os << (c ? ", " : "") << at[c];
      os << "]";
      throw ConfigError(os.str());
    }
  };

  // Kernel oddness, K(0) = 0 included.
  {
    ValidationCheck c{"kernel_odd", true, 0.0, ""};
    Vec kz(d), kneg(d), zero = Vec::Zero(d);
    spec.K(zero, kz);
    check_finite(kz, "K", zero);
    double z0 = kz.norm();
    c.worst_error = z0;
    if (z0 > 1e-12) {
      c.pass = false;
      c.detail = "K(0) != 0";
    }
    for (int s = 0; s < samples; ++s) {
      Vec z = probe_point(d, probe_radius, seed, s);
      spec.K(z, kz);
      check_finite(kz, "K", z);
      spec.K(Vec(-z), kneg);
      double err = (kz + kneg).norm() / (1.0 + kz.norm());
      c.worst_error = std::max(c.worst_error, err);
      if (err > 1e-12) c.pass = false;
    }
    if (!c.pass && c.detail.empty()) c.detail = "K(z) + K(-z) exceeds tolerance";
    report.checks.push_back(c);
  }

  // Sublinear growth against the declared C_K.
  {
    ValidationCheck c{"kernel_sublinear", true, 0.0, ""};
    Vec kz(d);
    for (int s = 0; s < samples; ++s) {
      Vec z = probe_point(d, probe_radius, seed + 1, s);
      spec.K(z, kz);
      double bound = spec.C_K * (1.0 + z.norm());
      double excess = kz.norm() - bound;
      c.worst_error = std::max(c.worst_error, excess);
      if (excess > 1e-9 * (1.0 + bound)) c.pass = false;
    }
    if (!c.pass) c.detail = "||K(z)|| exceeds C_K (1 + ||z||)";
    report.checks.push_back(c);
  }

  // DK evenness.
  {
    ValidationCheck c{"kernel_jacobian_even", true, 0.0, ""};
    Mat dk(d, d), dkneg(d, d);
    for (int s = 0; s < samples; ++s) {
      Vec z = probe_point(d, probe_radius, seed + 2, s);
      spec.DK(z, dk);
      spec.DK(Vec(-z), dkneg);
      double err = (dk - dkneg).norm() / (1.0 + dk.norm());
      c.worst_error = std::max(c.worst_error, err);
      if (err > 1e-12) c.pass = false;
    }
    if (!c.pass) c.detail = "DK(z) != DK(-z)";
    report.checks.push_back(c);
  }

  // Strict convexity of gamma on the box.
  {
    ValidationCheck c{"gamma_strictly_convex", true, 0.0, ""};
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    for (int s = 0; s < samples; ++s) {
      Vec u0(D), u1(D);
      for (int j = 0; j < D; ++j) {
        u0[j] = rng.uniform(spec.u_lo[j], spec.u_hi[j]);
        u1[j] = rng.uniform(spec.u_lo[j], spec.u_hi[j]);
      }
      if ((u0 - u1).norm() < 1e-8) continue;
      double t = 0.1 + 0.8 * rng.uniform();
      Vec mid = t * u0 + (1.0 - t) * u1;
      double lhs = spec.gamma(mid);
      double rhs = t * spec.gamma(u0) + (1.0 - t) * spec.gamma(u1) -
                   convexity_margin * t * (1.0 - t) * (u0 - u1).squaredNorm();
      double viol = lhs - rhs;
      c.worst_error = std::max(c.worst_error, viol);
      if (viol >= 0.0) c.pass = false;
    }
    if (!c.pass) c.detail = "midpoint inequality violated";
    report.checks.push_back(c);
  }

  // Finite-difference agreement of every supplied derivative.
  {
    ValidationCheck c{"derivatives_match_fd", true, 0.0, ""};
    Rng rng(seed ^ 0xc2b2ae3d27d4eb4full);
    auto rand_vec = [&](int n, double scale) {
      Vec v(n);
      for (int j = 0; j < n; ++j) v[j] = rng.uniform(-scale, scale);
      return v;
    };
    auto rand_mat = [&](int rows, int cols, double scale) {
      Mat v(rows, cols);
      for (int a = 0; a < rows; ++a)
        for (int b = 0; b < cols; ++b) v(a, b) = rng.uniform(-scale, scale);
      return v;
    };
    auto note = [&](const std::string& what, double err) {
      c.worst_error = std::max(c.worst_error, err);
      if (err > fd_tol) {
        c.pass = false;
        if (c.detail.empty()) c.detail = what + " mismatch vs finite differences";
      }
    };
    const int nprobe = std::max(2, samples / 8);
    for (int s = 0; s < nprobe; ++s) {
      const double scale = 0.5 * probe_radius;
      Vec z = rand_vec(d, scale);
      Mat y = rand_mat(m, d, scale);
      Vec xi = rand_vec(d, scale);
      Vec sg = rand_vec(d, scale);
      Vec u(D);
      for (int j = 0; j < D; ++j) u[j] = rng.uniform(spec.u_lo[j], spec.u_hi[j]);

      // DK vs FD of K.
      {
        Mat dk(d, d);
        spec.DK(z, dk);
        Vec kp(d), km(d);
        for (int l = 0; l < d; ++l) {
          double h = 1e-6 * (1.0 + std::abs(z[l]));
          Vec zp = z, zm = z;
          zp[l] += h;
          zm[l] -= h;
          spec.K(zp, kp);
          spec.K(zm, km);
          Vec fd = (kp - km) / (2.0 * h);
          note("DK", rel_err((fd - dk.col(l)).norm(), dk.col(l).norm()));
        }
      }
      // Df vs FD of f.
      if (m > 0) {
        Vec fp(d), fm(d);
        for (int k = 0; k < m; ++k) {
          Mat df(d, m * d);
          spec.Df(y, k, df);
          for (int l = 0; l < m; ++l)
            for (int a = 0; a < d; ++a) {
              double h = 1e-6 * (1.0 + std::abs(y(l, a)));
              Mat yp = y, ym = y;
              yp(l, a) += h;
              ym(l, a) -= h;
              spec.f(yp, k, fp);
              spec.f(ym, k, fm);
              Vec fd = (fp - fm) / (2.0 * h);
              note("Df", rel_err((fd - df.col(l * d + a)).norm(), df.col(l * d + a).norm()));
            }
        }
      }
      // Dg_x, Dg_y vs FD of g.
      {
        Vec gp(d), gm(d);
        Mat dgx(d, d);
        spec.Dg_x(y, xi, dgx);
        for (int l = 0; l < d; ++l) {
          double h = 1e-6 * (1.0 + std::abs(xi[l]));
          Vec xp = xi, xm = xi;
          xp[l] += h;
          xm[l] -= h;
          spec.g(y, xp, gp);
          spec.g(y, xm, gm);
          Vec fd = (gp - gm) / (2.0 * h);
          note("Dg_x", rel_err((fd - dgx.col(l)).norm(), dgx.col(l).norm()));
        }
        if (m > 0) {
          Mat dgy(d, m * d);
          spec.Dg_y(y, xi, dgy);
          for (int l = 0; l < m; ++l)
            for (int a = 0; a < d; ++a) {
              double h = 1e-6 * (1.0 + std::abs(y(l, a)));
              Mat yp = y, ym = y;
              yp(l, a) += h;
              ym(l, a) -= h;
              spec.g(yp, xi, gp);
              spec.g(ym, xi, gm);
              Vec fd = (gp - gm) / (2.0 * h);
              note("Dg_y", rel_err((fd - dgy.col(l * d + a)).norm(), dgy.col(l * d + a).norm()));
            }
        }
      }
      // Cost integrand gradients.
      {
        if (m > 0) {
          Mat gy(m, d);
          spec.ell_grad_y(y, xi, sg, gy);
          for (int l = 0; l < m; ++l)
            for (int a = 0; a < d; ++a) {
              double h = 1e-6 * (1.0 + std::abs(y(l, a)));
              Mat yp = y, ym = y;
              yp(l, a) += h;
              ym(l, a) -= h;
              double fd = (spec.ell(yp, xi, sg) - spec.ell(ym, xi, sg)) / (2.0 * h);
              note("ell_grad_y", rel_err(std::abs(fd - gy(l, a)), std::abs(gy(l, a))));
            }
        }
        Vec gxi(d), gsg(d);
        spec.ell_grad_xi(y, xi, sg, gxi);
        spec.ell_grad_sig(y, xi, sg, gsg);
        for (int a = 0; a < d; ++a) {
          double h = 1e-6 * (1.0 + std::abs(xi[a]));
          Vec xp = xi, xm = xi;
          xp[a] += h;
          xm[a] -= h;
          double fd = (spec.ell(y, xp, sg) - spec.ell(y, xm, sg)) / (2.0 * h);
          note("ell_grad_xi", rel_err(std::abs(fd - gxi[a]), std::abs(gxi[a])));
          h = 1e-6 * (1.0 + std::abs(sg[a]));
          Vec sp = sg, sm = sg;
          sp[a] += h;
          sm[a] -= h;
          fd = (spec.ell(y, xi, sp) - spec.ell(y, xi, sm)) / (2.0 * h);
          note("ell_grad_sig", rel_err(std::abs(fd - gsg[a]), std::abs(gsg[a])));
        }
      }
      // Domega vs FD of omega.
      {
        Mat dom(d, d);
        spec.Domega(xi, dom);
        Vec op(d), om(d);
        for (int l = 0; l < d; ++l) {
          double h = 1e-6 * (1.0 + std::abs(xi[l]));
          Vec xp = xi, xm = xi;
          xp[l] += h;
          xm[l] -= h;
          spec.omega(xp, op);
          spec.omega(xm, om);
          Vec fd = (op - om) / (2.0 * h);
          note("Domega", rel_err((fd - dom.col(l)).norm(), dom.col(l).norm()));
        }
      }
      // gamma gradient.
      {
        Vec gg(D);
        spec.gamma_grad(u, gg);
        for (int j = 0; j < D; ++j) {
          double h = 1e-7 * (1.0 + std::abs(u[j]));
          Vec up = u, um = u;
          up[j] += h;
          um[j] -= h;
          double fd = (spec.gamma(up) - spec.gamma(um)) / (2.0 * h);
          note("gamma_grad", rel_err(std::abs(fd - gg[j]), std::abs(gg[j])));
        }
      }
    }
    report.checks.push_back(c);
  }

  spec.validated = report.ok();
  return report;
}

namespace {

// Radial influence phi and its gradient in the position difference.
struct Phi {
  double sigma2, beta, amp;
  double value(const Vec& dx) const {
    return amp * std::pow(sigma2 + dx.squaredNorm(), -beta);
  }
  // grad phi(dx) = -2 beta phi(dx) / (sigma^2 + |dx|^2) * dx
  Vec grad(const Vec& dx) const {
    double s2 = sigma2 + dx.squaredNorm();
    return (-2.0 * beta * amp * std::pow(s2, -beta - 1.0)) * dx;
  }
};

ModelSpec flocking_model(const Phi& phi, int m, int s) {
  ModelSpec spec;
  const int d = 2 * s;
  spec.d = d;
  spec.m = m;
  spec.D = s * m;
  // phi is maximal at 0 and the kernel is linear in the velocity gap.
  spec.C_K = phi.value(Vec::Zero(s));

  spec.K = [phi, s](const Vec& z, Vec& out) {
    out.head(s).setZero();
    out.tail(s) = -phi.value(z.head(s)) * z.tail(s);
  };
  spec.DK = [phi, s](const Vec& z, Mat& out) {
    out.setZero();
    const Vec a = z.head(s);
    const Vec b = z.tail(s);
    const Vec gp = phi.grad(a);
    const double ph = phi.value(a);
    // bottom-left: -b gradphi(a)^T, bottom-right: -phi(a) I
    out.block(s, 0, s, s).noalias() = -b * gp.transpose();
    out.block(s, s, s, s).diagonal().setConstant(-ph);
  };

  spec.f = [phi, s, m](const Mat& y, int k, Vec& out) {
    out.head(s) = y.row(k).tail(s);
    Vec acc = Vec::Zero(s);
    for (int j = 0; j < m; ++j) {
      Vec dpos = (y.row(k).head(s) - y.row(j).head(s)).transpose();
      acc += phi.value(dpos) * (y.row(j).tail(s) - y.row(k).tail(s)).transpose();
    }
    out.tail(s) = acc / static_cast<double>(m);
  };
  spec.Df = [phi, s, m](const Mat& y, int k, Mat& out) {
    const int d = 2 * s;
    out.setZero();
    // position rows: d f_k^pos / d w_k = I
    out.block(0, k * d + s, s, s).setIdentity();
    double phi_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      Vec dpos = (y.row(k).head(s) - y.row(j).head(s)).transpose();
      double ph = phi.value(dpos);
      phi_sum += ph;
      if (j != k) {
        Vec gp = phi.grad(dpos);
        Vec dw = (y.row(j).tail(s) - y.row(k).tail(s)).transpose();
        // velocity rows, position columns of leader j and leader k
        out.block(s, j * d, s, s).noalias() -= dw * gp.transpose() / m;
        out.block(s, k * d, s, s).noalias() += dw * gp.transpose() / m;
        // velocity rows, velocity columns of leader j
        out.block(s, j * d + s, s, s).diagonal().array() += ph / m;
      }
    }
    // velocity rows, own velocity columns: (phi(0) - sum_j phi) / m
    out.block(s, k * d + s, s, s).diagonal().array() +=
        (phi.value(Vec::Zero(s)) - phi_sum) / m;
  };

  spec.g = [phi, s, m](const Mat& y, const Vec& x, Vec& out) {
    out.head(s) = x.tail(s);
    Vec acc = Vec::Zero(s);
    for (int j = 0; j < m; ++j) {
      Vec dpos = x.head(s) - y.row(j).head(s).transpose();
      acc += phi.value(dpos) * (y.row(j).tail(s).transpose() - x.tail(s));
    }
    // The position row (velocity passthrough) is structural; only the
    // alignment force averages over leaders.
    out.tail(s) = (m > 0) ? Vec(acc / static_cast<double>(m)) : Vec(Vec::Zero(s));
  };
  spec.Dg_x = [phi, s, m](const Mat& y, const Vec& x, Mat& out) {
    out.setZero();
    out.block(0, s, s, s).setIdentity();
    if (m == 0) return;
    double phi_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      Vec dpos = x.head(s) - y.row(j).head(s).transpose();
      double ph = phi.value(dpos);
      phi_sum += ph;
      Vec gp = phi.grad(dpos);
      Vec dw = y.row(j).tail(s).transpose() - x.tail(s);
      out.block(s, 0, s, s).noalias() += dw * gp.transpose() / m;
    }
    out.block(s, s, s, s).diagonal().array() -= phi_sum / m;
  };
  spec.Dg_y = [phi, s, m](const Mat& y, const Vec& x, Mat& out) {
    const int d = 2 * s;
    out.setZero();
    for (int j = 0; j < m; ++j) {
      Vec dpos = x.head(s) - y.row(j).head(s).transpose();
      double ph = phi.value(dpos);
      Vec gp = phi.grad(dpos);
      Vec dw = y.row(j).tail(s).transpose() - x.tail(s);
      // d/d y_j^pos: the difference enters with a minus sign.
      out.block(s, j * d, s, s).noalias() = -(dw * gp.transpose()) / m;
      out.block(s, j * d + s, s, s).diagonal().setConstant(ph / m);
    }
  };

  if (m > 0) {
    spec.B.resize(m);
    for (int k = 0; k < m; ++k) {
      Mat Bk = Mat::Zero(d, s * m);
      Bk.block(s, k * s, s, s).setIdentity();
      spec.B[k] = Bk;
    }
  }

  // Pooled variance cost: (2/m) sum |w_k|^2 + 2|v|^2 - (Wbar + sig_v).(Wbar + v),
  // where Wbar is the mean leader velocity and sig_v the velocity block
  // of the moment argument.
  spec.ell = [s, m](const Mat& y, const Vec& xi, const Vec& sig) {
    Vec wbar = Vec::Zero(s);
    double sumw2 = 0.0;
    for (int k = 0; k < m; ++k) {
      wbar += y.row(k).tail(s).transpose();
      sumw2 += y.row(k).tail(s).squaredNorm();
    }
    if (m > 0) wbar /= m;
    const Vec v = xi.tail(s);
    const Vec sv = sig.tail(s);
    double lead = (m > 0) ? 2.0 * sumw2 / m : 0.0;
    return lead + 2.0 * v.squaredNorm() - (wbar + sv).dot(wbar + v);
  };
  spec.ell_grad_y = [s, m](const Mat& y, const Vec& xi, const Vec& sig, Mat& out) {
    out.setZero();
    if (m == 0) return;
    Vec wbar = Vec::Zero(s);
    for (int k = 0; k < m; ++k) wbar += y.row(k).tail(s).transpose();
    wbar /= m;
    const Vec v = xi.tail(s);
    const Vec sv = sig.tail(s);
    for (int k = 0; k < m; ++k) {
      out.row(k).tail(s) = (4.0 / m) * y.row(k).tail(s) -
                           ((wbar + v) + (wbar + sv)).transpose() / m;
    }
  };
  spec.ell_grad_xi = [s, m](const Mat& y, const Vec& xi, const Vec& sig, Vec& out) {
    Vec wbar = Vec::Zero(s);
    for (int k = 0; k < m; ++k) wbar += y.row(k).tail(s).transpose();
    if (m > 0) wbar /= m;
    out.setZero();
    out.tail(s) = 4.0 * xi.tail(s) - (wbar + sig.tail(s));
  };
  spec.ell_grad_sig = [s, m](const Mat& y, const Vec& xi, const Vec&, Vec& out) {
    Vec wbar = Vec::Zero(s);
    for (int k = 0; k < m; ++k) wbar += y.row(k).tail(s).transpose();
    if (m > 0) wbar /= m;
    out.setZero();
    out.tail(s) = -(wbar + xi.tail(s));
  };

  spec.omega = [s](const Vec& x, Vec& out) {
    out.setZero();
    out.tail(s) = x.tail(s);
  };
  spec.Domega = [s](const Vec&, Mat& out) {
    out.setZero();
    out.block(s, s, s, s).setIdentity();
  };

  spec.gamma = [](const Vec& u) { return u.squaredNorm(); };
  spec.gamma_grad = [](const Vec& u, Vec& out) { out = 2.0 * u; };
  spec.quadratic_gamma = true;
  spec.u_lo = Vec::Constant(std::max(spec.D, 0), -1.0);
  spec.u_hi = Vec::Constant(std::max(spec.D, 0), 1.0);
  return spec;
}

}  // namespace

ModelSpec cucker_smale_model(const CuckerSmaleParams& params, int m, int d_space) {
  if (m < 1) throw ConfigError("cucker_smale_model: m must be >= 1");
  if (d_space < 1) throw ConfigError("cucker_smale_model: d_space must be >= 1");
  if (params.sigma <= 0.0) throw ConfigError("cucker_smale_model: sigma must be > 0");
  if (params.beta < 0.0) throw ConfigError("cucker_smale_model: beta must be >= 0");
  if (params.amp <= 0.0) throw ConfigError("cucker_smale_model: amp must be > 0");
  Phi phi{params.sigma * params.sigma, params.beta, params.amp};
  ModelSpec spec = flocking_model(phi, m, d_space);
  spec.name = "cucker_smale";
  spec.validated = true;
  return spec;
}

ModelSpec constant_phi_follower_model(double amp, int d_space) {
  Phi phi{1.0, 0.0, amp};  // beta = 0 makes phi constant == amp
  ModelSpec spec = flocking_model(phi, 0, d_space);
  // No leaders: control space collapses; keep D = 1 so control paths
  // remain well-formed (B is empty, the control has no effect).
  spec.D = 1;
  spec.u_lo = Vec::Constant(1, -1.0);
  spec.u_hi = Vec::Constant(1, 1.0);
  spec.name = "constant_phi_followers";
  spec.validated = true;
  return spec;
}

ModelSpec identity_debug_model(int d, int m, double kernel_scale, double ell_weight,
                               double u_max) {
  if (d < 1) throw ConfigError("identity_debug_model: d must be >= 1");
  if (m < 1) throw ConfigError("identity_debug_model: m must be >= 1");
  if (u_max <= 0.0) throw ConfigError("identity_debug_model: u_max must be > 0");
  ModelSpec spec;
  spec.d = d;
  spec.m = m;
  spec.D = d * m;
  spec.C_K = std::abs(kernel_scale);
  spec.name = "identity_debug";

  spec.K = [kernel_scale](const Vec& z, Vec& out) { out = kernel_scale * z; };
  spec.DK = [kernel_scale](const Vec& z, Mat& out) {
    out.setZero();
    out.diagonal().setConstant(kernel_scale);
    (void)z;
  };
  spec.f = [](const Mat&, int, Vec& out) { out.setZero(); };
  spec.Df = [](const Mat&, int, Mat& out) { out.setZero(); };
  spec.g = [](const Mat&, const Vec&, Vec& out) { out.setZero(); };
  spec.Dg_x = [](const Mat&, const Vec&, Mat& out) { out.setZero(); };
  spec.Dg_y = [](const Mat&, const Vec&, Mat& out) { out.setZero(); };
  spec.B.resize(m);
  for (int k = 0; k < m; ++k) {
    Mat Bk = Mat::Zero(d, d * m);
    Bk.block(0, k * d, d, d).setIdentity();
    spec.B[k] = Bk;
  }
  spec.ell = [ell_weight](const Mat&, const Vec& xi, const Vec&) {
    return ell_weight * xi.squaredNorm();
  };
  spec.ell_grad_y = [](const Mat&, const Vec&, const Vec&, Mat& out) { out.setZero(); };
  spec.ell_grad_xi = [ell_weight](const Mat&, const Vec& xi, const Vec&, Vec& out) {
    out = 2.0 * ell_weight * xi;
  };
  spec.ell_grad_sig = [](const Mat&, const Vec&, const Vec&, Vec& out) { out.setZero(); };
  spec.omega = [](const Vec& x, Vec& out) { out = x; };
  spec.Domega = [](const Vec&, Mat& out) { out.setIdentity(); };
  spec.gamma = [](const Vec& u) { return u.squaredNorm(); };
  spec.gamma_grad = [](const Vec& u, Vec& out) { out = 2.0 * u; };
  spec.quadratic_gamma = true;
  spec.u_lo = Vec::Constant(spec.D, -u_max);
  spec.u_hi = Vec::Constant(spec.D, u_max);
  spec.validated = true;
  return spec;
}

ModelSpec lq_scalar_model() {
  ModelSpec spec;
  spec.d = 1;
  spec.m = 1;
  spec.D = 1;
  spec.C_K = 0.0;
  spec.name = "lq_scalar";
  spec.K = [](const Vec&, Vec& out) { out.setZero(); };
  spec.DK = [](const Vec&, Mat& out) { out.setZero(); };
  spec.f = [](const Mat&, int, Vec& out) { out.setZero(); };
  spec.Df = [](const Mat&, int, Mat& out) { out.setZero(); };
  spec.g = [](const Mat&, const Vec&, Vec& out) { out.setZero(); };
  spec.Dg_x = [](const Mat&, const Vec&, Mat& out) { out.setZero(); };
  spec.Dg_y = [](const Mat&, const Vec&, Mat& out) { out.setZero(); };
  spec.B = {Mat::Identity(1, 1)};
  spec.ell = [](const Mat& y, const Vec&, const Vec&) { return y.row(0).squaredNorm(); };
  spec.ell_grad_y = [](const Mat& y, const Vec&, const Vec&, Mat& out) { out = 2.0 * y; };
  spec.ell_grad_xi = [](const Mat&, const Vec&, const Vec&, Vec& out) { out.setZero(); };
  spec.ell_grad_sig = [](const Mat&, const Vec&, const Vec&, Vec& out) { out.setZero(); };
  spec.omega = [](const Vec&, Vec& out) { out.setZero(); };
  spec.Domega = [](const Vec&, Mat& out) { out.setZero(); };
  spec.gamma = [](const Vec& u) { return u.squaredNorm(); };
  spec.gamma_grad = [](const Vec& u, Vec& out) { out = 2.0 * u; };
  spec.quadratic_gamma = true;
  spec.u_lo = Vec::Constant(1, -2.0);
  spec.u_hi = Vec::Constant(1, 2.0);
  spec.validated = true;
  return spec;
}

Vec omega_mean(const ModelSpec& spec, const Mat& x) {
  const int N = static_cast<int>(x.rows());
  Vec acc = Vec::Zero(spec.d);
  if (N == 0) return acc;
  Vec w(spec.d);
  for (int j = 0; j < N; ++j) {
    spec.omega(x.row(j).transpose(), w);
    acc += w;
  }
  return acc / static_cast<double>(N);
}

double running_cost_atoms(const ModelSpec& spec, const Mat& y, const Mat& x) {
  const int N = static_cast<int>(x.rows());
  if (N == 0) {
    // Leaders-only degenerate convention: integrand at a zero follower
    // state and zero moment.
    return spec.ell(y, Vec::Zero(spec.d), Vec::Zero(spec.d));
  }
  const Vec sig = omega_mean(spec, x);
  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    double v = spec.ell(y, x.row(i).transpose(), sig);
    if (!std::isfinite(v)) {
      throw ConfigError("running cost non-finite at atom " + std::to_string(i));
    }
    acc += v;
  }
  return acc / static_cast<double>(N);
}

Vec ell_sig_mean(const ModelSpec& spec, const Mat& y, const Mat& x, const Vec& sig_bar) {
  const int N = static_cast<int>(x.rows());
  Vec acc = Vec::Zero(spec.d);
  if (N == 0) return acc;
  Vec gs(spec.d);
  for (int a = 0; a < N; ++a) {
    spec.ell_grad_sig(y, x.row(a).transpose(), sig_bar, gs);
    acc += gs;
  }
  return acc / static_cast<double>(N);
}

}  // namespace mfpmp
