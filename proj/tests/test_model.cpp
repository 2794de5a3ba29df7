#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfpmp/errors.hpp"
#include "mfpmp/model.hpp"
#include "mfpmp/rng.hpp"

using namespace mfpmp;

namespace {

ModelSpec phi_one_model(int m, int s) {
  // beta = 0 freezes the influence function at amp = 1 everywhere.
  return cucker_smale_model(CuckerSmaleParams{1.0, 0.0, 1.0}, m, s);
}

}  // namespace

TEST_CASE("factory presets pass validation") {
  {
    ModelSpec spec = cucker_smale_model(CuckerSmaleParams{1.0, 0.25, 1.0}, 2, 2);
    ValidationReport report = validate_model(spec, 2.0, 64, 7);
    for (const auto& c : report.checks) {
      INFO(c.name, " worst error ", c.worst_error, " ", c.detail);
      CHECK(c.pass);
    }
    CHECK(report.ok());
    CHECK(spec.validated);
  }
  {
    ModelSpec spec = identity_debug_model(2, 1, 0.5, 1.0, 1.0);
    CHECK(validate_model(spec, 2.0, 64, 11).ok());
  }
  {
    ModelSpec spec = lq_scalar_model();
    CHECK(validate_model(spec, 2.0, 64, 13).ok());
  }
  {
    ModelSpec spec = constant_phi_follower_model(1.0, 1);
    CHECK(validate_model(spec, 2.0, 64, 17).ok());
  }
}

TEST_CASE("validation rejects a non-odd kernel") {
  ModelSpec spec = identity_debug_model(2, 1, 0.5, 1.0, 1.0);
  spec.K = [](const Vec& z, Vec& out) { out = z + Vec::Constant(z.size(), 0.1); };
  ValidationReport report = validate_model(spec, 2.0, 64, 7);
  bool odd_failed = false;
  for (const auto& c : report.checks) {
    if (c.name == "kernel_odd") odd_failed = !c.pass;
  }
  CHECK(odd_failed);
  CHECK(!report.ok());
  CHECK(!spec.validated);
}

TEST_CASE("validation rejects a wrong derivative") {
  ModelSpec spec = identity_debug_model(2, 1, 0.5, 1.0, 1.0);
  spec.DK = [](const Vec&, Mat& out) {
    out.setZero();
    out.diagonal().setConstant(0.7);  // inconsistent with K = 0.5 z
  };
  ValidationReport report = validate_model(spec, 2.0, 64, 7);
  bool fd_failed = false;
  for (const auto& c : report.checks) {
    if (c.name == "derivatives_match_fd") fd_failed = !c.pass;
  }
  CHECK(fd_failed);
}

TEST_CASE("validation rejects a kernel exceeding the declared growth bound") {
  ModelSpec spec = identity_debug_model(1, 1, 1.0, 1.0, 1.0);
  spec.C_K = 0.1;  // claim a bound the kernel K = z violates
  ValidationReport report = validate_model(spec, 2.0, 64, 7);
  bool growth_failed = false;
  for (const auto& c : report.checks) {
    if (c.name == "kernel_sublinear") growth_failed = !c.pass;
  }
  CHECK(growth_failed);
}

TEST_CASE("factory rejects bad parameters") {
  CHECK_THROWS_AS(cucker_smale_model(CuckerSmaleParams{0.0, 0.25, 1.0}, 1, 1), ConfigError);
  CHECK_THROWS_AS(cucker_smale_model(CuckerSmaleParams{1.0, -0.5, 1.0}, 1, 1), ConfigError);
  CHECK_THROWS_AS(cucker_smale_model(CuckerSmaleParams{1.0, 0.25, 1.0}, 0, 1), ConfigError);
  CHECK_THROWS_AS(cucker_smale_model(CuckerSmaleParams{1.0, 0.25, 1.0}, 1, 0), ConfigError);
  CHECK_THROWS_AS(identity_debug_model(0, 1, 1.0, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(identity_debug_model(1, 1, 1.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("running cost: frozen single-follower value") {
  // One leader at rest position with unit velocity, one follower with
  // opposite unit velocity: the hand-computed integrand value is 4.
  ModelSpec spec = phi_one_model(1, 1);
  Mat y(1, 2), x(1, 2);
  y << 0.0, 1.0;
  x << 0.0, -1.0;
  CHECK(running_cost_atoms(spec, y, x) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("running cost: frozen two-follower value") {
  // Leader velocity 1; follower velocities 0 and 2. Hand evaluation of
  // the per-atom integrand gives 0 and 4, mean 2.
  ModelSpec spec = phi_one_model(1, 1);
  Mat y(1, 2), x(2, 2);
  y << 0.0, 1.0;
  x << 0.0, 0.0,
       0.0, 2.0;
  CHECK(running_cost_atoms(spec, y, x) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("running cost vanishes at consensus") {
  ModelSpec spec = cucker_smale_model(CuckerSmaleParams{1.0, 0.25, 1.0}, 2, 2);
  Mat y(2, 4), x(3, 4);
  y << 0.0, 1.0, 0.3, -0.2,
       2.0, -1.0, 0.3, -0.2;
  x << 0.5, 0.5, 0.3, -0.2,
       -1.0, 2.0, 0.3, -0.2,
       0.1, 0.2, 0.3, -0.2;
  CHECK(std::abs(running_cost_atoms(spec, y, x)) <= 1e-14);
}

TEST_CASE("running cost equals four times the pooled velocity variance") {
  // Independent oracle: the integrand averages to
  // 4 * (second moment - squared mean) of the half-leader half-follower
  // velocity mixture, computed here directly from the samples.
  ModelSpec spec = cucker_smale_model(CuckerSmaleParams{1.0, 0.25, 1.0}, 3, 2);
  Rng rng(99);
  for (int rep = 0; rep < 10; ++rep) {
    const int m = 3, N = 5, s = 2;
    Mat y(m, 2 * s), x(N, 2 * s);
    for (int k = 0; k < m; ++k)
      for (int c = 0; c < 2 * s; ++c) y(k, c) = rng.uniform(-2.0, 2.0);
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < 2 * s; ++c) x(i, c) = rng.uniform(-2.0, 2.0);
    Vec mean = Vec::Zero(s);
    double second = 0.0;
    for (int k = 0; k < m; ++k) {
      mean += 0.5 * y.row(k).tail(s).transpose() / m;
      second += 0.5 * y.row(k).tail(s).squaredNorm() / m;
    }
    for (int i = 0; i < N; ++i) {
      mean += 0.5 * x.row(i).tail(s).transpose() / N;
      second += 0.5 * x.row(i).tail(s).squaredNorm() / N;
    }
    const double oracle = 4.0 * (second - mean.squaredNorm());
    CHECK(running_cost_atoms(spec, y, x) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("leaders-only running cost uses the zero-state convention") {
  ModelSpec spec = phi_one_model(1, 1);
  Mat y(1, 2);
  y << 0.0, 1.0;
  const Mat empty(0, 2);
  // ell(y, 0, 0) = 2*1 + 0 - (1+0)*(1+0) = 1.
  CHECK(running_cost_atoms(spec, y, empty) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("omega mean extracts the mean follower velocity") {
  ModelSpec spec = phi_one_model(1, 1);
  Mat x(2, 2);
  x << 5.0, 1.0,
       -3.0, 2.0;
  const Vec sig = omega_mean(spec, x);
  CHECK(sig[0] == doctest::Approx(0.0));
  CHECK(sig[1] == doctest::Approx(1.5));
}

TEST_CASE("kernel growth respects the declared constant") {
  ModelSpec spec = cucker_smale_model(CuckerSmaleParams{0.8, 0.6, 1.7}, 1, 2);
  Rng rng(5);
  Vec kz(spec.d);
  for (int rep = 0; rep < 200; ++rep) {
    Vec z(spec.d);
    for (int c = 0; c < spec.d; ++c) z[c] = rng.uniform(-10.0, 10.0);
    spec.K(z, kz);
    CHECK(kz.norm() <= spec.C_K * (1.0 + z.norm()) + 1e-12);
  }
}

TEST_CASE("lq preset wiring") {
  ModelSpec spec = lq_scalar_model();
  CHECK(spec.d == 1);
  CHECK(spec.m == 1);
  CHECK(spec.D == 1);
  Mat y(1, 1);
  y << 3.0;
  CHECK(spec.ell(y, Vec::Zero(1), Vec::Zero(1)) == doctest::Approx(9.0));
  Vec u(1);
  u << 0.25;
  CHECK(spec.gamma(u) == doctest::Approx(0.0625));
  CHECK(spec.u_lo[0] == doctest::Approx(-2.0));
  CHECK(spec.u_hi[0] == doctest::Approx(2.0));
}
