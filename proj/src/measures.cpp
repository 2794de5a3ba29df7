#include "mfpmp/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfpmp/errors.hpp"

namespace mfpmp {

PhaseMeasure lift(const Mat& x, const Mat& p) {
  if (x.rows() != p.rows() || x.cols() != p.cols()) {
    throw ConfigError("lift: state and adjoint blocks must have equal shape");
  }
  const int N = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  PhaseMeasure nu;
  nu.d = d;
  nu.atoms = Mat(N, 2 * d);
  nu.atoms.leftCols(d) = x;
  nu.atoms.rightCols(d) = static_cast<double>(N) * p;
  return nu;
}

EmpiricalMeasure marginal(const PhaseMeasure& nu, Marginal which) {
  EmpiricalMeasure mu;
  mu.atoms = (which == Marginal::First) ? nu.atoms.leftCols(nu.d)
                                        : nu.atoms.rightCols(nu.d);
  return mu;
}

std::vector<int> solve_assignment(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw ConfigError("solve_assignment: cost matrix must be square");
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // Shortest augmenting path with dual potentials; p[j] is the row
  // currently matched to column j, index 0 is the virtual root.
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<size_t>(n) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = p[static_cast<size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                           v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[static_cast<size_t>(j)] > 0) {
      assignment[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
    }
  }
  return assignment;
}

double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p) {
  if (p != 1 && p != 2) throw ConfigError("wasserstein: order must be 1 or 2");
  if (mu.size() != nu.size()) {
    throw ConfigError("wasserstein: atom counts differ (" + std::to_string(mu.size()) +
                      " vs " + std::to_string(nu.size()) +
                      "); replicate_atoms to a common count first");
  }
  if (mu.dim() != nu.dim()) throw ConfigError("wasserstein: dimensions differ");
  const int N = mu.size();
  if (N == 0) return 0.0;
  double total = 0.0;
  if (mu.dim() == 1) {
    std::vector<double> a(static_cast<size_t>(N)), b(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
      a[static_cast<size_t>(i)] = mu.atoms(i, 0);
      b[static_cast<size_t>(i)] = nu.atoms(i, 0);
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (int i = 0; i < N; ++i) {
      const double gap = std::abs(a[static_cast<size_t>(i)] - b[static_cast<size_t>(i)]);
      total += (p == 1) ? gap : gap * gap;
    }
  } else {
    Mat cost(N, N);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        const double gap = (mu.atoms.row(i) - nu.atoms.row(j)).norm();
        cost(i, j) = (p == 1) ? gap : gap * gap;
      }
    }
    const std::vector<int> a = solve_assignment(cost);
    for (int i = 0; i < N; ++i) total += cost(i, a[static_cast<size_t>(i)]);
  }
  const double mean = total / static_cast<double>(N);
  return (p == 1) ? mean : std::sqrt(mean);
}

EmpiricalMeasure replicate_atoms(const EmpiricalMeasure& mu, int factor) {
  if (factor < 1) throw ConfigError("replicate_atoms: factor must be >= 1");
  EmpiricalMeasure out;
  out.atoms = Mat(static_cast<long>(mu.size()) * factor, mu.dim());
  for (int i = 0; i < mu.size(); ++i) {
    for (int c = 0; c < factor; ++c) out.atoms.row(i * factor + c) = mu.atoms.row(i);
  }
  return out;
}

}  // namespace mfpmp
