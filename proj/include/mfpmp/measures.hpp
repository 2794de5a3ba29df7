#pragma once

#include <vector>

#include "mfpmp/model.hpp"

namespace mfpmp {

// Uniform-weight empirical measure: one atom per row, weight 1/N.
struct EmpiricalMeasure {
  Mat atoms;  // N x n
  int size() const { return static_cast<int>(atoms.rows()); }
  int dim() const { return static_cast<int>(atoms.cols()); }
};

// Phase-space empirical measure on state x adjoint pairs: atom rows are
// (x_i, r_i) in R^{2d}, weight 1/N.
struct PhaseMeasure {
  Mat atoms;  // N x 2d
  int d = 0;
  int size() const { return static_cast<int>(atoms.rows()); }
};

enum class Marginal { First, Second };

// Phase-space lift: atoms (x_i, N*p_i), weight 1/N. The rescaling
// r = N*p makes the lift of a duplicated population (N -> 2N, p -> p/2)
// reproduce the same atoms.
PhaseMeasure lift(const Mat& x, const Mat& p);

// Coordinate projection; weights preserved, atom order preserved.
EmpiricalMeasure marginal(const PhaseMeasure& nu, Marginal which);

// Exact W_p between equal-size uniform empiricals, p in {1, 2}.
// Dimension 1: sort-and-match. Dimension >= 2: exact assignment
// (shortest augmenting path) on the cost matrix |x_i - y_j|^p.
// Unequal atom counts are out of scope and throw.
double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p);

// Each atom repeated `factor` times consecutively; represents the same
// measure. Lets equal-size transport compare N- and 2N-atom populations.
EmpiricalMeasure replicate_atoms(const EmpiricalMeasure& mu, int factor);

// Exact solver for the square linear assignment problem; returns the
// minimizing column for each row. Exposed for the oracle tests.
std::vector<int> solve_assignment(const Mat& cost);

}  // namespace mfpmp
