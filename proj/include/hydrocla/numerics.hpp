#pragma once

#include <Eigen/Dense>

namespace hydrocla {

/// Dense storage for the loop Jacobians, incidence matrices and sensitivity
/// matrices. Both benchmark networks stay below 100 unknowns.
using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

struct LinearSolveOptions {
  /// A pivot is rejected when |pivot| < pivot_tolerance * max row norm.
  double pivot_tolerance = 1e-12;
  /// Columns are dropped from the rank when R_ii < rank_tolerance * |R_00|.
  double rank_tolerance = 1e-10;
};

/// Solves a*x = b by LU with partial (row) pivoting.
/// Throws SingularMatrix when a pivot falls below the tolerance.
DenseVector solve_dense_linear(const DenseMatrix& a, const DenseVector& b,
                               const LinearSolveOptions& opts = {});

/// Same, for several right-hand sides at once (one factorisation).
DenseMatrix solve_dense_linear(const DenseMatrix& a, const DenseMatrix& b,
                               const LinearSolveOptions& opts = {});

/// Minimises ||a*x - b||_2 for rows(a) >= cols(a) using column-pivoted
/// Householder QR. Throws RankDeficient when the effective rank is short.
DenseVector solve_linear_least_squares(const DenseMatrix& a, const DenseVector& b,
                                       const LinearSolveOptions& opts = {});

bool all_finite(const DenseMatrix& m);

}  // namespace hydrocla
