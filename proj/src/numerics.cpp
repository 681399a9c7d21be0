#include "hydrocla/numerics.hpp"

#include <cmath>

#include "hydrocla/errors.hpp"

namespace hydrocla {

bool all_finite(const DenseMatrix& m) { return m.allFinite(); }

namespace {

Eigen::PartialPivLU<DenseMatrix> checked_lu(const DenseMatrix& a, const LinearSolveOptions& opts) {
  const double max_row_norm = a.rowwise().lpNorm<Eigen::Infinity>().maxCoeff();
  if (!(max_row_norm > 0.0)) throw SingularMatrix("solve_dense_linear: zero matrix");

  Eigen::PartialPivLU<DenseMatrix> lu(a);
  const auto& packed = lu.matrixLU();
  const double threshold = opts.pivot_tolerance * max_row_norm;
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    if (!(std::abs(packed(i, i)) >= threshold)) {
      throw SingularMatrix("solve_dense_linear: pivot " + std::to_string(i) +
                           " below tolerance");
    }
  }
  return lu;
}

}  // namespace

DenseVector solve_dense_linear(const DenseMatrix& a, const DenseVector& b,
                               const LinearSolveOptions& opts) {
  if (a.rows() != a.cols()) throw Error("solve_dense_linear: matrix is not square");
  if (b.size() != a.rows()) throw Error("solve_dense_linear: right-hand side size mismatch");
  if (a.rows() == 0) return DenseVector();
  return checked_lu(a, opts).solve(b);
}

DenseMatrix solve_dense_linear(const DenseMatrix& a, const DenseMatrix& b,
                               const LinearSolveOptions& opts) {
  if (a.rows() != a.cols()) throw Error("solve_dense_linear: matrix is not square");
  if (b.rows() != a.rows()) throw Error("solve_dense_linear: right-hand side size mismatch");
  if (a.rows() == 0) return DenseMatrix(0, b.cols());
  return checked_lu(a, opts).solve(b);
}

DenseVector solve_linear_least_squares(const DenseMatrix& a, const DenseVector& b,
                                       const LinearSolveOptions& opts) {
  if (a.rows() < a.cols()) throw Error("solve_linear_least_squares: fewer rows than columns");
  if (b.size() != a.rows()) throw Error("solve_linear_least_squares: right-hand side size mismatch");
  if (a.cols() == 0) return DenseVector();

  Eigen::ColPivHouseholderQR<DenseMatrix> qr(a);
  qr.setThreshold(opts.rank_tolerance);
  const auto rank = static_cast<std::size_t>(qr.rank());
  if (rank < static_cast<std::size_t>(a.cols())) {
    throw RankDeficient(rank, static_cast<std::size_t>(a.cols()));
  }
  return qr.solve(b);
}

}  // namespace hydrocla
