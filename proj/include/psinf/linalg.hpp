#pragma once

// Small dense kernel for the symmetric positive-definite matrices that show up
// in scatter/covariance work: Cholesky, log-determinants, SPD solves and the
// 2x2 block split used by the independence and regression statistics.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "psinf/error.hpp"

namespace psinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// n x p table, one observation per row.
using DataMatrix = Eigen::MatrixXd;

inline constexpr double kSpdTolerance = 1e-12;  // relative to the largest diagonal entry
inline constexpr double kSymTolerance = 1e-10;  // relative to the largest |entry|

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " must be a non-empty square matrix, got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline bool is_symmetric(const Matrix& m, double rel_tol = kSymTolerance) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
  return true;
}

/// Lower-triangular L with m = L L^T. Only the lower triangle of m is read
/// after the symmetry check.
inline Matrix cholesky(const Matrix& m) {
  require_square(m, "cholesky input");
  if (!is_symmetric(m)) throw Error(ErrorCode::NotPositiveDefinite, "matrix is not symmetric");
  const Eigen::Index p = m.rows();
  const double max_diag = m.diagonal().maxCoeff();
  if (!(max_diag > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "non-positive diagonal");
  const double tol = kSpdTolerance * max_diag;

  Matrix l = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double d = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tol)) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "Cholesky pivot " + std::to_string(j) + " is " + std::to_string(d));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

inline double logdet_from_cholesky(const Matrix& l) {
  return 2.0 * l.diagonal().array().log().sum();
}

/// Symmetric positive-definite matrix with its Cholesky factor cached.
/// Construction fails with NotPositiveDefinite if the factorization does.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix entries) : entries_(std::move(entries)), chol_(cholesky(entries_)) {
    // Store an exactly symmetric copy.
    entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
  }

  static SpdMatrix identity(Eigen::Index p) { return SpdMatrix(Matrix::Identity(p, p)); }

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }
  const Matrix& chol() const { return chol_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  double logdet() const { return logdet_from_cholesky(chol_); }
  double det() const { return std::exp(logdet()); }

 private:
  Matrix entries_;
  Matrix chol_;
};

/// Sum of centered outer products. dof follows the n-1 convention.
struct ScatterMatrix {
  Matrix entries;
  long dof = 0;

  Eigen::Index dim() const { return entries.rows(); }
};

inline double logdet(const SpdMatrix& m) { return m.logdet(); }
inline double logdet(const Matrix& m) { return logdet_from_cholesky(cholesky(m)); }
inline double logdet(const ScatterMatrix& m) { return logdet(m.entries); }

inline double trace(const Matrix& m) {
  require_square(m, "trace input");
  return m.trace();
}

/// 2x2 block split of a matrix. b21 is the transpose of b12 whenever the
/// source is symmetric and nrows == ncols.
struct BlockPartition {
  Matrix b11, b12, b21, b22;

  Eigen::Index p1() const { return b11.rows(); }

  Matrix reassemble() const {
    Matrix m(b11.rows() + b21.rows(), b11.cols() + b12.cols());
    m << b11, b12, b21, b22;
    return m;
  }
};

inline BlockPartition partition(const Matrix& m, Eigen::Index nrows, Eigen::Index ncols) {
  require_square(m, "partition input");
  const Eigen::Index p = m.rows();
  if (nrows < 1 || nrows > p - 1 || ncols < 1 || ncols > p - 1) {
    throw Error(ErrorCode::BadBlockSize, "block split (" + std::to_string(nrows) + ", " +
                                             std::to_string(ncols) + ") invalid for p = " +
                                             std::to_string(p));
  }
  const Eigen::Index r2 = p - nrows;
  const Eigen::Index c2 = p - ncols;
  return BlockPartition{m.topLeftCorner(nrows, ncols), m.topRightCorner(nrows, c2),
                        m.bottomLeftCorner(r2, ncols), m.bottomRightCorner(r2, c2)};
}

inline BlockPartition partition(const Matrix& m, Eigen::Index p1) { return partition(m, p1, p1); }

/// x with L L^T x = b, by forward then back substitution on a known factor.
inline Matrix solve_with_cholesky(const Matrix& l, const Matrix& b) {
  if (b.rows() != l.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "solve: right-hand side has " +
                                                  std::to_string(b.rows()) + " rows, expected " +
                                                  std::to_string(l.rows()));
  }
  const auto lower = l.triangularView<Eigen::Lower>();
  Matrix y = lower.solve(b);
  return lower.transpose().solve(y);
}

inline Matrix solve_spd(const SpdMatrix& a, const Matrix& b) { return solve_with_cholesky(a.chol(), b); }
inline Matrix solve_spd(const Matrix& a, const Matrix& b) { return solve_with_cholesky(cholesky(a), b); }

}  // namespace psinf
