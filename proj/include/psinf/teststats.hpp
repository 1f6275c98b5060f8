#pragma once

// Observed statistics computed from a released synthetic table. Every
// statistic takes the scatter matrix S* (not S* / (n - 1)).

#include <algorithm>
#include <cmath>
#include <string>

#include "psinf/error.hpp"
#include "psinf/linalg.hpp"
#include "psinf/synthesis.hpp"

namespace psinf {

struct SyntheticSummary {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  Vector mean_v;
  ScatterMatrix scatter_star;

  const Matrix& s() const { return scatter_star.entries; }
};

/// p1 x (p - p1) matrix of regression coefficients (Delta or a hypothesised Delta_0).
struct CoefficientMatrix {
  Matrix delta;
};

/// Summary from an already computed scatter matrix of an n-row sample.
inline SyntheticSummary summary_from_scatter(const Matrix& scatter_star, Eigen::Index n,
                                             Vector mean_v = {}) {
  require_square(scatter_star, "scatter matrix");
  const Eigen::Index p = scatter_star.rows();
  if (n < p + 1) {
    throw Error(ErrorCode::TooFewRows,
                "need n >= p + 1, got n = " + std::to_string(n) + ", p = " + std::to_string(p));
  }
  try {
    (void)cholesky(scatter_star);
  } catch (const Error& e) {
    throw Error(ErrorCode::SingularSample, std::string("synthetic scatter matrix is singular (") + e.what() + ")");
  }
  return SyntheticSummary{n, p, std::move(mean_v), ScatterMatrix{scatter_star, static_cast<long>(n - 1)}};
}

inline SyntheticSummary summarize(const DataMatrix& v) {
  require_enough_rows(v);
  SampleMoments m = sample_moments(v);
  return summary_from_scatter(m.scatter, v.rows(), std::move(m.mean));
}

/// log of (n - 1)^p |S*| / |Sigma_0|.
inline double log_t1_star(const SyntheticSummary& s, const SpdMatrix& sigma0) {
  if (sigma0.dim() != s.p) {
    throw Error(ErrorCode::DimensionMismatch, "sigma0 is " + std::to_string(sigma0.dim()) + "x" +
                                                  std::to_string(sigma0.dim()) + ", data have p = " +
                                                  std::to_string(s.p));
  }
  return static_cast<double>(s.p) * std::log(static_cast<double>(s.n - 1)) + logdet(s.s()) - sigma0.logdet();
}

inline double t1_star(const SyntheticSummary& s, const SpdMatrix& sigma0) {
  return std::exp(log_t1_star(s, sigma0));
}

/// |M|^{1/p} / (tr(M) / p) from a log-determinant and trace. Identically 1
/// when p == 1; capped at the AM-GM bound of 1 otherwise.
inline double sphericity_ratio(double log_det, double tr, Eigen::Index p) {
  if (p == 1) return 1.0;
  const double pd = static_cast<double>(p);
  return std::min(1.0, std::exp(log_det / pd - std::log(tr / pd)));
}

/// |S*|^{1/p} / (tr(S*) / p); scale free, in (0, 1].
inline double t2_star(const SyntheticSummary& s) {
  return sphericity_ratio(logdet(s.s()), trace(s.s()), s.p);
}

inline void require_split(Eigen::Index p, Eigen::Index p1) {
  if (p1 < 1 || p1 > p - 1) {
    throw Error(ErrorCode::BadBlockSize,
                "p1 = " + std::to_string(p1) + " must lie in [1, " + std::to_string(p - 1) + "]");
  }
}

/// Regression split needs p1 <= p - p1.
inline void require_regression_split(Eigen::Index p, Eigen::Index p1) {
  require_split(p, p1);
  if (p1 > p - p1) {
    throw Error(ErrorCode::BadBlockSize, "regression split needs p1 <= p - p1, got p1 = " +
                                             std::to_string(p1) + ", p = " + std::to_string(p));
  }
}

/// |M| / (|M_11| |M_22|) for a PD matrix split at p1, capped at the
/// Fischer bound of 1.
inline double independence_ratio(const Matrix& m, Eigen::Index p1) {
  const BlockPartition b = partition(m, p1);
  return std::min(1.0, std::exp(logdet(m) - logdet(b.b11) - logdet(b.b22)));
}

/// |(D - Delta_0) M_22 (D - Delta_0)^T| / |M_11 - M_12 M_22^{-1} M_21| with
/// D = M_12 M_22^{-1}. Split and delta0 shape are checked by the callers.
inline double regression_ratio(const Matrix& m, Eigen::Index p1, const Matrix& delta0) {
  const BlockPartition b = partition(m, p1);
  const Matrix l22 = cholesky(b.b22);
  const Matrix coef_t = solve_with_cholesky(l22, b.b21);  // D^T
  const Matrix diff = coef_t.transpose() - delta0;
  Matrix num = diff * b.b22 * diff.transpose();
  num = (0.5 * (num + num.transpose())).eval();
  Matrix schur = b.b11 - b.b12 * coef_t;
  schur = (0.5 * (schur + schur.transpose())).eval();
  const double num_det = std::max(0.0, num.determinant());
  return num_det / std::exp(logdet(schur));
}

/// |S*| / (|S*_11| |S*_22|).
inline double t3_star(const SyntheticSummary& s, Eigen::Index p1) {
  require_split(s.p, p1);
  return independence_ratio(s.s(), p1);
}

/// M_12 M_22^{-1} for a PD matrix split at p1 (Delta when M is Sigma).
inline Matrix block_regression_coefficients(const Matrix& m, Eigen::Index p1) {
  const BlockPartition b = partition(m, p1);
  return solve_with_cholesky(cholesky(b.b22), b.b21).transpose();
}

/// Plug-in estimate S*_12 S*_22^{-1}.
inline CoefficientMatrix regression_coefficients(const SyntheticSummary& s, Eigen::Index p1) {
  require_regression_split(s.p, p1);
  return CoefficientMatrix{block_regression_coefficients(s.s(), p1)};
}

/// T4* for H0: Delta = delta0. Zero when delta0 is the plug-in estimate.
inline double t4_star(const SyntheticSummary& s, Eigen::Index p1, const CoefficientMatrix& delta0) {
  require_regression_split(s.p, p1);
  if (delta0.delta.rows() != p1 || delta0.delta.cols() != s.p - p1) {
    throw Error(ErrorCode::DimensionMismatch,
                "delta0 is " + std::to_string(delta0.delta.rows()) + "x" + std::to_string(delta0.delta.cols()) +
                    ", expected " + std::to_string(p1) + "x" + std::to_string(s.p - p1));
  }
  return regression_ratio(s.s(), p1, delta0.delta);
}

}  // namespace psinf
