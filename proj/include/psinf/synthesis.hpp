#pragma once

// Plug-in sampling: estimate the normal model from the confidential table and
// draw synthetic rows from N(xbar, S / (n - 1)).

#include <string>
#include <vector>

#include "psinf/error.hpp"
#include "psinf/linalg.hpp"
#include "psinf/random.hpp"

namespace psinf {

struct SampleMoments {
  Vector mean;
  Matrix scatter;  // sum_i (x_i - xbar)(x_i - xbar)^T
};

inline SampleMoments sample_moments(const DataMatrix& x) {
  if (!x.allFinite()) throw Error(ErrorCode::ParseError, "data contain non-finite values");
  SampleMoments m;
  m.mean = x.colwise().mean().transpose();
  const DataMatrix centered = x.rowwise() - m.mean.transpose();
  m.scatter = centered.transpose() * centered;
  m.scatter = (0.5 * (m.scatter + m.scatter.transpose())).eval();
  return m;
}

inline void require_enough_rows(const DataMatrix& x) {
  if (x.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "data have no columns");
  if (x.rows() < x.cols() + 1) {
    throw Error(ErrorCode::TooFewRows, "need n >= p + 1 rows, got n = " + std::to_string(x.rows()) +
                                           ", p = " + std::to_string(x.cols()));
  }
}

struct FittedNormalModel {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  Vector mean;
  SpdMatrix cov;  // S / (n - 1)
};

inline FittedNormalModel fit(const DataMatrix& x) {
  require_enough_rows(x);
  SampleMoments m = sample_moments(x);
  const double divisor = static_cast<double>(x.rows() - 1);
  try {
    return FittedNormalModel{x.rows(), x.cols(), std::move(m.mean), SpdMatrix(m.scatter / divisor)};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    throw Error(ErrorCode::SingularSample, std::string("sample covariance is singular (") + e.what() + ")");
  }
}

/// n_imp synthetic rows drawn i.i.d. from the fitted model.
inline DataMatrix sim_synth_data(const FittedNormalModel& model, Eigen::Index n_imp, Rng& rng) {
  return draw_mvn(rng, model.mean, model.cov, n_imp);
}

inline DataMatrix sim_synth_data(const FittedNormalModel& model, Rng& rng) {
  return sim_synth_data(model, model.n, rng);
}

/// M independent replicates; replicate k is drawn on rng.substream(k).
inline std::vector<DataMatrix> sim_multiple(const FittedNormalModel& model, Eigen::Index n_imp, int m,
                                            const Rng& rng) {
  if (m < 1) throw Error(ErrorCode::Usage, "number of replicates must be >= 1");
  std::vector<DataMatrix> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    Rng stream = rng.substream(static_cast<std::uint64_t>(k));
    out.push_back(sim_synth_data(model, n_imp, stream));
  }
  return out;
}

}  // namespace psinf
