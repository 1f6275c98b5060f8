#pragma once

// Decisions from an observed statistic and a simulated null distribution.
//
//   generalized variance  accept iff t(alpha/2) <= T1* <= t(1 - alpha/2)
//   sphericity            reject iff T2* < t(alpha)
//   independence          reject iff T3* < t(alpha)
//   regression            reject iff T4* > t(1 - alpha)

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "psinf/error.hpp"
#include "psinf/linalg.hpp"
#include "psinf/nulldist.hpp"
#include "psinf/teststats.hpp"

namespace psinf {

inline constexpr double kDefaultAlpha = 0.05;

struct TestOutcome {
  TestKind kind = TestKind::GeneralizedVariance;
  double observed = 0.0;
  double alpha = kDefaultAlpha;
  std::vector<double> thresholds;
  bool reject = false;
  double p_value = 1.0;
  DistMeta dist_meta;
};

struct IntervalEstimate {
  double lower = 0.0;
  double upper = 0.0;
  double alpha = kDefaultAlpha;
  std::string target = "generalized variance |Sigma|";
};

/// Closed non-rejection interval [lower, upper]; infinite ends for one-sided tests.
struct AcceptanceRegion {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lower && x <= upper; }

  std::vector<double> thresholds() const {
    std::vector<double> t;
    if (std::isfinite(lower)) t.push_back(lower);
    if (std::isfinite(upper)) t.push_back(upper);
    return t;
  }
};

/// Region for any alpha in [0, 1]; alpha = 0 spans the whole simulated range.
inline AcceptanceRegion acceptance_region(const EmpiricalNullDistribution& d, double alpha) {
  require_probability(alpha);
  switch (d.meta.kind) {
    case TestKind::GeneralizedVariance:
      return {quantile(d, alpha / 2.0), quantile(d, 1.0 - alpha / 2.0)};
    case TestKind::Sphericity:
    case TestKind::Independence:
      return {quantile(d, alpha), std::numeric_limits<double>::infinity()};
    case TestKind::Regression:
      return {-std::numeric_limits<double>::infinity(), quantile(d, 1.0 - alpha)};
  }
  return {};
}

/// p-value in the direction the test rejects; two-sided tests double the
/// smaller tail and cap at 1.
inline double directional_p_value(const EmpiricalNullDistribution& d, double observed) {
  switch (d.meta.kind) {
    case TestKind::GeneralizedVariance:
      return std::min(1.0, 2.0 * std::min(mc_p_value(d, observed, Tail::Lower), mc_p_value(d, observed, Tail::Upper)));
    case TestKind::Sphericity:
    case TestKind::Independence:
      return mc_p_value(d, observed, Tail::Lower);
    case TestKind::Regression:
      return mc_p_value(d, observed, Tail::Upper);
  }
  return 1.0;
}

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::BadProbability, "alpha = " + std::to_string(alpha) + " must lie in (0, 1)");
}

/// A null distribution simulated for other (kind, n, p, p1) would silently
/// break exactness, so any difference is an error.
inline void require_matching_meta(const EmpiricalNullDistribution& d, TestKind kind, Eigen::Index n,
                                  Eigen::Index p, std::optional<long> part) {
  const DistMeta& m = d.meta;
  auto describe = [](TestKind k, long nn, long pp, std::optional<long> p1) {
    return std::string(short_name(k)) + "(n=" + std::to_string(nn) + ", p=" + std::to_string(pp) +
           ", p1=" + (p1 ? std::to_string(*p1) : std::string("none")) + ")";
  };
  if (m.kind != kind || m.nsample != n || m.pvariates != p || m.part != part) {
    throw Error(ErrorCode::MetadataMismatch, "null distribution is " + describe(m.kind, m.nsample, m.pvariates, m.part) +
                                                 " but the test needs " + describe(kind, n, p, part));
  }
  if (d.values.empty()) throw Error(ErrorCode::EmptyDistribution, "null distribution has no values");
}

inline TestOutcome decide(const EmpiricalNullDistribution& d, double observed, double alpha) {
  const AcceptanceRegion region = acceptance_region(d, alpha);
  return TestOutcome{d.meta.kind,           observed, alpha, region.thresholds(), !region.contains(observed),
                     directional_p_value(d, observed), d.meta};
}

/// Two-sided test of H0: Sigma = sigma0 through T1*; the dual of the interval below.
inline TestOutcome gv_test(const SyntheticSummary& s, const SpdMatrix& sigma0, double alpha,
                           const EmpiricalNullDistribution& d) {
  require_alpha(alpha);
  require_matching_meta(d, TestKind::GeneralizedVariance, s.n, s.p, std::nullopt);
  return decide(d, t1_star(s, sigma0), alpha);
}

/// ((n-1)^p |S*| / t(1 - alpha/2), (n-1)^p |S*| / t(alpha/2)).
inline IntervalEstimate gv_confidence_interval(const SyntheticSummary& s, double alpha,
                                               const EmpiricalNullDistribution& d) {
  require_alpha(alpha);
  require_matching_meta(d, TestKind::GeneralizedVariance, s.n, s.p, std::nullopt);
  const double log_scaled = static_cast<double>(s.p) * std::log(static_cast<double>(s.n - 1)) + logdet(s.s());
  const AcceptanceRegion region = acceptance_region(d, alpha);
  return IntervalEstimate{std::exp(log_scaled - std::log(region.upper)),
                          std::exp(log_scaled - std::log(region.lower)), alpha};
}

inline TestOutcome sphericity_test(const SyntheticSummary& s, double alpha, const EmpiricalNullDistribution& d) {
  require_alpha(alpha);
  require_matching_meta(d, TestKind::Sphericity, s.n, s.p, std::nullopt);
  return decide(d, t2_star(s), alpha);
}

inline TestOutcome independence_test(const SyntheticSummary& s, long part, double alpha,
                                     const EmpiricalNullDistribution& d) {
  require_alpha(alpha);
  require_split(s.p, part);
  require_matching_meta(d, TestKind::Independence, s.n, s.p, part);
  return decide(d, t3_star(s, part), alpha);
}

/// Rejects in the upper tail: T4* > t(1 - alpha).
inline TestOutcome regression_test(const SyntheticSummary& s, long part, const CoefficientMatrix& delta0,
                                   double alpha, const EmpiricalNullDistribution& d) {
  require_alpha(alpha);
  require_regression_split(s.p, part);
  require_matching_meta(d, TestKind::Regression, s.n, s.p, part);
  return decide(d, t4_star(s, part, delta0), alpha);
}

}  // namespace psinf
