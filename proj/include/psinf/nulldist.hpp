#pragma once

// Monte Carlo simulators for the null laws of the four statistics, plus the
// sorted-sample container used for quantiles and p-values.
//
// Every simulator shards its iterations into kChunkSize chunks; chunk c draws
// from rng.substream(c). The sorted output therefore depends only on
// (seed, stream_id, iterations), never on the number of workers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psinf/error.hpp"
#include "psinf/linalg.hpp"
#include "psinf/parallel.hpp"
#include "psinf/random.hpp"
#include "psinf/teststats.hpp"

namespace psinf {

enum class TestKind { GeneralizedVariance, Sphericity, Independence, Regression };

inline constexpr std::string_view short_name(TestKind k) {
  switch (k) {
    case TestKind::GeneralizedVariance: return "gv";
    case TestKind::Sphericity: return "sph";
    case TestKind::Independence: return "ind";
    case TestKind::Regression: return "cano";
  }
  return "?";
}

inline constexpr std::string_view long_name(TestKind k) {
  switch (k) {
    case TestKind::GeneralizedVariance: return "GeneralizedVariance";
    case TestKind::Sphericity: return "Sphericity";
    case TestKind::Independence: return "Independence";
    case TestKind::Regression: return "Regression";
  }
  return "?";
}

inline TestKind parse_test_kind(std::string_view s) {
  for (TestKind k : {TestKind::GeneralizedVariance, TestKind::Sphericity, TestKind::Independence,
                     TestKind::Regression}) {
    if (s == short_name(k) || s == long_name(k)) return k;
  }
  if (s == "reg" || s == "regression") return TestKind::Regression;
  throw Error(ErrorCode::Usage, "unknown test kind '" + std::string(s) + "' (expected gv, sph, ind or cano)");
}

inline constexpr bool needs_part(TestKind k) {
  return k == TestKind::Independence || k == TestKind::Regression;
}

struct DistMeta {
  TestKind kind = TestKind::GeneralizedVariance;
  long nsample = 0;
  long pvariates = 0;
  std::optional<long> part;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;

  bool operator==(const DistMeta&) const = default;
};

/// Checks (n, p, part) against the constraints of the given kind.
inline void validate_null_params(TestKind kind, long n, long p, std::optional<long> part) {
  if (p < 1) throw Error(ErrorCode::DimensionMismatch, "pvariates must be >= 1");
  if (n < p + 1) {
    throw Error(ErrorCode::BadDof, "need nsample >= pvariates + 1, got n = " + std::to_string(n) +
                                       ", p = " + std::to_string(p));
  }
  if (needs_part(kind)) {
    if (!part) throw Error(ErrorCode::Usage, std::string(long_name(kind)) + " requires a partition size p1");
    if (kind == TestKind::Regression) {
      require_regression_split(p, *part);
    } else {
      require_split(p, *part);
    }
  } else if (part) {
    throw Error(ErrorCode::Usage, std::string(long_name(kind)) + " takes no partition size");
  }
}

struct EmpiricalNullDistribution {
  DistMeta meta;
  std::vector<double> values;  // ascending

  std::size_t size() const { return values.size(); }

  /// Throws if values are unsorted, non-finite or out of the kind's range.
  void validate() const {
    validate_null_params(meta.kind, meta.nsample, meta.pvariates, meta.part);
    if (values.empty()) throw Error(ErrorCode::EmptyDistribution, "distribution has no values");
    if (!std::is_sorted(values.begin(), values.end()))
      throw Error(ErrorCode::ParseError, "distribution values are not sorted");
    const bool bounded = meta.kind == TestKind::Sphericity || meta.kind == TestKind::Independence;
    for (double v : values) {
      if (!std::isfinite(v)) throw Error(ErrorCode::ParseError, "non-finite distribution value");
      if (meta.kind == TestKind::Regression ? v < 0.0 : v <= 0.0)
        throw Error(ErrorCode::ParseError, "distribution value out of range");
      if (bounded && v > 1.0 + 1e-12) throw Error(ErrorCode::ParseError, "distribution value above 1");
    }
  }
};

/// Omega_2 ~ W_p(n-1, Omega_1 / (n-1)) with Omega_1 ~ W_p(n-1, I_p) drawn first.
/// Omega_1 = A A^T from Bartlett, so A is already its Cholesky factor.
inline Matrix draw_conditional_wishart(Rng& rng, long n, long p) {
  Matrix a = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_square(static_cast<double>(n - 1 - i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Matrix scale_chol = a / std::sqrt(static_cast<double>(n - 1));
  return draw_wishart_factor(rng, n - 1, scale_chol);
}

/// One draw of prod_j A_j * prod_j B_j, A_j, B_j ~ chi2(n - j), j = 1..p.
inline double draw_gv_value(Rng& rng, long n, long p) {
  double log_value = 0.0;
  for (int pass = 0; pass < 2; ++pass)
    for (long j = 1; j <= p; ++j) log_value += std::log(rng.chi_square(static_cast<double>(n - j)));
  return std::exp(log_value);
}

/// One draw of |W1 W2|^{1/p} / (tr(W1 W2) / p), W1 ~ W_p(n-1, I/(n-1)), W2 ~ W_p(n-1, I).
inline double draw_sph_value(Rng& rng, long n, long p) {
  const Matrix identity = Matrix::Identity(p, p);
  const Matrix w1 = draw_wishart_factor(rng, n - 1, identity / std::sqrt(static_cast<double>(n - 1)));
  const Matrix w2 = draw_wishart_factor(rng, n - 1, identity);
  const double tr = w1.cwiseProduct(w2).sum();  // tr(W1 W2) for symmetric factors
  return sphericity_ratio(logdet(w1) + logdet(w2), tr, p);
}

inline double draw_ind_value(Rng& rng, long n, long p, long p1) {
  return independence_ratio(draw_conditional_wishart(rng, n, p), p1);
}

inline double draw_cano_value(Rng& rng, long n, long p, long p1) {
  return regression_ratio(draw_conditional_wishart(rng, n, p), p1, Matrix::Zero(p1, p - p1));
}

inline EmpiricalNullDistribution simulate_null(TestKind kind, long n, long p, std::optional<long> part,
                                               std::size_t iterations, const Rng& rng, unsigned workers = 1) {
  validate_null_params(kind, n, p, part);
  if (iterations < 1) throw Error(ErrorCode::Usage, "iterations must be >= 1");
  const long p1 = part.value_or(0);

  std::vector<double> values(iterations);
  for_each_chunk(iterations, workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Rng stream = rng.substream(chunk);
    for (std::size_t i = begin; i < end; ++i) {
      switch (kind) {
        case TestKind::GeneralizedVariance: values[i] = draw_gv_value(stream, n, p); break;
        case TestKind::Sphericity: values[i] = draw_sph_value(stream, n, p); break;
        case TestKind::Independence: values[i] = draw_ind_value(stream, n, p, p1); break;
        case TestKind::Regression: values[i] = draw_cano_value(stream, n, p, p1); break;
      }
    }
  });
  std::sort(values.begin(), values.end());
  return EmpiricalNullDistribution{DistMeta{kind, n, p, part, iterations, rng.seed()}, std::move(values)};
}

inline constexpr std::size_t kDefaultIterations = 10000;

inline EmpiricalNullDistribution gv_dist(long nsample, long pvariates, std::size_t iterations, const Rng& rng,
                                         unsigned workers = 1) {
  return simulate_null(TestKind::GeneralizedVariance, nsample, pvariates, std::nullopt, iterations, rng, workers);
}

inline EmpiricalNullDistribution sph_dist(long nsample, long pvariates, std::size_t iterations, const Rng& rng,
                                          unsigned workers = 1) {
  return simulate_null(TestKind::Sphericity, nsample, pvariates, std::nullopt, iterations, rng, workers);
}

inline EmpiricalNullDistribution ind_dist(long part, long nsample, long pvariates, std::size_t iterations,
                                          const Rng& rng, unsigned workers = 1) {
  return simulate_null(TestKind::Independence, nsample, pvariates, part, iterations, rng, workers);
}

/// Null law of the regression statistic (published elsewhere as both
/// canodist and Regdist).
inline EmpiricalNullDistribution cano_dist(long part, long nsample, long pvariates, std::size_t iterations,
                                           const Rng& rng, unsigned workers = 1) {
  return simulate_null(TestKind::Regression, nsample, pvariates, part, iterations, rng, workers);
}

inline void require_probability(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw Error(ErrorCode::BadProbability, "probability " + std::to_string(gamma) + " outside [0, 1]");
}

/// Linear interpolation between order statistics at h = (m - 1) * gamma.
inline double quantile(const EmpiricalNullDistribution& d, double gamma) {
  if (d.values.empty()) throw Error(ErrorCode::EmptyDistribution, "quantile of an empty distribution");
  require_probability(gamma);
  const auto& v = d.values;
  const double h = static_cast<double>(v.size() - 1) * gamma;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

enum class Tail { Lower, Upper };

/// (#{v <= observed} + 1) / (N + 1) for the lower tail, >= for the upper.
inline double mc_p_value(const EmpiricalNullDistribution& d, double observed, Tail tail) {
  if (d.values.empty()) throw Error(ErrorCode::EmptyDistribution, "p-value against an empty distribution");
  const auto& v = d.values;
  const std::size_t count =
      tail == Tail::Lower
          ? static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), observed) - v.begin())
          : static_cast<std::size_t>(v.end() - std::lower_bound(v.begin(), v.end(), observed));
  return static_cast<double>(count + 1) / static_cast<double>(v.size() + 1);
}

}  // namespace psinf
