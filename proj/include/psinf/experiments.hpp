#pragma once

// Coverage study harness: generate X ~ N(mu, Sigma), synthesize V from the
// fitted model, compute the observed statistic with the true parameters and
// count how often it lands in the non-rejection region of the simulated null.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "psinf/error.hpp"
#include "psinf/inference.hpp"
#include "psinf/linalg.hpp"
#include "psinf/nulldist.hpp"
#include "psinf/parallel.hpp"
#include "psinf/random.hpp"
#include "psinf/synthesis.hpp"
#include "psinf/teststats.hpp"

namespace psinf {

struct ScenarioConfig {
  TestKind test = TestKind::GeneralizedVariance;
  std::string sigma_label;
  Vector mu;
  Matrix sigma;
  long n = 0;
  std::optional<long> part;
  double alpha = kDefaultAlpha;
  std::size_t reps = 10000;
  std::size_t mc_iterations = kDefaultIterations;
  std::uint64_t seed = 0;

  long p() const { return static_cast<long>(mu.size()); }

  void validate() const {
    if (mu.size() < 1) throw Error(ErrorCode::DimensionMismatch, "mu is empty");
    if (sigma.rows() != mu.size() || sigma.cols() != mu.size())
      throw Error(ErrorCode::DimensionMismatch, "sigma must be " + std::to_string(mu.size()) + "x" +
                                                    std::to_string(mu.size()) + " to match mu");
    (void)cholesky(sigma);
    validate_null_params(test, n, p(), part);
    require_probability(alpha);
    if (reps < 1) throw Error(ErrorCode::Usage, "reps must be >= 1");
    if (mc_iterations < 1) throw Error(ErrorCode::Usage, "mc_iterations must be >= 1");
  }
};

struct CoverageEntry {
  TestKind test = TestKind::GeneralizedVariance;
  std::string sigma_label;
  std::optional<long> part;
  long n = 0;
  double alpha = kDefaultAlpha;
  std::size_t reps = 0;
  double cov = 0.0;
  double stderr_cov = 0.0;  // sqrt(cov (1 - cov) / reps)
  AcceptanceRegion region;
  double runtime_seconds = 0.0;
};

using CoverageReport = std::vector<CoverageEntry>;

inline Vector builtin_mu() { return (Vector(4) << 1.0, 2.0, 3.0, 4.0).finished(); }

/// Sigma1 = I, Sigma2 = 5 I, Sigma3 compound symmetric (1, 0.5),
/// Sigma4 = [[1, .5], [.5, 2]] (+) [[3, .2], [.2, 4]].
inline Matrix builtin_sigma(int index) {
  switch (index) {
    case 1: return Matrix::Identity(4, 4);
    case 2: return 5.0 * Matrix::Identity(4, 4);
    case 3: {
      Matrix m = Matrix::Constant(4, 4, 0.5);
      m.diagonal().setOnes();
      return m;
    }
    case 4:
      return (Matrix(4, 4) << 1.0, 0.5, 0.0, 0.0,
                              0.5, 2.0, 0.0, 0.0,
                              0.0, 0.0, 3.0, 0.2,
                              0.0, 0.0, 0.2, 4.0).finished();
    default:
      throw Error(ErrorCode::Usage, "builtin covariance index must be 1..4, got " + std::to_string(index));
  }
}

inline Matrix builtin_sigma(std::string_view label) {
  if (label.size() == 6 && label.substr(0, 5) == "Sigma" && label[5] >= '1' && label[5] <= '4')
    return builtin_sigma(label[5] - '0');
  throw Error(ErrorCode::Usage, "unknown covariance label '" + std::string(label) + "'");
}

inline constexpr std::array<long, 4> kBuiltinSampleSizes{10, 20, 100, 500};

/// 8 (test, Sigma, p1) pairings x 4 sample sizes, ordered like the coverage
/// table: by n, then GV Sigma3/4, Sph Sigma1/2, Ind Sigma1 p1=1 / Sigma4 p1=2,
/// Reg Sigma3 p1=2 / Sigma4 p1=1.
inline std::vector<ScenarioConfig> builtin_scenarios(std::size_t reps = 10000,
                                                     std::size_t mc_iterations = kDefaultIterations,
                                                     std::uint64_t seed = 0, double alpha = kDefaultAlpha) {
  struct Pairing {
    TestKind test;
    int sigma;
    std::optional<long> part;
  };
  const Pairing pairings[] = {
      {TestKind::GeneralizedVariance, 3, std::nullopt}, {TestKind::GeneralizedVariance, 4, std::nullopt},
      {TestKind::Sphericity, 1, std::nullopt},          {TestKind::Sphericity, 2, std::nullopt},
      {TestKind::Independence, 1, 1},                   {TestKind::Independence, 4, 2},
      {TestKind::Regression, 3, 2},                     {TestKind::Regression, 4, 1},
  };
  std::vector<ScenarioConfig> out;
  for (long n : kBuiltinSampleSizes) {
    for (const Pairing& pr : pairings) {
      out.push_back(ScenarioConfig{pr.test, "Sigma" + std::to_string(pr.sigma), builtin_mu(),
                                   builtin_sigma(pr.sigma), n, pr.part, alpha, reps, mc_iterations, seed});
    }
  }
  return out;
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::string null_key(TestKind kind, long n, long p, std::optional<long> part) {
  return "null/" + std::string(short_name(kind)) + "/" + std::to_string(n) + "/" + std::to_string(p) + "/" +
         (part ? std::to_string(*part) : std::string("-"));
}

}  // namespace detail

/// Null distributions are keyed by (kind, n, p, p1), so scenarios that share
/// the key also share the stream and the simulated sample.
inline Rng null_stream(const ScenarioConfig& cfg) {
  return Rng(cfg.seed, detail::fnv1a(detail::null_key(cfg.test, cfg.n, cfg.p(), cfg.part)));
}

inline Rng replication_stream(const ScenarioConfig& cfg) {
  const std::string key = "reps/" + std::string(short_name(cfg.test)) + "/" + cfg.sigma_label + "/" +
                          std::to_string(cfg.n) + "/" + (cfg.part ? std::to_string(*cfg.part) : std::string("-"));
  return Rng(cfg.seed, detail::fnv1a(key));
}

inline EmpiricalNullDistribution scenario_null(const ScenarioConfig& cfg, unsigned workers = 1) {
  return simulate_null(cfg.test, cfg.n, cfg.p(), cfg.part, cfg.mc_iterations, null_stream(cfg), workers);
}

/// The observed statistic of one full pipeline run X -> V -> T*, evaluated at
/// the true parameters (Sigma for T1*, Delta = Sigma_12 Sigma_22^{-1} for T4*).
class ObservedStatistic {
 public:
  explicit ObservedStatistic(const ScenarioConfig& cfg)
      : cfg_(cfg), sigma_(cfg.sigma) {
    if (cfg.test == TestKind::Regression) delta0_.delta = block_regression_coefficients(cfg.sigma, *cfg.part);
  }

  double operator()(Rng& rng) const {
    const DataMatrix x = draw_mvn(rng, cfg_.mu, sigma_, cfg_.n);
    const FittedNormalModel model = fit(x);
    const SyntheticSummary s = summarize(sim_synth_data(model, rng));
    switch (cfg_.test) {
      case TestKind::GeneralizedVariance: return t1_star(s, sigma_);
      case TestKind::Sphericity: return t2_star(s);
      case TestKind::Independence: return t3_star(s, *cfg_.part);
      case TestKind::Regression: return t4_star(s, *cfg_.part, delta0_);
    }
    return 0.0;
  }

 private:
  ScenarioConfig cfg_;
  SpdMatrix sigma_;
  CoefficientMatrix delta0_;
};

/// cfg.reps observed statistics in replication order; replication chunk c
/// uses replication_stream(cfg).substream(c).
inline std::vector<double> simulate_observed(const ScenarioConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  const ObservedStatistic statistic(cfg);
  const Rng base = replication_stream(cfg);
  std::vector<double> out(cfg.reps);
  for_each_chunk(cfg.reps, workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Rng rng = base.substream(chunk);
    for (std::size_t i = begin; i < end; ++i) out[i] = statistic(rng);
  });
  return out;
}

/// Coverage against a supplied null sample, which must match the scenario.
inline CoverageEntry run_coverage(const ScenarioConfig& cfg, const EmpiricalNullDistribution& null,
                                  unsigned workers = 1) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  require_matching_meta(null, cfg.test, cfg.n, cfg.p(), cfg.part);
  const AcceptanceRegion region = acceptance_region(null, cfg.alpha);
  const std::vector<double> observed = simulate_observed(cfg, workers);
  std::size_t inside = 0;
  for (double t : observed) inside += region.contains(t) ? 1 : 0;

  CoverageEntry e;
  e.test = cfg.test;
  e.sigma_label = cfg.sigma_label;
  e.part = cfg.part;
  e.n = cfg.n;
  e.alpha = cfg.alpha;
  e.reps = cfg.reps;
  e.cov = static_cast<double>(inside) / static_cast<double>(cfg.reps);
  e.stderr_cov = std::sqrt(e.cov * (1.0 - e.cov) / static_cast<double>(cfg.reps));
  e.region = region;
  e.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return e;
}

inline CoverageEntry run_coverage(const ScenarioConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  return run_coverage(cfg, scenario_null(cfg, workers), workers);
}

/// Runs every scenario, simulating each distinct null distribution once.
inline CoverageReport run_coverage(const std::vector<ScenarioConfig>& scenarios, unsigned workers = 1) {
  for (const ScenarioConfig& cfg : scenarios) cfg.validate();
  using Key = std::tuple<int, long, long, long, std::size_t, std::uint64_t>;
  std::map<Key, EmpiricalNullDistribution> nulls;
  CoverageReport report;
  report.reserve(scenarios.size());
  for (const ScenarioConfig& cfg : scenarios) {
    const Key key{static_cast<int>(cfg.test), cfg.n, cfg.p(), cfg.part.value_or(0), cfg.mc_iterations, cfg.seed};
    auto it = nulls.find(key);
    if (it == nulls.end()) it = nulls.emplace(key, scenario_null(cfg, workers)).first;
    report.push_back(run_coverage(cfg, it->second, workers));
  }
  return report;
}

struct DistributionExport {
  std::string statistic;  // e.g. "T2*"
  std::string scenario;   // e.g. "sph_Sigma1_n10"
  std::vector<double> observed;
  std::vector<double> null;
};

inline std::string statistic_name(TestKind k) {
  switch (k) {
    case TestKind::GeneralizedVariance: return "T1*";
    case TestKind::Sphericity: return "T2*";
    case TestKind::Independence: return "T3*";
    case TestKind::Regression: return "T4*";
  }
  return "T*";
}

inline std::string scenario_label(const ScenarioConfig& cfg) {
  std::string s = std::string(short_name(cfg.test)) + "_" + cfg.sigma_label;
  if (cfg.part) s += "_p1=" + std::to_string(*cfg.part);
  return s + "_n=" + std::to_string(cfg.n);
}

/// Observed-statistic sample (cfg.reps draws) next to the null sample
/// (cfg.mc_iterations draws) for plotting.
inline DistributionExport export_distributions(const ScenarioConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  DistributionExport out{statistic_name(cfg.test), scenario_label(cfg), simulate_observed(cfg, workers),
                         scenario_null(cfg, workers).values};
  return out;
}

}  // namespace psinf
