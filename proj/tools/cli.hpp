#pragma once

// Command-line front end. Kept in a header so the test suite can drive every
// subcommand in-process through run_cli().

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "psinf/error.hpp"
#include "psinf/experiments.hpp"
#include "psinf/inference.hpp"
#include "psinf/io.hpp"
#include "psinf/nulldist.hpp"
#include "psinf/parallel.hpp"
#include "psinf/random.hpp"
#include "psinf/synthesis.hpp"
#include "psinf/teststats.hpp"

namespace psinf::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumeric = 3, kIo = 4 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::SingularSample:
      return kNumeric;
    case ErrorCode::IoError:
      return kIo;
    default:
      return kUsage;
  }
}

inline const std::vector<double> kQuantileTable{0, 0.01, 0.025, 0.05, 0.1, 0.5, 0.9, 0.95, 0.975, 0.99, 1};

struct SynthesizeArgs {
  std::string input, output;
  std::optional<long> n_imp;
  int m = 1;
  std::uint64_t seed = 0;
};

struct NullArgs {
  std::string test;
  long n = 0, p = 0;
  std::optional<long> part;
  std::size_t iterations = kDefaultIterations;
  std::uint64_t seed = 0;
  std::string cache;
  unsigned workers = 0;
};

struct TestArgs {
  std::string test, input, sigma0, delta0, cache;
  double alpha = kDefaultAlpha;
  std::optional<long> part;
  std::size_t iterations = kDefaultIterations;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  bool iterations_given = false, seed_given = false;
};

struct CoverageArgs {
  std::string config, out, format = "csv";
  bool builtin = false;
  std::size_t reps = 10000, iterations = kDefaultIterations;
  std::uint64_t seed = 0;
  double alpha = kDefaultAlpha;
  unsigned workers = 0;
};

struct ExportArgs {
  std::string test, sigma = "Sigma1", config, out;
  long n = 10;
  std::optional<long> part;
  std::size_t reps = 10000, iterations = kDefaultIterations;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

inline unsigned resolve_workers(unsigned w) { return w == 0 ? default_workers() : w; }

/// "out.csv" -> "out_3.csv".
inline std::filesystem::path numbered_path(const std::filesystem::path& base, int k) {
  std::filesystem::path p = base;
  p.replace_filename(base.stem().string() + "_" + std::to_string(k) + base.extension().string());
  return p;
}

inline int cmd_synthesize(const SynthesizeArgs& a, std::ostream& out) {
  const io::Table table = io::read_csv(a.input);
  const FittedNormalModel model = fit(table.data);
  const long n_imp = a.n_imp.value_or(static_cast<long>(model.n));
  if (n_imp < 1) throw Error(ErrorCode::Usage, "--n-imp must be >= 1");
  if (a.m < 1) throw Error(ErrorCode::Usage, "--m must be >= 1");
  const std::vector<DataMatrix> reps = sim_multiple(model, n_imp, a.m, Rng(a.seed));
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  for (int k = 0; k < a.m; ++k) {
    const std::filesystem::path path = a.m == 1 ? std::filesystem::path(a.output) : numbered_path(a.output, k + 1);
    files.emplace_back(path, io::format_csv(table.header, reps[static_cast<std::size_t>(k)]));
  }
  for (const auto& [path, text] : files) {
    io::write_file_atomic(path, text);
    out << path.string() << "\n";
  }
  return kOk;
}

inline int cmd_nulldist(const NullArgs& a, std::ostream& out) {
  const TestKind kind = parse_test_kind(a.test);
  validate_null_params(kind, a.n, a.p, a.part);
  const EmpiricalNullDistribution d =
      simulate_null(kind, a.n, a.p, a.part, a.iterations, Rng(a.seed), resolve_workers(a.workers));
  if (!a.cache.empty()) io::write_cache(a.cache, d);
  out << "probability,quantile\n";
  for (double g : kQuantileTable) out << io::format_double(g) << "," << io::format_double(quantile(d, g)) << "\n";
  return kOk;
}

/// Loads the cache when it exists (kind, n, p and p1 must match; iterations
/// and seed too when given explicitly), otherwise simulates and, if a cache
/// path was named, stores the result there.
inline EmpiricalNullDistribution obtain_null(TestKind kind, long n, long p, std::optional<long> part,
                                             const TestArgs& a) {
  if (!a.cache.empty() && std::filesystem::exists(a.cache)) {
    EmpiricalNullDistribution d = io::read_cache(a.cache);
    DistMeta expected{kind, n, p, part, a.iterations_given ? a.iterations : d.meta.iterations,
                      a.seed_given ? a.seed : d.meta.seed};
    if (!(d.meta == expected)) {
      throw Error(ErrorCode::MetadataMismatch, "cache '" + a.cache + "' holds " +
                                                   io::dump_json(io::to_json(d.meta), -1) + ", requested " +
                                                   io::dump_json(io::to_json(expected), -1));
    }
    return d;
  }
  EmpiricalNullDistribution d = simulate_null(kind, n, p, part, a.iterations, Rng(a.seed), resolve_workers(a.workers));
  if (!a.cache.empty()) io::write_cache(a.cache, d);
  return d;
}

inline Matrix read_matrix_csv(const std::string& path) { return io::read_csv(path).data; }

inline int cmd_test(const TestArgs& a, std::ostream& out) {
  const TestKind kind = parse_test_kind(a.test);
  require_alpha(a.alpha);
  const SyntheticSummary s = summarize(io::read_csv(a.input).data);
  const long n = static_cast<long>(s.n), p = static_cast<long>(s.p);

  std::optional<SpdMatrix> sigma0;
  CoefficientMatrix delta0;
  switch (kind) {
    case TestKind::GeneralizedVariance: {
      if (a.sigma0.empty()) throw Error(ErrorCode::Usage, "gv test requires --sigma0");
      Matrix m = read_matrix_csv(a.sigma0);
      if (m.rows() != p || m.cols() != p)
        throw Error(ErrorCode::DimensionMismatch, "--sigma0 is " + std::to_string(m.rows()) + "x" +
                                                      std::to_string(m.cols()) + ", data have p = " + std::to_string(p));
      sigma0.emplace(std::move(m));
      break;
    }
    case TestKind::Sphericity:
      break;
    case TestKind::Independence:
      if (!a.part) throw Error(ErrorCode::Usage, "ind test requires --part");
      require_split(p, *a.part);
      break;
    case TestKind::Regression:
      if (!a.part) throw Error(ErrorCode::Usage, "cano test requires --part");
      if (a.delta0.empty()) throw Error(ErrorCode::Usage, "cano test requires --delta0");
      require_regression_split(p, *a.part);
      delta0.delta = read_matrix_csv(a.delta0);
      if (delta0.delta.rows() != *a.part || delta0.delta.cols() != p - *a.part)
        throw Error(ErrorCode::DimensionMismatch, "--delta0 must be " + std::to_string(*a.part) + "x" +
                                                      std::to_string(p - *a.part));
      break;
  }
  const std::optional<long> part = needs_part(kind) ? a.part : std::nullopt;
  const EmpiricalNullDistribution d = obtain_null(kind, n, p, part, a);

  TestOutcome o;
  switch (kind) {
    case TestKind::GeneralizedVariance: o = gv_test(s, *sigma0, a.alpha, d); break;
    case TestKind::Sphericity: o = sphericity_test(s, a.alpha, d); break;
    case TestKind::Independence: o = independence_test(s, *a.part, a.alpha, d); break;
    case TestKind::Regression: o = regression_test(s, *a.part, delta0, a.alpha, d); break;
  }
  out << io::dump_json(io::to_json(o)) << "\n";
  return kOk;
}

inline int cmd_ci(const TestArgs& a, std::ostream& out) {
  require_alpha(a.alpha);
  const SyntheticSummary s = summarize(io::read_csv(a.input).data);
  const EmpiricalNullDistribution d =
      obtain_null(TestKind::GeneralizedVariance, static_cast<long>(s.n), static_cast<long>(s.p), std::nullopt, a);
  out << io::dump_json(io::to_json(gv_confidence_interval(s, a.alpha, d))) << "\n";
  return kOk;
}

inline int cmd_coverage(const CoverageArgs& a, std::ostream& out, std::ostream& err) {
  if (a.format != "csv" && a.format != "json") throw Error(ErrorCode::Usage, "--format must be csv or json");
  std::vector<ScenarioConfig> scenarios;
  if (a.builtin) {
    scenarios = builtin_scenarios(a.reps, a.iterations, a.seed, a.alpha);
  } else {
    ScenarioConfig defaults;
    defaults.reps = a.reps;
    defaults.mc_iterations = a.iterations;
    defaults.seed = a.seed;
    defaults.alpha = a.alpha;
    scenarios = io::parse_config(io::read_file(a.config), defaults);
  }
  const CoverageReport report = run_coverage(scenarios, resolve_workers(a.workers));
  double seconds = 0.0;
  for (const auto& e : report) seconds += e.runtime_seconds;
  io::write_file_atomic(a.out, a.format == "csv" ? io::format_coverage_csv(report) : io::format_coverage_json(report));
  out << a.out << "\n";
  err << report.size() << " scenarios in " << seconds << " s\n";
  return kOk;
}

inline int cmd_export(const ExportArgs& a, std::ostream& out) {
  ScenarioConfig cfg;
  if (!a.config.empty()) {
    ScenarioConfig defaults;
    defaults.reps = a.reps;
    defaults.mc_iterations = a.iterations;
    defaults.seed = a.seed;
    const auto all = io::parse_config(io::read_file(a.config), defaults);
    cfg = all.front();
  } else {
    if (a.test.empty()) throw Error(ErrorCode::Usage, "export-dist requires --test or --config");
    cfg = ScenarioConfig{parse_test_kind(a.test), a.sigma, builtin_mu(), builtin_sigma(a.sigma), a.n, a.part,
                         kDefaultAlpha, a.reps, a.iterations, a.seed};
  }
  cfg.validate();
  const DistributionExport e = export_distributions(cfg, resolve_workers(a.workers));
  io::write_file_atomic(a.out, io::format_distribution_csv(e));
  out << a.out << "\n";
  return kOk;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plug-in sampling synthetic data and exact inference", "psinf"};
  app.require_subcommand(1);

  SynthesizeArgs syn;
  auto* synth = app.add_subcommand("synthesize", "Draw synthetic replicates of a CSV table");
  synth->add_option("--input", syn.input, "Confidential CSV (header row, n x p)")->required();
  synth->add_option("--n-imp", syn.n_imp, "Synthetic rows per replicate (default n)");
  synth->add_option("--m", syn.m, "Number of replicates")->capture_default_str();
  synth->add_option("--seed", syn.seed, "RNG seed")->capture_default_str();
  synth->add_option("--output", syn.output, "Output CSV (suffix _k when m > 1)")->required();

  NullArgs nul;
  auto* nulldist = app.add_subcommand("nulldist", "Simulate a null distribution");
  nulldist->add_option("--test", nul.test, "gv | sph | ind | cano")->required();
  nulldist->add_option("--n", nul.n, "Sample size")->required();
  nulldist->add_option("--p", nul.p, "Number of variables")->required();
  nulldist->add_option("--part", nul.part, "Size p1 of the first block (ind, cano)");
  nulldist->add_option("--iterations", nul.iterations, "Monte Carlo iterations")->capture_default_str();
  nulldist->add_option("--seed", nul.seed, "RNG seed")->capture_default_str();
  nulldist->add_option("--cache", nul.cache, "Write the distribution to this cache file");
  nulldist->add_option("--workers", nul.workers, "Worker threads (0 = all cores)");

  TestArgs tst;
  auto* test = app.add_subcommand("test", "Run a hypothesis test on a synthetic CSV");
  test->add_option("--test", tst.test, "gv | sph | ind | cano")->required();
  test->add_option("--input", tst.input, "Synthetic CSV")->required();
  test->add_option("--alpha", tst.alpha, "Significance level")->capture_default_str();
  test->add_option("--sigma0", tst.sigma0, "Hypothesised covariance CSV (gv)");
  test->add_option("--delta0", tst.delta0, "Hypothesised coefficient CSV, p1 x (p - p1) (cano)");
  test->add_option("--part", tst.part, "Size p1 of the first block (ind, cano)");
  test->add_option("--cache", tst.cache, "Null-distribution cache file");
  auto* test_iter = test->add_option("--iterations", tst.iterations, "Monte Carlo iterations")->capture_default_str();
  auto* test_seed = test->add_option("--seed", tst.seed, "RNG seed")->capture_default_str();
  test->add_option("--workers", tst.workers, "Worker threads (0 = all cores)");

  TestArgs cia;
  auto* ci = app.add_subcommand("ci", "Confidence interval for the generalized variance");
  ci->add_option("--input", cia.input, "Synthetic CSV")->required();
  ci->add_option("--alpha", cia.alpha, "1 - confidence level")->capture_default_str();
  ci->add_option("--cache", cia.cache, "Null-distribution cache file");
  auto* ci_iter = ci->add_option("--iterations", cia.iterations, "Monte Carlo iterations")->capture_default_str();
  auto* ci_seed = ci->add_option("--seed", cia.seed, "RNG seed")->capture_default_str();
  ci->add_option("--workers", cia.workers, "Worker threads (0 = all cores)");

  CoverageArgs cov;
  auto* coverage = app.add_subcommand("coverage", "Estimate coverage probabilities");
  auto* cfg_opt = coverage->add_option("--config", cov.config, "JSON scenario config");
  auto* builtin_opt = coverage->add_flag("--builtin", cov.builtin, "Use the 32 built-in scenarios");
  cfg_opt->excludes(builtin_opt);
  coverage->add_option("--reps", cov.reps, "Replications per scenario")->capture_default_str();
  coverage->add_option("--iterations", cov.iterations, "Null-distribution iterations")->capture_default_str();
  coverage->add_option("--seed", cov.seed, "RNG seed")->capture_default_str();
  coverage->add_option("--alpha", cov.alpha, "Significance level")->capture_default_str();
  coverage->add_option("--out", cov.out, "Report path")->required();
  coverage->add_option("--format", cov.format, "csv | json")->capture_default_str();
  coverage->add_option("--workers", cov.workers, "Worker threads (0 = all cores)");

  ExportArgs exa;
  auto* exp = app.add_subcommand("export-dist", "Export observed and null samples for plotting");
  exp->add_option("--test", exa.test, "gv | sph | ind | cano");
  exp->add_option("--sigma", exa.sigma, "Sigma1 .. Sigma4")->capture_default_str();
  exp->add_option("--n", exa.n, "Sample size")->capture_default_str();
  exp->add_option("--part", exa.part, "Size p1 of the first block (ind, cano)");
  exp->add_option("--config", exa.config, "JSON scenario config (first scenario used)");
  exp->add_option("--reps", exa.reps, "Observed-statistic sample size")->capture_default_str();
  exp->add_option("--iterations", exa.iterations, "Null sample size")->capture_default_str();
  exp->add_option("--seed", exa.seed, "RNG seed")->capture_default_str();
  exp->add_option("--out", exa.out, "Output CSV")->required();
  exp->add_option("--workers", exa.workers, "Worker threads (0 = all cores)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*synth) return cmd_synthesize(syn, out);
    if (*nulldist) return cmd_nulldist(nul, out);
    if (*test) {
      tst.iterations_given = test_iter->count() > 0;
      tst.seed_given = test_seed->count() > 0;
      return cmd_test(tst, out);
    }
    if (*ci) {
      cia.iterations_given = ci_iter->count() > 0;
      cia.seed_given = ci_seed->count() > 0;
      return cmd_ci(cia, out);
    }
    if (*coverage) {
      if (!cov.builtin && cov.config.empty()) throw Error(ErrorCode::Usage, "coverage needs --config or --builtin");
      return cmd_coverage(cov, out, err);
    }
    if (*exp) return cmd_export(exa, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace psinf::cli
