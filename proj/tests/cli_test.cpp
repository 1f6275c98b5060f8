#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <unistd.h>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "support/oracles.hpp"

namespace {

namespace fs = std::filesystem;
using psinf::Matrix;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = psinf::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("psinf_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::mt19937_64 gen(3);
    const Matrix x = oracle::normal_rows(gen, psinf::builtin_mu(), psinf::builtin_sigma(3), 15);
    write("data.csv", psinf::io::format_csv(psinf::io::default_header(4), x));
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { psinf::io::write_file_atomic(path(name), text); }
  std::string read(const std::string& name) const { return psinf::io::read_file(path(name)); }

  fs::path dir_;
};

TEST_F(Cli, SynthesizeWritesNumberedReplicates) {
  const auto r = run({"synthesize", "--input", path("data.csv"), "--m", "3", "--seed", "4", "--output",
                      path("syn.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (int k = 1; k <= 3; ++k) {
    const auto t = psinf::io::read_csv(path("syn_" + std::to_string(k) + ".csv"));
    EXPECT_EQ(t.data.rows(), 15);
    EXPECT_EQ(t.header, psinf::io::default_header(4));
  }
  EXPECT_NE(read("syn_1.csv"), read("syn_2.csv"));
  EXPECT_FALSE(fs::exists(path("syn.csv")));

  ASSERT_EQ(run({"synthesize", "--input", path("data.csv"), "--n-imp", "7", "--output", path("one.csv")}).code, 0);
  EXPECT_EQ(psinf::io::read_csv(path("one.csv")).data.rows(), 7);
}

TEST_F(Cli, NulldistPrintsQuantilesAndWritesCache) {
  const auto r = run({"nulldist", "--test", "ind", "--n", "10", "--p", "4", "--part", "2", "--iterations", "500",
                      "--seed", "8", "--cache", path("ind.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "probability,quantile");
  const auto d = psinf::io::read_cache(path("ind.json"));
  EXPECT_EQ(d.meta.iterations, 500u);
  EXPECT_EQ(d.meta.part, 2);
  EXPECT_EQ(d.values, psinf::ind_dist(2, 10, 4, 500, psinf::Rng(8)).values);
}

TEST_F(Cli, TestUsesCacheAndMatchesInlineRun) {
  const std::vector<std::string> base{"test", "--test", "sph", "--input", path("data.csv"), "--iterations", "800",
                                      "--seed", "5"};
  const auto inline_run = run(base);
  ASSERT_EQ(inline_run.code, 0) << inline_run.err;
  auto with_cache = base;
  with_cache.insert(with_cache.end(), {"--cache", path("sph.json")});
  const auto miss = run(with_cache);
  ASSERT_TRUE(fs::exists(path("sph.json")));
  const auto hit = run({"test", "--test", "sph", "--input", path("data.csv"), "--cache", path("sph.json")});
  ASSERT_EQ(hit.code, 0) << hit.err;
  EXPECT_EQ(inline_run.out, miss.out);
  EXPECT_EQ(inline_run.out, hit.out);
  const auto j = psinf::io::json::parse(hit.out);
  EXPECT_EQ(j["kind"], "Sphericity");
  EXPECT_EQ(j["dist_meta"]["iterations"], 800);

  // explicit options that disagree with the cache are refused
  auto other_seed = run({"test", "--test", "sph", "--input", path("data.csv"), "--seed", "6", "--cache",
                         path("sph.json")});
  EXPECT_EQ(other_seed.code, 2);
}

TEST_F(Cli, RegressionWithPlugInDeltaIsZero) {
  const auto x = psinf::io::read_csv(path("data.csv")).data;
  const auto s = psinf::summarize(x);
  const Matrix d = psinf::regression_coefficients(s, 2).delta;
  write("delta.csv", psinf::io::format_csv({"a", "b"}, d));
  const auto r = run({"test", "--test", "cano", "--input", path("data.csv"), "--part", "2", "--delta0",
                      path("delta.csv"), "--iterations", "300"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = psinf::io::json::parse(r.out);
  EXPECT_EQ(j["observed"].get<double>(), 0.0);
  EXPECT_EQ(j["reject"], false);
}

TEST_F(Cli, GeneralizedVarianceTestAndInterval) {
  write("sigma0.csv", psinf::io::format_csv(psinf::io::default_header(4), psinf::builtin_sigma(3)));
  const auto t = run({"test", "--test", "gv", "--input", path("data.csv"), "--sigma0", path("sigma0.csv"),
                      "--iterations", "500"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(psinf::io::json::parse(t.out)["thresholds"].size(), 2u);
  const auto ci = run({"ci", "--input", path("data.csv"), "--alpha", "0.1", "--iterations", "500"});
  ASSERT_EQ(ci.code, 0) << ci.err;
  const auto j = psinf::io::json::parse(ci.out);
  EXPECT_LT(j["lower"].get<double>(), j["upper"].get<double>());
  EXPECT_EQ(j["alpha"].get<double>(), 0.1);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({"test", "--test", "ind", "--input", path("data.csv")}).code, 2);
  write("small.csv", psinf::io::format_csv(psinf::io::default_header(3), Matrix::Identity(3, 3)));
  EXPECT_EQ(run({"test", "--test", "gv", "--input", path("data.csv"), "--sigma0", path("small.csv")}).code, 2);
  EXPECT_EQ(run({"test", "--test", "sph", "--input", path("missing.csv")}).code, 4);
  EXPECT_EQ(run({"test", "--test", "sph", "--input", path("data.csv"), "--alpha", "1.5"}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"nulldist", "--test", "gv", "--n", "3", "--p", "4"}).code, 2);
  Matrix singular(6, 2);
  singular << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10, 6, 12;
  write("singular.csv", psinf::io::format_csv(psinf::io::default_header(2), singular));
  EXPECT_EQ(run({"synthesize", "--input", path("singular.csv"), "--output", path("o.csv")}).code, 3);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, CoverageFromConfigIsDeterministic) {
  write("cfg.json", R"({"scenarios":[{"test":"sph","sigma":"Sigma1","n":10},
                                     {"test":"cano","sigma":"Sigma4","n":10,"part":1}]})");
  const std::vector<std::string> args{"coverage", "--config", path("cfg.json"), "--reps", "300", "--iterations",
                                      "500", "--seed", "9"};
  auto a1 = args, a4 = args;
  a1.insert(a1.end(), {"--out", path("c1.csv"), "--workers", "1"});
  a4.insert(a4.end(), {"--out", path("c4.csv"), "--workers", "4"});
  ASSERT_EQ(run(a1).code, 0);
  ASSERT_EQ(run(a4).code, 0);
  EXPECT_EQ(read("c1.csv"), read("c4.csv"));
  const std::string csv = read("c1.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "test,sigma,p1,n,alpha,reps,cov,stderr,lower_threshold,upper_threshold");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);

  auto aj = args;
  aj.insert(aj.end(), {"--out", path("c.json"), "--format", "json"});
  ASSERT_EQ(run(aj).code, 0);
  EXPECT_EQ(psinf::io::json::parse(read("c.json"))["scenarios"].size(), 2u);
  EXPECT_EQ(run({"coverage", "--out", path("x.csv")}).code, 2);
}

TEST_F(Cli, ExportDistributions) {
  const auto r = run({"export-dist", "--test", "sph", "--sigma", "Sigma2", "--n", "20", "--reps", "40",
                      "--iterations", "60", "--out", path("e.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = read("e.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "sample_kind,T2*|sph_Sigma2_n=20");
  std::size_t observed = 0, null = 0, pos = 0;
  while ((pos = text.find('\n', pos)) != std::string::npos) {
    ++pos;
    observed += text.compare(pos, 9, "observed,") == 0;
    null += text.compare(pos, 5, "null,") == 0;
  }
  EXPECT_EQ(observed, 40u);
  EXPECT_EQ(null, 60u);
}

TEST(CliBinary, ReportsExitCodeFromProcess) {
  const char* exe = std::getenv("PSINF_CLI");
  if (!exe) GTEST_SKIP() << "PSINF_CLI not set";
  const std::string cmd = std::string(exe) + " test --test sph --alpha 2 --input /nonexistent.csv >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);  // alpha is validated before the input is read
  const int ok = std::system((std::string(exe) + " --help >/dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(ok), 0);
}

}  // namespace
