#include "sparse_lq/experiment.h"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sparse_lq/errors.h"
#include "sparse_lq/experiment_config.h"
#include "sparse_lq/report_io.h"

namespace sparse_lq {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Three decoupled states, one driven by the input, with a coupled state cost
// that makes the optimal gain identifiable for k = 1.
ExperimentConfig CertifiedConfig() {
  ExperimentConfig c;
  c.system.k = 1;
  MatrixXd a = MatrixXd::Zero(3, 3);
  a(1, 1) = -0.605;
  a(2, 2) = 0.605;
  MatrixXd b = MatrixXd::Zero(3, 1);
  b(0, 0) = 0.479;
  c.system.a = a;
  c.system.b = b;
  c.system.p = 3;
  c.system.r = 1;
  MatrixXd q(3, 3);
  q << 1, 3, -3, 3, 10, -8.823, -3, -8.823, 10.031;
  c.q_mat = q;
  c.r_mat = MatrixXd::Identity(1, 1);
  c.ell = 1.0;
  c.n0 = 64;
  c.n1 = 32;
  c.horizon = 512;
  c.horizons = {128, 256, 512};
  c.trials = 3;
  c.seed = 11;
  c.ofu.starts = 2;
  c.ofu.iterations = 20;
  return c;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sparse_lq_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(CumulativeRegretTest, HandSum) {
  const VectorXd r = CumulativeRegret((VectorXd(2) << 3, 5).finished(), 2.0);
  EXPECT_EQ(r, (VectorXd(2) << 1, 4).finished());
  EXPECT_EQ(CumulativeRegret(VectorXd(), 1.0).size(), 0);
}

TEST(StatsTest, SlopeAndQuantiles) {
  EXPECT_NEAR(LogLogSlope({1, 2, 4, 8}, {3, 6 * std::sqrt(2.0) / 2, 6, 6 * std::sqrt(2.0)}),
              0.5, 1e-12);
  EXPECT_TRUE(std::isnan(LogLogSlope({1, 2}, {1, -1})));
  EXPECT_DOUBLE_EQ(Quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(Quantile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(Quantile({4, 1, 3, 2}, 1.0), 4.0);
}

TEST(ParallelForTest, VisitsEachIndexOnceAndRethrows) {
  std::vector<std::atomic<int>> hits(100);
  ParallelFor(100, 4, [&](int i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(ParallelFor(10, 2,
                           [](int i) {
                             if (i == 3) throw NumericalError("boom");
                           }),
               NumericalError);
}

TEST(TrialSeedTest, DistinctAndStable) {
  EXPECT_EQ(TrialSeed(1, 0), TrialSeed(1, 0));
  EXPECT_NE(TrialSeed(1, 0), TrialSeed(1, 1));
  EXPECT_NE(TrialSeed(1, 0), TrialSeed(2, 0));
}

TEST(ConfigTest, JsonRoundTrip) {
  const ExperimentConfig c = CertifiedConfig();
  const ExperimentConfig back = ConfigFromJson(ConfigToJson(c));
  EXPECT_EQ(ConfigToJson(back), ConfigToJson(c));
  EXPECT_EQ(*back.system.a, *c.system.a);
}

TEST(ConfigTest, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ConfigFromJson(nlohmann::json::parse(R"({"sytem": {}})")), ConfigError);
  EXPECT_THROW(ConfigFromJson(nlohmann::json::parse(R"({"run": {"mode": "x"}})")),
               ConfigError);
  EXPECT_THROW(ConfigFromJson(nlohmann::json::parse(R"({"run": {"trials": "many"}})")),
               ConfigError);
  ExperimentConfig c = CertifiedConfig();
  c.horizon = 2000000;
  EXPECT_THROW(ValidateConfig(c), ConfigError);
  c.allow_large = true;
  EXPECT_NO_THROW(ValidateConfig(c));
  EXPECT_THROW(LoadConfig("/nonexistent/config.json"), IoError);
}

TEST(ResolveTest, CertifiedSystemResolves) {
  const ResolvedExperiment r = Resolve(CertifiedConfig());
  EXPECT_TRUE(r.certificate.valid());
  EXPECT_GT(r.certificate.alpha, 0.25);
  EXPECT_NEAR(r.j_star, SolveRiccati(r.theta0, r.cost).k_mat.trace(), 1e-9);
  EXPECT_EQ(r.n0, 64);
}

TEST(ResolveTest, UncertifiedSystemNeedsOverride) {
  ExperimentConfig c = CertifiedConfig();
  c.q_mat.reset();
  EXPECT_THROW(Resolve(c), ConfigError);
  c.allow_uncertified = true;
  const ResolvedExperiment r = Resolve(c);
  EXPECT_FALSE(r.certificate.valid());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(RunExperimentTest, OutputsAreDeterministicAndRoundTrip) {
  const ResolvedExperiment r = Resolve(CertifiedConfig());
  const RegretReport report = RunExperiment(r);
  ASSERT_EQ(report.trials.size(), 3u);
  EXPECT_EQ(report.failed_trials, 0);
  const auto d1 = TempDir("a"), d2 = TempDir("b");
  EmitRegretOutputs(report, d1.string(), "fixed");
  EmitRegretOutputs(RunExperiment(r), d2.string(), "fixed");
  for (const char* f : {"regret_curves.csv", "plot_mean.csv", "summary.json"}) {
    EXPECT_EQ(ReadFile(d1 / f), ReadFile(d2 / f)) << f;
  }
  EXPECT_EQ(ReadFile(d1 / "estimation.csv"), std::string(kEstimationCsvHeader) + "\n");

  const auto curves = ReadRegretCsv((d1 / "regret_curves.csv").string());
  ASSERT_EQ(curves.size(), 3u);
  for (const TrialOutcome& t : report.trials) {
    const ParsedCurve& c = curves.at(t.trial);
    EXPECT_EQ(c.seed, t.seed);
    ASSERT_EQ(static_cast<Eigen::Index>(c.costs.size()), t.costs.size());
    for (Eigen::Index s = 0; s < t.costs.size(); ++s) {
      EXPECT_EQ(c.costs[s], t.costs[s]);
      EXPECT_EQ(c.regret[s], t.regret[s]);
    }
  }
  const auto summary = nlohmann::json::parse(ReadFile(d1 / "summary.json"));
  EXPECT_EQ(summary["horizons"].size(), 3u);
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST(RunExperimentTest, ThreadCountDoesNotChangeResults) {
  ExperimentConfig c = CertifiedConfig();
  c.threads = 1;
  const RegretReport one = RunExperiment(Resolve(c));
  c.threads = 3;
  const RegretReport three = RunExperiment(Resolve(c));
  for (std::size_t i = 0; i < one.trials.size(); ++i) {
    EXPECT_EQ(one.trials[i].costs, three.trials[i].costs);
  }
}

TEST(EstimationExperimentTest, HeaderOnlyRegretFiles) {
  ExperimentConfig c = CertifiedConfig();
  c.estimation.n_grid = {200, 400};
  c.trials = 2;
  const EstimationReport report = EstimationExperiment(Resolve(c));
  EXPECT_EQ(report.trials.size(), 4u);
  EXPECT_EQ(report.trials[0].seed, report.trials[2].seed);
  const auto dir = TempDir("est");
  EmitEstimationOutputs(report, dir.string(), "fixed");
  EXPECT_EQ(ReadFile(dir / "regret_curves.csv"), std::string(kRegretCsvHeader) + "\n");
  EXPECT_EQ(ReadFile(dir / "plot_mean.csv"), std::string(kPlotCsvHeader) + "\n");
  std::filesystem::remove_all(dir);
}

TEST(ReportIoTest, MalformedCsvIsReported) {
  const auto dir = TempDir("bad");
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "x.csv");
    out << kRegretCsvHeader << "\n1,2,garbage\n";
  }
  EXPECT_THROW(ReadRegretCsv((dir / "x.csv").string()), IoError);
  EXPECT_THROW(ReadRegretCsv((dir / "missing.csv").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST(ReportIoTest, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9}) {
    EXPECT_EQ(std::strtod(FormatDouble(v).c_str(), nullptr), v);
  }
}

}  // namespace
}  // namespace sparse_lq
