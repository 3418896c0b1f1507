// Command-line front end: simulate, regret, estimate, certify, profile.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sparse_lq/errors.h"
#include "sparse_lq/experiment.h"
#include "sparse_lq/experiment_config.h"
#include "sparse_lq/identifiability.h"
#include "sparse_lq/report_io.h"
#include "sparse_lq/rng.h"

namespace {

using namespace sparse_lq;

enum ExitCode {
  kOk = 0,
  kOther = 1,
  kConfigExit = 2,
  kConvergenceExit = 3,
  kDivergenceExit = 4,
  kIoExit = 5,
};

int ExitCodeFor(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
    case ErrorCategory::kInvalidArgument:
    case ErrorCategory::kBudget:
      return kConfigExit;
    case ErrorCategory::kConvergence:
    case ErrorCategory::kNumerical:
    case ErrorCategory::kStability:
    case ErrorCategory::kSelection:
      return kConvergenceExit;
    case ErrorCategory::kDivergence:
      return kDivergenceExit;
    case ErrorCategory::kIo:
      return kIoExit;
    case ErrorCategory::kGeneration:
      return kOther;
  }
  return kOther;
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::int64_t> horizon;
  std::optional<std::string> mode;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  bool allow_large = false;
};

void AddCommon(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON configuration file");
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--trials", flags.trials, "number of seeded trials");
  cmd->add_option("--horizon", flags.horizon, "horizon T");
  cmd->add_option("--mode", flags.mode, "adaptive | oracle | fixed-gain");
  cmd->add_option("--out-dir", flags.out_dir, "output directory");
  cmd->add_option("--threads", flags.threads, "worker threads (0 = all cores)");
  cmd->add_flag("--allow-large", flags.allow_large,
                "lift the p <= 10, k <= 3, T <= 1e6 guardrails");
}

ExperimentConfig BuildConfig(const CommonFlags& flags) {
  ExperimentConfig config =
      flags.config_path.empty() ? ExperimentConfig{} : LoadConfig(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.trials) config.trials = *flags.trials;
  if (flags.horizon) {
    config.horizon = *flags.horizon;
    // Checkpoints beyond the new horizon are dropped.
    std::erase_if(config.horizons, [&](std::int64_t h) { return h > config.horizon; });
  }
  if (flags.mode) config.mode = ParseControlMode(*flags.mode);
  if (flags.out_dir) config.out_dir = *flags.out_dir;
  if (flags.threads) config.threads = *flags.threads;
  if (flags.allow_large) config.allow_large = true;
  return config;
}

void PrintWarnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int RunRegret(const CommonFlags& flags, bool single) {
  ExperimentConfig config = BuildConfig(flags);
  if (single) config.trials = 1;
  const ResolvedExperiment resolved = Resolve(config);
  PrintWarnings(resolved.warnings);
  const RegretReport report = RunExperiment(resolved);
  EmitRegretOutputs(report, config.out_dir, CurrentTimestamp());
  std::printf("J_star %.10g  n0 %lld  n1 %lld  failed %d/%zu\n", report.j_star,
              static_cast<long long>(report.n0), static_cast<long long>(report.n1),
              report.failed_trials, report.trials.size());
  for (std::size_t i = 0; i < report.horizons.size(); ++i) {
    std::printf("T %8lld  mean R %.6g  se %.3g  R/T %.4g\n",
                static_cast<long long>(report.horizons[i]), report.mean_regret[i],
                report.stderr_regret[i],
                report.mean_regret[i] / static_cast<double>(report.horizons[i]));
  }
  std::printf("slope %.4f  P(E1) %.3f  P(E2) %.3f\n", report.slope,
              report.e1_frequency, report.e2_frequency);
  return kOk;
}

int RunEstimate(const CommonFlags& flags, const std::vector<std::int64_t>& n_grid) {
  ExperimentConfig config = BuildConfig(flags);
  if (!n_grid.empty()) config.estimation.n_grid = n_grid;
  const ResolvedExperiment resolved = Resolve(config);
  const EstimationReport report = EstimationExperiment(resolved);
  PrintWarnings(report.warnings);
  EmitEstimationOutputs(report, config.out_dir, CurrentTimestamp());
  for (std::size_t g = 0; g < report.n_grid.size(); ++g) {
    std::printf("n %lld  P(d <= eps) %.4f  mean d %.4g\n",
                static_cast<long long>(report.n_grid[g]), report.success_frequency[g],
                report.mean_distance[g]);
  }
  return kOk;
}

// Certify and profile only need the system and the gain.
ResolvedExperiment ResolveForInspection(ExperimentConfig config) {
  config.allow_uncertified = true;
  if (!config.n0) config.n0 = 1;
  if (!config.n1) config.n1 = 1;
  if (!config.ell) config.ell = 1.0;
  return Resolve(config);
}

int RunCertify(const CommonFlags& flags) {
  const ExperimentConfig config = BuildConfig(flags);
  const ResolvedExperiment resolved = ResolveForInspection(config);
  const auto& cert = resolved.certificate;
  nlohmann::json doc = {{"theta0", MatrixToJson(resolved.theta0.stacked())},
                        {"initial_gain", MatrixToJson(resolved.initial_gain.l)},
                        {"certificate", CertificateToJson(cert)}};
  if (cert.valid()) {
    const int k = config.system.k;
    const int q = resolved.theta0.q();
    const auto n = SampleComplexity(k, resolved.ell0, cert.alpha, cert.rho, cert.c_min,
                                    config.eps, config.delta, q,
                                    resolved.theta0.MinNonzeroMagnitude());
    doc["sample_complexity"] = {{"n", n.n}, {"value", n.value}, {"warnings", n.warnings}};
  }
  std::cout << doc.dump(2) << '\n';
  if (flags.out_dir) {
    std::filesystem::create_directories(*flags.out_dir);
    WriteJsonFile(doc, *flags.out_dir + "/certificate.json");
  }
  return cert.valid() ? kOk : kOther;
}

int RunProfile(const CommonFlags& flags, int samples) {
  const ExperimentConfig config = BuildConfig(flags);
  const ResolvedExperiment resolved = ResolveForInspection(config);
  CounterRng rng(DeriveSeed(config.seed, 0xE11));
  const AssumptionProfile profile =
      ProfileAssumption(resolved.theta0, resolved.cost, config.eps,
                        samples >= 0 ? samples : config.profile_samples,
                        config.system.k, rng);
  const nlohmann::json doc = ProfileToJson(profile);
  std::cout << doc.dump(2) << '\n';
  if (flags.out_dir) {
    std::filesystem::create_directories(*flags.out_dir);
    WriteJsonFile(doc, *flags.out_dir + "/profile.json");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse LQ adaptive control experiments"};
  app.require_subcommand(1);

  CommonFlags simulate_flags, regret_flags, estimate_flags, certify_flags,
      profile_flags;
  auto* simulate = app.add_subcommand("simulate", "one seeded closed-loop run");
  AddCommon(simulate, simulate_flags);
  auto* regret = app.add_subcommand("regret", "Monte Carlo regret sweep");
  AddCommon(regret, regret_flags);
  auto* estimate = app.add_subcommand("estimate", "estimation accuracy experiment");
  AddCommon(estimate, estimate_flags);
  std::vector<std::int64_t> n_grid;
  estimate->add_option("--n", n_grid, "sample sizes (default: from the bound)");
  auto* certify = app.add_subcommand("certify", "identifiability of the initial gain");
  AddCommon(certify, certify_flags);
  auto* profile = app.add_subcommand("profile", "sample the neighborhood assumption");
  AddCommon(profile, profile_flags);
  int samples = -1;
  profile->add_option("--samples", samples, "neighborhood samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigExit;
  }

  try {
    if (*simulate) return RunRegret(simulate_flags, true);
    if (*regret) return RunRegret(regret_flags, false);
    if (*estimate) return RunEstimate(estimate_flags, n_grid);
    if (*certify) return RunCertify(certify_flags);
    if (*profile) return RunProfile(profile_flags, samples);
  } catch (const Error& e) {
    std::cerr << "error (" << ToString(e.category()) << "): " << e.what() << '\n';
    return ExitCodeFor(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << '\n';
    return kIoExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
