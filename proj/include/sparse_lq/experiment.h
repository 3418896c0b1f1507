#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparse_lq/experiment_config.h"
#include "sparse_lq/ofu_adaptive.h"

namespace sparse_lq {

/// R(t) = sum_{s<=t} (c(s) - j_star), accumulated left to right.
Eigen::VectorXd CumulativeRegret(const Eigen::VectorXd& costs, double j_star);

/// Seed of trial i: DeriveSeed(master, i).
std::uint64_t TrialSeed(std::uint64_t master, int trial);

/// Calls fn(i) for i in [0, count) on up to `threads` workers (0 means
/// hardware concurrency). The first exception is rethrown after all workers
/// stop.
void ParallelFor(int count, int threads, const std::function<void(int)>& fn);

/// Least-squares slope of log y against log x. NaN if any y <= 0.
double LogLogSlope(const std::vector<double>& x, const std::vector<double>& y);

/// Linear-interpolated quantile of `values` (copied and sorted).
double Quantile(std::vector<double> values, double prob);

struct TrialOutcome {
  int trial = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  bool diverged = false;
  std::string error;
  Eigen::VectorXd costs;
  Eigen::VectorXd regret;
  /// Final episode's d(Theta-hat, Theta0); NaN without an estimate.
  double final_distance = 0.0;
  int episodes = 0;
  bool e1 = false;
  bool e2 = false;
  bool state_bound = false;
};

struct RegretReport {
  ExperimentConfig config;
  std::uint64_t master_seed = 0;
  double j_star = 0.0;
  IdentifiabilityCertificate certificate;
  double ell = 1.0;
  std::int64_t n0 = 0;
  std::int64_t n1 = 0;
  std::vector<std::string> warnings;
  std::vector<TrialOutcome> trials;
  std::vector<std::int64_t> horizons;
  /// Per horizon, over successful trials.
  std::vector<double> mean_regret;
  std::vector<double> stderr_regret;
  /// Fitted exponent of mean R(T) against T (NaN if undefined).
  double slope = 0.0;
  /// Per step over successful trials.
  Eigen::VectorXd mean_curve;
  Eigen::VectorXd q10_curve;
  Eigen::VectorXd q50_curve;
  Eigen::VectorXd q90_curve;
  double e1_frequency = 0.0;
  double e2_frequency = 0.0;
  double state_bound_frequency = 0.0;
  int failed_trials = 0;
};

/// Runs config.trials seeded runs of length config.horizon and reads the
/// regret at every checkpoint in config.horizons off each run. Episode
/// schedules only depend on T through truncation, so the prefix of a long
/// run equals a shorter run with the same seed.
RegretReport RunExperiment(const ResolvedExperiment& experiment);

struct EstimationTrial {
  std::int64_t n = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double distance = 0.0;
  bool success = false;
  double lambda = 0.0;
};

struct EstimationReport {
  ExperimentConfig config;
  std::uint64_t master_seed = 0;
  IdentifiabilityCertificate certificate;
  double eps = 0.0;
  std::vector<std::int64_t> n_grid;
  std::vector<EstimationTrial> trials;
  /// Per grid point.
  std::vector<double> success_frequency;
  std::vector<double> mean_distance;
  std::vector<std::string> warnings;
};

/// Fits Theta-hat from n closed-loop transitions under the initial gain,
/// with lambda from the Theorem-1 formula, for every trial and every n.
EstimationReport EstimationExperiment(const ResolvedExperiment& experiment);

/// One streamed estimation: rollout of n transitions from x(0) = 0 under
/// `gain`, then the LASSO estimate.
InteractionMatrix EstimateFromRollout(const InteractionMatrix& theta0,
                                      const FeedbackGain& gain, std::int64_t n,
                                      double lambda, std::uint64_t seed);

}  // namespace sparse_lq
