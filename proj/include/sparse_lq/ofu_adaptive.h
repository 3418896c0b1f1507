#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparse_lq/identifiability.h"
#include "sparse_lq/lq_model.h"
#include "sparse_lq/riccati.h"
#include "sparse_lq/rng.h"
#include "sparse_lq/sparse_estimator.h"

namespace sparse_lq {

/// Row-wise l2 ball {Theta : d(Theta, center) <= radius}.
struct ConfidenceSet {
  InteractionMatrix center;
  double radius = 0.0;
  int episode = 0;

  bool Contains(const InteractionMatrix& theta, double slack = 1e-12) const;
  /// Clips every row difference to the ball; the identity on members.
  InteractionMatrix Project(const InteractionMatrix& theta) const;
  void ProjectInPlace(Eigen::MatrixXd& stacked) const;
};

/// Radius eps * 2^-i. Requires i >= 1.
ConfidenceSet BuildConfidenceSet(const InteractionMatrix& theta_hat,
                                 int episode_index, double eps);

struct OfuOptions {
  int starts = 16;
  int iterations = 200;
  /// First trial step as a fraction of the radius; halved on failure.
  double initial_step_fraction = 0.1;
  int max_halvings = 30;
  /// Central differences with h = 1e-6 (1 + radius) instead of the
  /// closed-form gradient.
  bool finite_difference = false;
  RiccatiOptions riccati;
};

struct OfuResult {
  InteractionMatrix theta;
  double j_value = 0.0;
  double j_center = 0.0;
  /// Parameters whose Riccati equation was solved (including failures).
  int candidates = 0;
  int riccati_failures = 0;
};

/// Approximates argmin of J over the set by multi-start projected descent.
/// The result is never worse than the center.
OfuResult OfuSelect(const ConfidenceSet& omega, const CostMatrices& cost,
                    const OfuOptions& options, CounterRng& rng);

/// Central-difference gradient of J = trace K at theta.
Eigen::MatrixXd FiniteDifferenceCostGradient(const InteractionMatrix& theta,
                                             const CostMatrices& cost,
                                             double h,
                                             const RiccatiOptions& options = {});

FeedbackGain SynthesizeController(const InteractionMatrix& theta_tilde,
                                  const CostMatrices& cost,
                                  const RiccatiOptions& options = {});

enum class ControlMode { kAdaptive, kOracle, kFixedGain };

const char* ToString(ControlMode mode);
ControlMode ParseControlMode(const std::string& text);

/// Everything one closed-loop run needs. theta0 is only seen by the
/// simulator (and the oracle mode).
struct AdaptiveConfig {
  InteractionMatrix theta0;
  CostMatrices cost;
  FeedbackGain initial_gain;
  int k = 1;
  double eps = 1.0;
  double delta = 0.1;
  /// l(Theta0, eps), used for lambda.
  double ell = 1.0;
  /// Identifiability constants of the initial gain, used for lambda.
  double alpha = 1.0;
  double rho = 0.0;
  std::int64_t horizon = 1;
  std::int64_t n0 = 1;
  std::int64_t n1 = 1;
  ControlMode mode = ControlMode::kAdaptive;
  OfuOptions ofu;
  LassoOptions lasso;
  RolloutOptions rollout;
  RiccatiOptions riccati;
  /// Overrides trace K(Theta0) as the regret baseline.
  std::optional<double> j_star;
  /// Keep states/controls/noises; costs are always kept.
  bool keep_trajectory = true;
};

struct EpisodeRecord {
  int index = 0;
  std::int64_t start = 0;
  std::int64_t end = 0;
  /// Transitions the estimate for this episode was fitted on.
  std::int64_t samples = 0;
  double lambda = 0.0;
  /// Present for episodes i >= 1 of adaptive runs.
  std::optional<InteractionMatrix> theta_hat;
  std::optional<ConfidenceSet> omega;
  std::optional<InteractionMatrix> theta_tilde;
  FeedbackGain gain;
  double j_tilde = 0.0;
  double j_hat = 0.0;
  int candidates = 0;
  int riccati_failures = 0;
};

enum class RunStatus { kComplete, kDiverged };

struct RunRecord {
  std::uint64_t seed = 0;
  ControlMode mode = ControlMode::kAdaptive;
  RunStatus status = RunStatus::kComplete;
  std::string failure;
  EpisodeSchedule schedule;
  Trajectory trajectory;
  std::vector<EpisodeRecord> episodes;
  Eigen::VectorXd regret;
  double j_star = 0.0;
  /// Per-step ||w(t+1)||, kept for event checks.
  Eigen::VectorXd noise_norms;
  /// Per-step ||x(t)|| for t = 0..T.
  Eigen::VectorXd state_norms;

  std::int64_t steps() const { return trajectory.steps(); }
  /// Gain in force at step t.
  const FeedbackGain& GainAt(std::int64_t t) const;
};

/// Runs the episodic algorithm (or the oracle / fixed-gain baselines) for
/// config.horizon steps with noise drawn from `seed`.
RunRecord RunAdaptiveControl(const AdaptiveConfig& config, std::uint64_t seed);

struct EventReport {
  double noise_threshold = 0.0;
  double state_threshold = 0.0;
  /// Per step t = 1..T: ||w(t)|| <= 2 sqrt(p log(T/delta)).
  std::vector<bool> e2_steps;
  /// Per episode i >= 1 with an estimate: Theta0 in Omega^(i).
  std::vector<bool> e1_episodes;
  /// Per state t = 0..T: ||x(t)|| <= 2/(1-rho) sqrt(p log(T/delta)).
  std::vector<bool> state_bound_steps;
  bool e1 = true;
  bool e2 = true;
  bool state_bound = true;
};

/// `rho` is the closed-loop bound used for the state-norm check.
EventReport CheckGoodEvents(const RunRecord& record,
                            const InteractionMatrix& theta0, double delta,
                            double rho);

}  // namespace sparse_lq
