#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "sparse_lq/identifiability.h"
#include "sparse_lq/lq_model.h"
#include "sparse_lq/ofu_adaptive.h"

namespace sparse_lq {

/// How the system under test is obtained: explicit matrices, or a seeded
/// call to GenerateSparseSystem.
struct SystemSpec {
  int p = 2;
  int r = 1;
  int k = 1;
  double spectral_target = 0.5;
  std::uint64_t generation_seed = 1;
  std::optional<Eigen::MatrixXd> a;
  std::optional<Eigen::MatrixXd> b;
};

/// Initial controller L(0): "optimal" is L(Theta0) scaled by `scale`,
/// "zero" is L = 0, "matrix" uses `l`.
struct InitialGainSpec {
  std::string source = "optimal";
  double scale = 1.0;
  std::optional<Eigen::MatrixXd> l;
};

struct EstimationSpec {
  /// Sample sizes; empty means the Eq.-10-style count from SampleComplexity.
  std::vector<std::int64_t> n_grid;
  /// Threshold for d(Theta-hat, Theta0); defaults to algorithm eps.
  std::optional<double> eps;
};

struct ExperimentConfig {
  SystemSpec system;
  std::optional<Eigen::MatrixXd> q_mat;
  std::optional<Eigen::MatrixXd> r_mat;
  InitialGainSpec initial_gain;
  double eps = 1.0;
  double delta = 0.1;
  /// l(Theta0, eps); absent means "auto" (sampled by ProfileAssumption).
  std::optional<double> ell;
  int profile_samples = 64;
  /// Episode lengths; absent means the formulas of the algorithm table.
  std::optional<std::int64_t> n0;
  std::optional<std::int64_t> n1;
  std::int64_t horizon = 1024;
  /// Checkpoints for the regret sweep; defaults to {horizon}.
  std::vector<std::int64_t> horizons;
  int trials = 1;
  std::uint64_t seed = 1;
  ControlMode mode = ControlMode::kAdaptive;
  std::string out_dir = "out";
  int threads = 0;
  bool allow_large = false;
  bool allow_uncertified = false;
  /// "riccati" (trace K(Theta0)) or "simulated".
  std::string j_star_source = "riccati";
  std::int64_t j_star_steps = 1000000;
  OfuOptions ofu;
  EstimationSpec estimation;
};

/// Parses the documented JSON schema; unknown keys are rejected.
ExperimentConfig ConfigFromJson(const nlohmann::json& doc);
ExperimentConfig LoadConfig(const std::string& path);
nlohmann::json ConfigToJson(const ExperimentConfig& config);

/// Domain and guardrail checks; throws ConfigError.
void ValidateConfig(const ExperimentConfig& config);

/// Concrete system, certificate and algorithm inputs derived from a config.
struct ResolvedExperiment {
  ExperimentConfig config;
  InteractionMatrix theta0;
  CostMatrices cost;
  FeedbackGain initial_gain;
  IdentifiabilityCertificate certificate;
  double ell = 1.0;
  double ell0 = 1.0;
  std::int64_t n0 = 1;
  std::int64_t n1 = 1;
  double j_star = 0.0;
  std::vector<std::string> warnings;

  AdaptiveConfig ToAdaptiveConfig() const;
};

/// Builds the system, certifies the initial gain and fills "auto" values.
/// An uncertified gain is an error unless allow_uncertified is set; the
/// paper-length schedule is an error when the gain is not certified.
ResolvedExperiment Resolve(const ExperimentConfig& config);

nlohmann::json MatrixToJson(const Eigen::MatrixXd& m);
Eigen::MatrixXd MatrixFromJson(const nlohmann::json& j, const std::string& what);

}  // namespace sparse_lq
