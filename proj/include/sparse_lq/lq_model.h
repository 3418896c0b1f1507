#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "sparse_lq/rng.h"

namespace sparse_lq {

/// Interaction matrix Theta = [A, B] of a linear system with p states and
/// r inputs, stored as one p x (p + r) block so rows can be handled as
/// regression targets.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;
  InteractionMatrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

  /// Builds from a stacked p x q matrix.
  static InteractionMatrix FromStacked(const Eigen::MatrixXd& theta, int p);

  int p() const { return p_; }
  int r() const { return static_cast<int>(theta_.cols()) - p_; }
  int q() const { return static_cast<int>(theta_.cols()); }

  auto a() const { return theta_.leftCols(p_); }
  auto b() const { return theta_.rightCols(theta_.cols() - p_); }
  const Eigen::MatrixXd& stacked() const { return theta_; }
  Eigen::MatrixXd& mutable_stacked() { return theta_; }

  Eigen::RowVectorXd row(int u) const { return theta_.row(u); }

  /// Column indices of the nonzero entries of row u of [A, B].
  std::vector<int> RowSupport(int u) const;
  int MaxRowSupport() const;
  bool IsKSparse(int k) const { return MaxRowSupport() <= k; }

  /// Smallest nonzero |entry|; +inf when the matrix is zero.
  double MinNonzeroMagnitude() const;

  bool operator==(const InteractionMatrix& other) const {
    return p_ == other.p_ && theta_ == other.theta_;
  }

 private:
  Eigen::MatrixXd theta_;
  int p_ = 0;
};

/// Stage-cost weights. Both must be symmetric PSD.
struct CostMatrices {
  CostMatrices() = default;
  CostMatrices(Eigen::MatrixXd q, Eigen::MatrixXd r);

  static CostMatrices Identity(int p, int r);

  Eigen::MatrixXd q_mat;
  Eigen::MatrixXd r_mat;
};

/// Linear state feedback u = -L x.
struct FeedbackGain {
  FeedbackGain() = default;
  explicit FeedbackGain(Eigen::MatrixXd gain) : l(std::move(gain)) {}

  static FeedbackGain Zero(int r, int p) {
    return FeedbackGain(Eigen::MatrixXd::Zero(r, p));
  }

  int r() const { return static_cast<int>(l.rows()); }
  int p() const { return static_cast<int>(l.cols()); }

  /// [I; -L], a q x p matrix mapping x to y = [x; u].
  Eigen::MatrixXd Extended() const;

  /// max(1, max_j ||L_j||_2) over the rows of L.
  double RowNormBound() const;

  Eigen::MatrixXd l;
};

/// Closed-loop trajectory. Column t of `states` is x(t), of `controls` u(t),
/// of `noises` w(t+1); costs(t) = c(t).
struct Trajectory {
  Eigen::MatrixXd states;
  Eigen::MatrixXd controls;
  Eigen::MatrixXd noises;
  Eigen::VectorXd costs;

  std::int64_t steps() const { return costs.size(); }
};

struct RolloutOptions {
  double divergence_cap = 1e8;
};

/// A x + B u + w.
Eigen::VectorXd Step(const InteractionMatrix& theta,
                     const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& u,
                     const Eigen::Ref<const Eigen::VectorXd>& w);

/// x^T Q x + u^T R u.
double StageCost(const CostMatrices& cost,
                 const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& u);

/// Simulates n_steps of x(t+1) = A x + B u + w(t+1) under u = -L x.
/// Throws DivergenceError once ||x(t)||_inf exceeds the divergence cap.
Trajectory Rollout(const InteractionMatrix& theta, const FeedbackGain& gain,
                   const CostMatrices& cost, std::int64_t n_steps,
                   NoiseSource& noise, const Eigen::VectorXd& x0,
                   const RolloutOptions& options = {});

/// Same as above with x(0) = 0.
Trajectory Rollout(const InteractionMatrix& theta, const FeedbackGain& gain,
                   const CostMatrices& cost, std::int64_t n_steps,
                   NoiseSource& noise, const RolloutOptions& options = {});

/// Largest replay error max_t ||x(t+1) - A x(t) - B u(t) - w(t+1)||_inf.
double ReplayError(const InteractionMatrix& theta, const Trajectory& traj);

/// Rank of [B, AB, ..., A^{p-1} B] at relative threshold `tol`.
int ControllabilityRank(const InteractionMatrix& theta, double tol = 1e-8);

/// Every state is reachable from some input through the directed graph with
/// an edge j -> u whenever Theta(u, j) != 0.
bool InputsReachAllStates(const InteractionMatrix& theta);

struct GenerationOptions {
  int max_retries = 100;
  double min_magnitude = 0.5;
  double max_magnitude = 1.5;
};

/// Random k-sparse [A, B] with ||A||_2 = spectral_target, every state reachable
/// from the inputs and a full-rank controllability matrix.
InteractionMatrix GenerateSparseSystem(int p, int r, int k,
                                       double spectral_target,
                                       CounterRng& rng,
                                       const GenerationOptions& options = {});

}  // namespace sparse_lq
