#pragma once

#include <optional>

#include <Eigen/Core>

#include "sparse_lq/lq_model.h"

namespace sparse_lq {

struct RiccatiOptions {
  double tol = 1e-10;
  int max_iter = 100000;
  /// Starting iterate; defaults to Q. Any PSD start converges to the
  /// stabilizing solution under stabilizability and detectability.
  std::optional<Eigen::MatrixXd> initial;
  /// Iterates whose entries exceed this magnitude are treated as divergent
  /// (the pair is not stabilizable).
  double blowup = 1e14;
};

/// Cost-to-go matrix K(Theta) and the optimal gain L(Theta).
struct RiccatiSolution {
  Eigen::MatrixXd k_mat;
  FeedbackGain gain;
  int iterations = 0;
  /// Operator inf-norm of K - F(K), F the Riccati map.
  double residual = 0.0;
  double closed_loop_spectral_radius = 0.0;
};

/// Value iteration K <- Q + A'KA - A'KB (B'KB + R)^{-1} B'KA until successive
/// iterates differ by at most `tol` in operator inf-norm.
RiccatiSolution SolveRiccati(const InteractionMatrix& theta,
                             const CostMatrices& cost,
                             const RiccatiOptions& options = {});

/// One application of the Riccati map F(K).
Eigen::MatrixXd RiccatiMap(const InteractionMatrix& theta,
                           const CostMatrices& cost, const Eigen::MatrixXd& k);

/// ||K - F(K)||_inf, evaluated from scratch.
double RiccatiResidual(const InteractionMatrix& theta, const CostMatrices& cost,
                       const Eigen::MatrixXd& k);

/// (B'KB + R)^{-1} B'KA.
FeedbackGain GainFromCostToGo(const InteractionMatrix& theta,
                              const CostMatrices& cost,
                              const Eigen::MatrixXd& k);

/// J(Theta) = trace K(Theta). With identity noise covariance the optimal
/// average cost equals E[w'Kw] = trace K.
double OptimalAverageCost(const InteractionMatrix& theta,
                          const CostMatrices& cost,
                          const RiccatiOptions& options = {});

/// Average cost and its gradient with respect to [A, B]:
///   dJ/dTheta = 2 K (A - BL) S [I, -L'],   S = (A-BL) S (A-BL)' + I.
/// The L-dependence drops out because L(Theta) is stationary for the cost.
struct CostGradient {
  double value = 0.0;
  Eigen::MatrixXd gradient;
  RiccatiSolution solution;
};
CostGradient AverageCostGradient(const InteractionMatrix& theta,
                                 const CostMatrices& cost,
                                 const RiccatiOptions& options = {});

struct LyapunovOptions {
  double tol = 1e-10;
  int max_iter = 100000;
};

/// Stationary covariance Lambda of x under u = -L x.
struct LyapunovSolution {
  Eigen::MatrixXd lambda_mat;
  int iterations = 0;
  /// ||Lambda - M Lambda M' - I||_inf, M = A - BL.
  double residual = 0.0;
};

/// Iterates Lambda <- M Lambda M' + I from Lambda = I. Requires
/// ||A - BL||_2 < 1; otherwise throws StabilityError with the norm.
LyapunovSolution SolveLyapunov(const InteractionMatrix& theta,
                               const FeedbackGain& gain,
                               const LyapunovOptions& options = {});

/// A - BL.
Eigen::MatrixXd ClosedLoopMatrix(const InteractionMatrix& theta,
                                 const FeedbackGain& gain);

/// ||A - BL||_2.
double ClosedLoopNorm(const InteractionMatrix& theta, const FeedbackGain& gain);

}  // namespace sparse_lq
