#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparse_lq/lq_model.h"

namespace sparse_lq {

/// Row-wise least-squares problem built from one trajectory segment.
/// Row t of `design` is (x(t)', -(L x(t))'); column u of `targets` holds
/// x_u(t+1).
struct RegressionProblem {
  Eigen::MatrixXd design;
  Eigen::MatrixXd targets;
  std::int64_t n = 0;
  double lambda = 0.0;
};

/// Builds the problem from states first .. first + count - 1 of `traj`
/// (count - 1 transitions). Requires count >= 2.
RegressionProblem BuildProblem(const Trajectory& traj, std::int64_t first,
                               std::int64_t count, const FeedbackGain& gain,
                               double lambda);

/// Whole trajectory.
RegressionProblem BuildProblem(const Trajectory& traj, const FeedbackGain& gain,
                               double lambda);

/// Normalized second moments of one regression, all scaled by 1/n:
/// gram = D'D/n, cross = D'Y/n (q x p), target_sq(u) = ||Y_u||^2/n.
struct GramForm {
  Eigen::MatrixXd gram;
  Eigen::MatrixXd cross;
  Eigen::VectorXd target_sq;
  std::int64_t n = 0;
};

GramForm ToGramForm(const RegressionProblem& problem);

/// Streaming accumulator for closed-loop data under a fixed gain. Only the
/// p x p moments of x are kept; the q-dimensional Gram form follows from
/// y = [I; -L] x. Optionally tracks sum x(t) w(t+1)' for gradient
/// diagnostics.
class SufficientStatistics {
 public:
  explicit SufficientStatistics(int p, bool track_noise = false);

  /// Adds the transition x -> x_next driven by noise w.
  void Add(const Eigen::Ref<const Eigen::VectorXd>& x,
           const Eigen::Ref<const Eigen::VectorXd>& x_next,
           const Eigen::Ref<const Eigen::VectorXd>& w);
  void Add(const Eigen::Ref<const Eigen::VectorXd>& x,
           const Eigen::Ref<const Eigen::VectorXd>& x_next);

  /// Transitions first .. first + count - 2 of a stored trajectory.
  void AddSegment(const Trajectory& traj, std::int64_t first,
                  std::int64_t count);

  std::int64_t n() const { return n_; }
  bool tracks_noise() const { return track_noise_; }

  GramForm ToGramForm(const FeedbackGain& gain) const;
  /// (1/n) [I; -L] sum x(t) w(t+1)'; column u is G-hat for row u.
  Eigen::MatrixXd NoiseCorrelation(const FeedbackGain& gain) const;

 private:
  int p_;
  bool track_noise_;
  std::int64_t n_ = 0;
  Eigen::MatrixXd xx_;
  Eigen::MatrixXd x_next_;
  Eigen::VectorXd next_sq_;
  Eigen::MatrixXd xw_;
};

struct LassoOptions {
  /// Convergence: largest coordinate change in one pass.
  double coordinate_tol = 1e-10;
  int max_passes = 100000;
  /// Subgradient certificate tolerance, scaled by (1 + lambda).
  double kkt_tol = 1e-8;
};

struct LassoResult {
  Eigen::VectorXd coef;
  int passes = 0;
  double objective = 0.0;
  double kkt_violation = 0.0;
};

/// Minimizes 0.5 c'Gc - c'h + 0.5 s + lambda ||c||_1, which equals
/// (1/2n)||y - D c||^2 + lambda ||c||_1 for G = D'D/n, h = D'y/n,
/// s = ||y||^2/n, by cyclic coordinate descent with soft-thresholding.
/// A coordinate whose partial correlation equals lambda exactly is set to 0.
LassoResult SolveLassoGram(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                           const Eigen::Ref<const Eigen::VectorXd>& corr,
                           double target_sq, double lambda,
                           const LassoOptions& options = {},
                           const Eigen::VectorXd* warm_start = nullptr);

/// Objective of the problem above at `coef`.
double LassoObjective(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                      const Eigen::Ref<const Eigen::VectorXd>& corr,
                      double target_sq, double lambda,
                      const Eigen::Ref<const Eigen::VectorXd>& coef);

/// Largest violation of the LASSO optimality conditions at `coef`:
/// |grad_j + lambda sign(c_j)| on the support, (|grad_j| - lambda)_+ off it.
double KktViolation(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                    const Eigen::Ref<const Eigen::VectorXd>& corr,
                    double lambda,
                    const Eigen::Ref<const Eigen::VectorXd>& coef);

/// Row u of the estimate.
LassoResult LassoRow(const RegressionProblem& problem, int u,
                     const LassoOptions& options = {},
                     const Eigen::VectorXd* warm_start = nullptr);

/// Solves every row of a Gram form; `warm_start` is an optional previous
/// estimate.
InteractionMatrix EstimateFromGram(const GramForm& form, int p, double lambda,
                                   const LassoOptions& options = {},
                                   const InteractionMatrix* warm_start = nullptr);

InteractionMatrix EstimateTheta(const RegressionProblem& problem, int p,
                                const LassoOptions& options = {},
                                const InteractionMatrix* warm_start = nullptr);

/// lambda = 6 ell sqrt(log(4q/delta) / (n alpha^2 (1 - rho))).
double RegularizationWeight(double ell, int q, double delta, std::int64_t n,
                            double alpha, double rho);

/// max_u ||Theta1_u - Theta2_u||_2.
double Distance(const InteractionMatrix& t1, const InteractionMatrix& t2);
double Distance(const Eigen::MatrixXd& t1, const Eigen::MatrixXd& t2);

/// (1/2n) sum_t (y_u(t) - D_t theta_row)^2.
double SquaredLoss(const RegressionProblem& problem, int u,
                   const Eigen::Ref<const Eigen::VectorXd>& theta_row);

/// Normalized negative gradient and Hessian of the loss at the true row.
struct GradientHessian {
  Eigen::VectorXd g_hat;
  Eigen::MatrixXd h_hat;
};

/// G-hat = D' w_u / n and H-hat = D'D / n. `noise_u` holds w_u(t+1) for the
/// n transitions of the problem.
GradientHessian ComputeGradientHessian(
    const RegressionProblem& problem,
    const Eigen::Ref<const Eigen::VectorXd>& noise_u);

/// Which matrix inf-norm a condition was evaluated with.
enum class NormConvention {
  kVectorMax,
  /// Maximum absolute row sum.
  kRowSum,
  /// |S| times the largest absolute entry (the union-bound reading).
  kEntrywiseScaled,
  kPopulation,
};

const char* ToString(NormConvention convention);

struct ConditionCheck {
  std::string name;
  NormConvention convention = NormConvention::kVectorMax;
  double value = 0.0;
  double bound = 0.0;
  /// bound - value.
  double margin = 0.0;
  bool pass = false;
};

struct Prop1Report {
  std::vector<ConditionCheck> checks;
  /// lambda alpha / 3 > eps C_min / (4k) - lambda: the two gradient
  /// conditions cannot both be met by one lambda.
  bool gradient_conditions_inconsistent = false;
  /// lambda <= eps C_min / (6k).
  bool lambda_small_enough = false;

  bool AllSamplePass(NormConvention matrix_convention) const;
};

/// Evaluates the sufficient conditions for d(Theta-hat_u, Theta0_u) <= eps on
/// the gradient and Hessian deviations, plus the two population conditions
/// on H. `support` is S (0-based, nonempty, |S| <= k).
Prop1Report CheckProp1Conditions(const GradientHessian& gh,
                                 const Eigen::MatrixXd& h_pop,
                                 const std::vector<int>& support, double alpha,
                                 double c_min, double eps, double lambda, int k);

}  // namespace sparse_lq
