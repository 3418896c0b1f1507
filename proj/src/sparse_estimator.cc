#include "sparse_lq/sparse_estimator.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "sparse_lq/errors.h"
#include "sparse_lq/linalg.h"

namespace sparse_lq {

RegressionProblem BuildProblem(const Trajectory& traj, std::int64_t first,
                               std::int64_t count, const FeedbackGain& gain,
                               double lambda) {
  Require(count >= 2, "BuildProblem: segment must hold at least two states");
  Require(first >= 0 && first + count <= traj.states.cols(),
          "BuildProblem: segment out of range");
  Require(lambda >= 0.0, "BuildProblem: lambda must be nonnegative");
  const int p = static_cast<int>(traj.states.rows());
  Require(gain.l.cols() == p, "BuildProblem: gain must be r x p");

  RegressionProblem problem;
  problem.n = count - 1;
  problem.lambda = lambda;
  const auto x = traj.states.middleCols(first, count - 1);
  const Eigen::MatrixXd extended = gain.Extended();
  problem.design = (extended * x).transpose();
  problem.targets = traj.states.middleCols(first + 1, count - 1).transpose();
  return problem;
}

RegressionProblem BuildProblem(const Trajectory& traj, const FeedbackGain& gain,
                               double lambda) {
  return BuildProblem(traj, 0, traj.states.cols(), gain, lambda);
}

GramForm ToGramForm(const RegressionProblem& problem) {
  Require(problem.n >= 1, "ToGramForm: empty problem");
  const double scale = 1.0 / static_cast<double>(problem.n);
  GramForm form;
  form.n = problem.n;
  form.gram = scale * (problem.design.transpose() * problem.design);
  form.cross = scale * (problem.design.transpose() * problem.targets);
  form.target_sq = scale * problem.targets.colwise().squaredNorm().transpose();
  return form;
}

SufficientStatistics::SufficientStatistics(int p, bool track_noise)
    : p_(p),
      track_noise_(track_noise),
      xx_(Eigen::MatrixXd::Zero(p, p)),
      x_next_(Eigen::MatrixXd::Zero(p, p)),
      next_sq_(Eigen::VectorXd::Zero(p)),
      xw_(track_noise ? Eigen::MatrixXd::Zero(p, p) : Eigen::MatrixXd()) {
  Require(p >= 1, "SufficientStatistics: p must be positive");
}

void SufficientStatistics::Add(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& x_next) {
  xx_.selfadjointView<Eigen::Lower>().rankUpdate(x);
  x_next_.noalias() += x * x_next.transpose();
  next_sq_ += x_next.cwiseAbs2();
  ++n_;
}

void SufficientStatistics::Add(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& x_next,
                               const Eigen::Ref<const Eigen::VectorXd>& w) {
  Add(x, x_next);
  if (track_noise_) xw_.noalias() += x * w.transpose();
}

void SufficientStatistics::AddSegment(const Trajectory& traj,
                                      std::int64_t first, std::int64_t count) {
  Require(first >= 0 && first + count <= traj.states.cols(),
          "AddSegment: segment out of range");
  for (std::int64_t t = first; t + 1 < first + count; ++t) {
    if (track_noise_) {
      Add(traj.states.col(t), traj.states.col(t + 1), traj.noises.col(t));
    } else {
      Add(traj.states.col(t), traj.states.col(t + 1));
    }
  }
}

GramForm SufficientStatistics::ToGramForm(const FeedbackGain& gain) const {
  Require(n_ >= 1, "SufficientStatistics: no transitions recorded");
  Require(gain.l.cols() == p_, "SufficientStatistics: gain must be r x p");
  const double scale = 1.0 / static_cast<double>(n_);
  const Eigen::MatrixXd xx = xx_.selfadjointView<Eigen::Lower>();
  const Eigen::MatrixXd extended = gain.Extended();
  GramForm form;
  form.n = n_;
  form.gram = scale * (extended * xx * extended.transpose());
  form.cross = scale * (extended * x_next_);
  form.target_sq = scale * next_sq_;
  return form;
}

Eigen::MatrixXd SufficientStatistics::NoiseCorrelation(
    const FeedbackGain& gain) const {
  Require(track_noise_, "SufficientStatistics: noise tracking disabled");
  Require(n_ >= 1, "SufficientStatistics: no transitions recorded");
  return (gain.Extended() * xw_) / static_cast<double>(n_);
}

double LassoObjective(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                      const Eigen::Ref<const Eigen::VectorXd>& corr,
                      double target_sq, double lambda,
                      const Eigen::Ref<const Eigen::VectorXd>& coef) {
  return 0.5 * coef.dot(gram * coef) - coef.dot(corr) + 0.5 * target_sq +
         lambda * coef.lpNorm<1>();
}

double KktViolation(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                    const Eigen::Ref<const Eigen::VectorXd>& corr,
                    double lambda,
                    const Eigen::Ref<const Eigen::VectorXd>& coef) {
  const Eigen::VectorXd grad = gram * coef - corr;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    if (coef[j] != 0.0) {
      const double sign = coef[j] > 0.0 ? 1.0 : -1.0;
      worst = std::max(worst, std::abs(grad[j] + lambda * sign));
    } else {
      worst = std::max(worst, std::abs(grad[j]) - lambda);
    }
  }
  return worst;
}

LassoResult SolveLassoGram(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                           const Eigen::Ref<const Eigen::VectorXd>& corr,
                           double target_sq, double lambda,
                           const LassoOptions& options,
                           const Eigen::VectorXd* warm_start) {
  const Eigen::Index q = gram.rows();
  Require(gram.cols() == q && corr.size() == q,
          "SolveLassoGram: inconsistent dimensions");
  Require(lambda >= 0.0, "SolveLassoGram: lambda must be nonnegative");

  LassoResult result;
  result.coef = Eigen::VectorXd::Zero(q);
  if (warm_start != nullptr) {
    Require(warm_start->size() == q, "SolveLassoGram: warm start has wrong size");
    result.coef = *warm_start;
  }
  // grad = G c - h, kept current across coordinate updates.
  Eigen::VectorXd grad = gram * result.coef - corr;
  const double kkt_tol = options.kkt_tol * (1.0 + lambda);

  int pass = 0;
  for (; pass < options.max_passes; ++pass) {
    double largest_change = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      const double diag = gram(j, j);
      const double old = result.coef[j];
      double updated = 0.0;
      if (diag > 0.0) {
        const double z = diag * old - grad[j];
        if (z > lambda) {
          updated = (z - lambda) / diag;
        } else if (z < -lambda) {
          updated = (z + lambda) / diag;
        }
      }
      const double delta = updated - old;
      if (delta != 0.0) {
        result.coef[j] = updated;
        grad += gram.col(j) * delta;
        largest_change = std::max(largest_change, std::abs(delta));
      }
    }
    if (largest_change <= options.coordinate_tol) {
      // Refresh the gradient to shed accumulated rounding before certifying.
      grad = gram * result.coef - corr;
      if (KktViolation(gram, corr, lambda, result.coef) <= kkt_tol) {
        ++pass;
        break;
      }
    }
  }
  result.passes = pass;
  result.kkt_violation = KktViolation(gram, corr, lambda, result.coef);
  result.objective = LassoObjective(gram, corr, target_sq, lambda, result.coef);
  if (result.kkt_violation > kkt_tol) {
    std::ostringstream msg;
    msg << "SolveLassoGram: no convergence within " << options.max_passes
        << " passes (KKT violation " << result.kkt_violation << ")";
    throw ConvergenceError(msg.str(), result.kkt_violation);
  }
  return result;
}

LassoResult LassoRow(const RegressionProblem& problem, int u,
                     const LassoOptions& options,
                     const Eigen::VectorXd* warm_start) {
  Require(problem.n >= 1, "LassoRow: problem has no samples");
  Require(u >= 0 && u < problem.targets.cols(), "LassoRow: row out of range");
  const double scale = 1.0 / static_cast<double>(problem.n);
  const Eigen::MatrixXd gram =
      scale * (problem.design.transpose() * problem.design);
  const Eigen::VectorXd corr =
      scale * (problem.design.transpose() * problem.targets.col(u));
  const double target_sq = scale * problem.targets.col(u).squaredNorm();
  return SolveLassoGram(gram, corr, target_sq, problem.lambda, options,
                        warm_start);
}

InteractionMatrix EstimateFromGram(const GramForm& form, int p, double lambda,
                                   const LassoOptions& options,
                                   const InteractionMatrix* warm_start) {
  Require(form.cross.cols() == p, "EstimateFromGram: expected p target rows");
  const Eigen::Index q = form.gram.rows();
  Eigen::MatrixXd theta(p, q);
  for (int u = 0; u < p; ++u) {
    Eigen::VectorXd start;
    if (warm_start != nullptr) start = warm_start->stacked().row(u).transpose();
    try {
      const LassoResult row =
          SolveLassoGram(form.gram, form.cross.col(u), form.target_sq[u], lambda,
                         options, warm_start != nullptr ? &start : nullptr);
      theta.row(u) = row.coef.transpose();
    } catch (const ConvergenceError& e) {
      std::ostringstream msg;
      msg << "row " << u << ": " << e.what();
      throw ConvergenceError(msg.str(), e.last_residual());
    }
  }
  return InteractionMatrix::FromStacked(theta, p);
}

InteractionMatrix EstimateTheta(const RegressionProblem& problem, int p,
                                const LassoOptions& options,
                                const InteractionMatrix* warm_start) {
  return EstimateFromGram(ToGramForm(problem), p, problem.lambda, options,
                          warm_start);
}

double RegularizationWeight(double ell, int q, double delta, std::int64_t n,
                            double alpha, double rho) {
  Require(delta > 0.0 && delta < 1.0, "RegularizationWeight: need 0 < delta < 1");
  Require(alpha > 0.0 && alpha <= 1.0, "RegularizationWeight: need 0 < alpha <= 1");
  Require(rho >= 0.0 && rho < 1.0, "RegularizationWeight: need 0 <= rho < 1");
  Require(n >= 1, "RegularizationWeight: need n >= 1");
  Require(ell >= 1.0, "RegularizationWeight: need ell >= 1");
  Require(q >= 1, "RegularizationWeight: need q >= 1");
  const double log_term = std::log(4.0 * q / delta);
  return 6.0 * ell *
         std::sqrt(log_term / (static_cast<double>(n) * alpha * alpha * (1.0 - rho)));
}

double Distance(const Eigen::MatrixXd& t1, const Eigen::MatrixXd& t2) {
  Require(t1.rows() == t2.rows() && t1.cols() == t2.cols(),
          "Distance: shape mismatch");
  if (t1.size() == 0) return 0.0;
  return (t1 - t2).rowwise().norm().maxCoeff();
}

double Distance(const InteractionMatrix& t1, const InteractionMatrix& t2) {
  Require(t1.p() == t2.p(), "Distance: state dimensions differ");
  return Distance(t1.stacked(), t2.stacked());
}

double SquaredLoss(const RegressionProblem& problem, int u,
                   const Eigen::Ref<const Eigen::VectorXd>& theta_row) {
  Require(u >= 0 && u < problem.targets.cols(), "SquaredLoss: row out of range");
  Require(theta_row.size() == problem.design.cols(),
          "SquaredLoss: coefficient size mismatch");
  const Eigen::VectorXd residual =
      problem.targets.col(u) - problem.design * theta_row;
  return residual.squaredNorm() / (2.0 * static_cast<double>(problem.n));
}

GradientHessian ComputeGradientHessian(
    const RegressionProblem& problem,
    const Eigen::Ref<const Eigen::VectorXd>& noise_u) {
  Require(noise_u.size() == problem.n,
          "ComputeGradientHessian: noise length must equal n");
  const double scale = 1.0 / static_cast<double>(problem.n);
  GradientHessian gh;
  gh.g_hat = scale * (problem.design.transpose() * noise_u);
  gh.h_hat = scale * (problem.design.transpose() * problem.design);
  return gh;
}

const char* ToString(NormConvention convention) {
  switch (convention) {
    case NormConvention::kVectorMax:
      return "vector-max";
    case NormConvention::kRowSum:
      return "row-sum";
    case NormConvention::kEntrywiseScaled:
      return "entrywise-scaled";
    case NormConvention::kPopulation:
      return "population";
  }
  return "unknown";
}

bool Prop1Report::AllSamplePass(NormConvention matrix_convention) const {
  for (const auto& check : checks) {
    if (check.convention == NormConvention::kPopulation) continue;
    if (check.convention != NormConvention::kVectorMax &&
        check.convention != matrix_convention) {
      continue;
    }
    if (!check.pass) return false;
  }
  return true;
}

namespace {

ConditionCheck MakeCheck(std::string name, NormConvention convention,
                         double value, double bound) {
  ConditionCheck check;
  check.name = std::move(name);
  check.convention = convention;
  check.value = value;
  check.bound = bound;
  check.margin = bound - value;
  check.pass = value <= bound;
  return check;
}

Eigen::MatrixXd Submatrix(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  }
  return out;
}

}  // namespace

Prop1Report CheckProp1Conditions(const GradientHessian& gh,
                                 const Eigen::MatrixXd& h_pop,
                                 const std::vector<int>& support, double alpha,
                                 double c_min, double eps, double lambda,
                                 int k) {
  const int q = static_cast<int>(gh.g_hat.size());
  Require(!support.empty() && static_cast<int>(support.size()) <= k,
          "CheckProp1Conditions: need 1 <= |S| <= k");
  Require(gh.h_hat.rows() == q && h_pop.rows() == q && h_pop.cols() == q,
          "CheckProp1Conditions: dimension mismatch");
  std::vector<bool> in_support(q, false);
  for (int j : support) {
    Require(j >= 0 && j < q, "CheckProp1Conditions: support index out of range");
    in_support[j] = true;
  }
  std::vector<int> complement;
  for (int j = 0; j < q; ++j) {
    if (!in_support[j]) complement.push_back(j);
  }

  Prop1Report report;
  const double s = static_cast<double>(support.size());
  double g_support = 0.0;
  for (int j : support) g_support = std::max(g_support, std::abs(gh.g_hat[j]));

  report.checks.push_back(MakeCheck("grad_inf", NormConvention::kVectorMax,
                                    gh.g_hat.cwiseAbs().maxCoeff(),
                                    lambda * alpha / 3.0));
  report.checks.push_back(MakeCheck("grad_support_inf",
                                    NormConvention::kVectorMax, g_support,
                                    eps * c_min / (4.0 * k) - lambda));

  const double hess_bound = alpha / 12.0 * c_min / std::sqrt(static_cast<double>(k));
  const Eigen::MatrixXd deviation = gh.h_hat - h_pop;
  const Eigen::MatrixXd off = Submatrix(deviation, complement, support);
  const Eigen::MatrixXd on = Submatrix(deviation, support, support);
  report.checks.push_back(MakeCheck("hess_offsupport", NormConvention::kRowSum,
                                    OperatorInfNorm(off), hess_bound));
  report.checks.push_back(MakeCheck("hess_offsupport",
                                    NormConvention::kEntrywiseScaled,
                                    s * MaxAbsEntry(off), hess_bound));
  report.checks.push_back(MakeCheck("hess_support", NormConvention::kRowSum,
                                    OperatorInfNorm(on), hess_bound));
  report.checks.push_back(MakeCheck("hess_support",
                                    NormConvention::kEntrywiseScaled,
                                    s * MaxAbsEntry(on), hess_bound));

  // Population conditions on H: minimum eigenvalue and irrepresentability.
  const Eigen::MatrixXd h_ss = Submatrix(h_pop, support, support);
  const Eigen::MatrixXd h_cs = Submatrix(h_pop, complement, support);
  const double min_eig = MinSymmetricEigenvalue(h_ss);
  ConditionCheck eig = MakeCheck("pop_min_eigenvalue", NormConvention::kPopulation,
                                 c_min, min_eig);
  report.checks.push_back(eig);
  const Eigen::MatrixXd ratio =
      h_ss.completeOrthogonalDecomposition().solve(h_cs.transpose()).transpose();
  report.checks.push_back(MakeCheck("pop_irrepresentable",
                                    NormConvention::kPopulation,
                                    OperatorInfNorm(ratio), 1.0 - alpha));

  report.gradient_conditions_inconsistent =
      lambda * alpha / 3.0 > eps * c_min / (4.0 * k) - lambda;
  report.lambda_small_enough = lambda <= eps * c_min / (6.0 * k);
  return report;
}

}  // namespace sparse_lq
