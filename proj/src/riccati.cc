#include "sparse_lq/riccati.h"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

#include "sparse_lq/errors.h"
#include "sparse_lq/linalg.h"

namespace sparse_lq {

namespace {

void CheckDimensions(const InteractionMatrix& theta, const CostMatrices& cost) {
  Require(cost.q_mat.rows() == theta.p() && cost.q_mat.cols() == theta.p(),
          "Riccati: Q must be p x p");
  Require(cost.r_mat.rows() == theta.r() && cost.r_mat.cols() == theta.r(),
          "Riccati: R must be r x r");
}

// Factor of B'KB + R; throws when it is numerically singular.
Eigen::LDLT<Eigen::MatrixXd> FactorInputWeight(const Eigen::MatrixXd& bkb_r) {
  Eigen::LDLT<Eigen::MatrixXd> factor(bkb_r);
  const auto d = factor.vectorD();
  const double scale = std::max(1.0, bkb_r.cwiseAbs().maxCoeff());
  if (factor.info() != Eigen::Success || d.minCoeff() <= 1e-14 * scale) {
    throw NumericalError("Riccati: B'KB + R is singular");
  }
  return factor;
}

}  // namespace

Eigen::MatrixXd RiccatiMap(const InteractionMatrix& theta,
                           const CostMatrices& cost, const Eigen::MatrixXd& k) {
  CheckDimensions(theta, cost);
  const Eigen::MatrixXd a = theta.a();
  const Eigen::MatrixXd b = theta.b();
  const Eigen::MatrixXd ka = k * a;
  const Eigen::MatrixXd btka = b.transpose() * ka;
  const Eigen::MatrixXd bkb_r = b.transpose() * k * b + cost.r_mat;
  const auto factor = FactorInputWeight(bkb_r);
  return cost.q_mat + a.transpose() * ka -
         btka.transpose() * factor.solve(btka);
}

double RiccatiResidual(const InteractionMatrix& theta, const CostMatrices& cost,
                       const Eigen::MatrixXd& k) {
  return OperatorInfNorm(k - RiccatiMap(theta, cost, k));
}

FeedbackGain GainFromCostToGo(const InteractionMatrix& theta,
                              const CostMatrices& cost,
                              const Eigen::MatrixXd& k) {
  CheckDimensions(theta, cost);
  const Eigen::MatrixXd b = theta.b();
  const Eigen::MatrixXd bkb_r = b.transpose() * k * b + cost.r_mat;
  const auto factor = FactorInputWeight(bkb_r);
  return FeedbackGain(factor.solve(b.transpose() * k * theta.a()));
}

RiccatiSolution SolveRiccati(const InteractionMatrix& theta,
                             const CostMatrices& cost,
                             const RiccatiOptions& options) {
  CheckDimensions(theta, cost);
  Require(options.tol > 0.0 && options.max_iter >= 1,
          "SolveRiccati: tol must be positive and max_iter >= 1");
  const int p = theta.p();
  const Eigen::MatrixXd a = theta.a();
  const Eigen::MatrixXd b = theta.b();
  const Eigen::MatrixXd at = a.transpose();
  const Eigen::MatrixXd bt = b.transpose();

  Eigen::MatrixXd k = options.initial.value_or(cost.q_mat);
  Require(k.rows() == p && k.cols() == p,
          "SolveRiccati: initial iterate must be p x p");
  Eigen::MatrixXd ka(p, p), btka(b.cols(), p), bkb_r(b.cols(), b.cols());
  Eigen::MatrixXd next(p, p);
  double change = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < options.max_iter; ++it) {
    ka.noalias() = k * a;
    btka.noalias() = bt * ka;
    bkb_r.noalias() = bt * k * b;
    bkb_r += cost.r_mat;
    const auto factor = FactorInputWeight(bkb_r);
    next = cost.q_mat;
    next.noalias() += at * ka;
    next.noalias() -= btka.transpose() * factor.solve(btka);
    next = 0.5 * (next + next.transpose());
    change = OperatorInfNorm(next - k);
    k.swap(next);
    if (!k.allFinite() || k.cwiseAbs().maxCoeff() > options.blowup) {
      throw ConvergenceError(
          "SolveRiccati: iterates diverged (pair not stabilizable?)", change);
    }
    if (change <= options.tol) {
      ++it;
      break;
    }
  }
  if (change > options.tol) {
    std::ostringstream msg;
    msg << "SolveRiccati: no convergence within " << options.max_iter
        << " iterations, last residual " << change;
    throw ConvergenceError(msg.str(), change);
  }

  RiccatiSolution solution;
  solution.k_mat = k;
  solution.gain = GainFromCostToGo(theta, cost, k);
  solution.iterations = it;
  solution.residual = RiccatiResidual(theta, cost, k);
  solution.closed_loop_spectral_radius =
      SpectralRadius(ClosedLoopMatrix(theta, solution.gain));
  if (!(solution.closed_loop_spectral_radius < 1.0)) {
    throw StabilityError(
        "SolveRiccati: converged solution does not stabilize the system",
        solution.closed_loop_spectral_radius);
  }
  return solution;
}

double OptimalAverageCost(const InteractionMatrix& theta,
                          const CostMatrices& cost,
                          const RiccatiOptions& options) {
  return SolveRiccati(theta, cost, options).k_mat.trace();
}

CostGradient AverageCostGradient(const InteractionMatrix& theta,
                                 const CostMatrices& cost,
                                 const RiccatiOptions& options) {
  CostGradient out;
  out.solution = SolveRiccati(theta, cost, options);
  out.value = out.solution.k_mat.trace();
  const Eigen::MatrixXd closed = ClosedLoopMatrix(theta, out.solution.gain);
  const Eigen::MatrixXd sigma = StationaryCovarianceDoubling(closed);
  out.gradient = 2.0 * out.solution.k_mat * closed * sigma *
                 out.solution.gain.Extended().transpose();
  return out;
}

Eigen::MatrixXd ClosedLoopMatrix(const InteractionMatrix& theta,
                                 const FeedbackGain& gain) {
  Require(gain.l.rows() == theta.r() && gain.l.cols() == theta.p(),
          "ClosedLoopMatrix: gain must be r x p");
  return theta.a() - theta.b() * gain.l;
}

double ClosedLoopNorm(const InteractionMatrix& theta, const FeedbackGain& gain) {
  return OperatorNorm2(ClosedLoopMatrix(theta, gain));
}

LyapunovSolution SolveLyapunov(const InteractionMatrix& theta,
                               const FeedbackGain& gain,
                               const LyapunovOptions& options) {
  const Eigen::MatrixXd closed = ClosedLoopMatrix(theta, gain);
  const double norm = OperatorNorm2(closed);
  if (!(norm < 1.0)) {
    std::ostringstream msg;
    msg << "SolveLyapunov: closed loop norm " << norm << " is not below 1";
    throw StabilityError(msg.str(), norm);
  }
  const int p = theta.p();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd lambda = identity;
  Eigen::MatrixXd next(p, p);
  double change = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < options.max_iter; ++it) {
    next.noalias() = closed * lambda * closed.transpose();
    next += identity;
    change = OperatorInfNorm(next - lambda);
    lambda.swap(next);
    if (change <= options.tol) {
      ++it;
      break;
    }
  }
  if (change > options.tol) {
    throw ConvergenceError("SolveLyapunov: no convergence", change);
  }
  LyapunovSolution solution;
  solution.lambda_mat = 0.5 * (lambda + lambda.transpose());
  solution.iterations = it;
  solution.residual = OperatorInfNorm(
      solution.lambda_mat -
      closed * solution.lambda_mat * closed.transpose() - identity);
  return solution;
}

}  // namespace sparse_lq
