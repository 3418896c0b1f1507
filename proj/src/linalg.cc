#include "sparse_lq/linalg.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "sparse_lq/errors.h"
#include "sparse_lq/rng.h"

namespace sparse_lq {

namespace {

// Rayleigh quotient of m^T m, iterated until the relative change of the
// squared norm drops below tol^2 (the singular value then carries ~tol
// relative error even for slowly separating spectra).
double PowerIterate(const Eigen::MatrixXd& gram, Eigen::VectorXd v,
                    const PowerIterationOptions& options) {
  const double stop = std::max(options.relative_tolerance *
                                   options.relative_tolerance,
                               1e-15);
  v.normalize();
  double estimate = v.dot(gram * v);
  Eigen::VectorXd next(v.size());
  for (int it = 0; it < options.max_iterations; ++it) {
    next.noalias() = gram * v;
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    v = next / norm;
    const double updated = v.dot(gram * v);
    const double change = std::abs(updated - estimate);
    estimate = updated;
    if (change <= stop * std::abs(estimate)) break;
  }
  return std::max(estimate, 0.0);
}

}  // namespace

double OperatorNorm2(const Eigen::Ref<const Eigen::MatrixXd>& m,
                     const PowerIterationOptions& options) {
  if (m.size() == 0) return 0.0;
  const Eigen::MatrixXd gram = m.transpose() * m;
  if (gram.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  CounterRng rng(0x5eed2a0fULL + static_cast<std::uint64_t>(m.cols()));
  double best = 0.0;
  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    Eigen::VectorXd v(m.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.NextNormal();
    if (v.norm() == 0.0) v.setOnes();
    best = std::max(best, PowerIterate(gram, v, options));
  }
  return std::sqrt(best);
}

double OperatorInfNorm(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double MaxAbsEntry(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

double SpectralRadius(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Require(m.rows() == m.cols(), "SpectralRadius: matrix must be square");
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double MinSymmetricEigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Require(m.rows() == m.cols(), "MinSymmetricEigenvalue: matrix must be square");
  if (m.size() == 0) return 0.0;
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym,
                                                        Eigen::EigenvaluesOnly);
  return solver.eigenvalues()[0];
}

bool IsSymmetric(const Eigen::Ref<const Eigen::MatrixXd>& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Eigen::MatrixXd StationaryCovarianceDoubling(
    const Eigen::Ref<const Eigen::MatrixXd>& m, double tol,
    int max_doublings) {
  Require(m.rows() == m.cols(), "StationaryCovarianceDoubling: non-square");
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd power = m;
  for (int j = 0; j < max_doublings; ++j) {
    const Eigen::MatrixXd increment = power * sigma * power.transpose();
    sigma += increment;
    if (!sigma.allFinite()) break;
    if (OperatorInfNorm(increment) <= tol * std::max(1.0, OperatorInfNorm(sigma))) {
      return 0.5 * (sigma + sigma.transpose());
    }
    power = power * power;
  }
  throw StabilityError("StationaryCovarianceDoubling: closed loop is not stable",
                       SpectralRadius(m));
}

}  // namespace sparse_lq
