#pragma once

#include <Eigen/Core>

namespace sparse_lq {

struct PowerIterationOptions {
  double relative_tolerance = 1e-9;
  int max_iterations = 10000;
  int restarts = 2;
};

/// Largest singular value of `m`, by power iteration on m^T m from
/// `options.restarts` deterministic pseudo-random starting vectors. The best
/// estimate over the restarts is returned.
double OperatorNorm2(const Eigen::Ref<const Eigen::MatrixXd>& m,
                     const PowerIterationOptions& options = {});

/// Maximum absolute row sum.
double OperatorInfNorm(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// Maximum absolute entry; 0 for empty matrices.
double MaxAbsEntry(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// Largest eigenvalue modulus of a square matrix.
double SpectralRadius(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// Smallest eigenvalue of the symmetric part of `m`.
double MinSymmetricEigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& m);

bool IsSymmetric(const Eigen::Ref<const Eigen::MatrixXd>& m, double tol);

/// Solves S = M S M^T + I for Schur-stable M (spectral radius < 1) with the
/// doubling recursion S <- S + M_j S M_j^T, M_{j+1} = M_j^2. Used where only
/// stability in the eigenvalue sense is known.
Eigen::MatrixXd StationaryCovarianceDoubling(
    const Eigen::Ref<const Eigen::MatrixXd>& m, double tol = 1e-13,
    int max_doublings = 64);

}  // namespace sparse_lq
