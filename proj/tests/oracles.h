#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "sparse_lq/identifiability.h"
#include "sparse_lq/lq_model.h"
#include "sparse_lq/rng.h"

namespace sparse_lq::testing {

/// Stabilizing root of k = q + a^2 k - (abk)^2 / (b^2 k + r).
double ScalarRiccatiRoot(double a, double b, double q, double r);

/// Exact minimizer value of 0.5 c'Gc - c'h + 0.5 s + lambda |c|_1 by
/// enumerating sign patterns in {-1, 0, +1}^q: each pattern fixes the
/// active set and the signs, the stationarity equation on it is linear, and
/// sign-consistent solutions are candidate minima.
struct OrthantSolution {
  Eigen::VectorXd coef;
  double objective = 0.0;
  int patterns_accepted = 0;
};
OrthantSolution LassoOrthantOracle(const Eigen::MatrixXd& gram,
                                   const Eigen::VectorXd& corr, double target_sq,
                                   double lambda);

/// Subset extremes by bitmask enumeration (ascending mask order), using the
/// same per-subset metric and tie rule as the library.
struct BruteForceCertificate {
  double c_min = 0.0;
  double alpha = 0.0;
  Subset worst_c_min_subset;
  Subset worst_alpha_subset;
  std::int64_t visited = 0;
};
BruteForceCertificate BruteForceSubsets(const Eigen::MatrixXd& h, int k);

/// H_{S^c S} H_SS^{-1} row-sum norm from an explicit inverse.
double IrrepresentabilityByInverse(const Eigen::MatrixXd& h, const Subset& s);

/// min J(a, b) over the disc of radius `radius` around (a0, b0): a polar
/// grid with `angles` boundary points and `rings` interior rings.
struct GridMinimum {
  double j = 0.0;
  double a = 0.0;
  double b = 0.0;
};
GridMinimum ScalarDiscGridMinimum(double a0, double b0, double radius, double q,
                                  double r, int angles, int rings);

/// A random k-sparse system together with a gain that stabilizes it.
struct RandomCase {
  InteractionMatrix theta;
  FeedbackGain gain;
};
RandomCase RandomStabilizedCase(int p, int r, int k, CounterRng& rng);

}  // namespace sparse_lq::testing
