#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparse_lq/lq_model.h"
#include "sparse_lq/riccati.h"

namespace sparse_lq {

using Subset = std::vector<int>;

/// Per-subset quantities entering the identifiability conditions.
struct SubsetMetrics {
  /// lambda_min(H_SS).
  double min_eigenvalue = 0.0;
  /// ||H_{S^c S} H_SS^{-1}||_inf (maximum absolute row sum).
  double irrepresentability = 0.0;
  /// H_SS was numerically singular; the ratio used a least-squares solve.
  bool singular = false;
};

SubsetMetrics EvaluateSubset(const Eigen::MatrixXd& h, const Subset& subset);

/// Total order used to break exact ties between subsets: smaller size first,
/// then lexicographic.
bool SubsetPrecedes(const Subset& a, const Subset& b);

/// Identifiability of a gain L for Theta0 over all S with 1 <= |S| <= k.
struct IdentifiabilityCertificate {
  double rho = 0.0;
  double c_min = 0.0;
  double alpha = 0.0;
  int k = 0;
  /// H = [I; -L] Lambda [I; -L]'; empty when the closed loop is not
  /// contractive.
  Eigen::MatrixXd h_mat;
  Subset worst_c_min_subset;
  Subset worst_alpha_subset;
  std::int64_t subsets_visited = 0;
  bool any_singular = false;

  bool valid() const { return rho < 1.0 && c_min > 0.0 && alpha > 0.0; }
};

struct CertifyOptions {
  std::int64_t enumeration_budget = 2000000;
  LyapunovOptions lyapunov;
};

/// sum_{s=1..k} C(q, s), saturating at INT64_MAX.
std::int64_t SubsetCount(int q, int k);

/// Stationary second moment of y = [x; u] under u = -L x.
Eigen::MatrixXd ExtendedCovariance(const InteractionMatrix& theta0,
                                   const FeedbackGain& gain,
                                   const LyapunovOptions& options = {});

/// Exhaustive certificate. An unstable closed loop yields an invalid
/// certificate with rho >= 1; too many subsets throws BudgetError.
IdentifiabilityCertificate Certify(const InteractionMatrix& theta0,
                                   const FeedbackGain& gain, int k,
                                   const CertifyOptions& options = {});

/// Minimum eigenvalue and irrepresentability extremes of a given H.
IdentifiabilityCertificate CertifyCovariance(const Eigen::MatrixXd& h, int k,
                                             const CertifyOptions& options = {});

struct SampleComplexityResult {
  std::int64_t n = 0;
  double value = 0.0;
  std::vector<std::string> warnings;
};

/// Sample count for d(Theta-hat, Theta0) <= eps with probability 1 - delta:
///   n >= 4e3 k^2 ell^2 / (alpha^2 (1-rho) C_min^2)
///        * (1/eps^2 + k/(1-rho)^2) * log(4kq/delta).
/// `theta_min` enables the eps < min(Theta_min, ell/2, 3/(1-rho)) warning.
SampleComplexityResult SampleComplexity(int k, double ell, double alpha,
                                        double rho, double c_min, double eps,
                                        double delta, int q,
                                        double theta_min = 0.0);

/// First-episode length from the algorithm table. Note the single power of
/// alpha in the denominator, unlike SampleComplexity:
///   n0 = 4e3 k^2 ell0^2 / (alpha (1-rho) C_min^2) (...) log(4kq/delta).
SampleComplexityResult InitialEpisodeLength(int k, double ell0, double alpha,
                                            double rho, double c_min, double eps,
                                            double delta, int q);

/// Base length for later episodes (no alpha factor):
///   n1 = 4e3 k^2 ell^2 / ((1-rho) C_min^2) (...) log(4kq/delta).
SampleComplexityResult SteadyEpisodeLength(int k, double ell, double rho,
                                           double c_min, double eps,
                                           double delta, int q);

/// Episode i covers steps [start(i), end(i)); end(i) = tau_i = sum_{j<=i}.
struct EpisodeSchedule {
  std::int64_t n0 = 0;
  std::int64_t n1 = 0;
  std::int64_t horizon = 0;
  /// Delta tau_i (untruncated).
  std::vector<std::int64_t> lengths;
  /// tau_i = sum_{j<=i} Delta tau_j.
  std::vector<std::int64_t> boundaries;

  int episodes() const { return static_cast<int>(lengths.size()); }
  std::int64_t start(int i) const { return i == 0 ? 0 : boundaries[i - 1]; }
  /// End clipped to the horizon.
  std::int64_t end(int i) const;
  bool complete(int i) const { return boundaries[i] <= horizon; }
};

/// Delta tau_0 = n0, Delta tau_i = ceil(4^i (1 + i / log(q/delta)) n1),
/// truncated after the first tau_i >= horizon.
EpisodeSchedule EpisodeLengths(std::int64_t n0, std::int64_t n1, int q,
                               double delta, std::int64_t horizon);

/// Suprema of ||L(Theta)||_2, ||K(Theta)||_2 and max(1, max_j ||L_j||) over
/// sampled members of the eps-neighborhood of Theta0.
struct AssumptionProfile {
  double sigma_l = 0.0;
  double sigma_k = 0.0;
  double ell_theta_eps = 1.0;
  double eps = 0.0;
  int samples = 0;
  int riccati_failures = 0;
  /// Indices (into the evaluated sample list; 0 is Theta0) whose L(Theta)
  /// is not identifiable with respect to Theta0.
  std::vector<int> non_identifiable;
  /// Smallest alpha / C_min and largest rho seen across certified samples.
  double worst_alpha = 1.0;
  double worst_c_min = 0.0;
  double worst_rho = 0.0;
};

/// Draws `n_samples` perturbations of Theta0: each row moves uniformly in the
/// l2 ball of radius eps over supp(Theta0_u) plus random extra coordinates
/// up to k in total.
std::vector<InteractionMatrix> SampleNeighborhood(const InteractionMatrix& theta0,
                                                  double eps, int n_samples,
                                                  int k, CounterRng& rng);

/// Profile over Theta0 itself followed by `samples`.
AssumptionProfile ProfileSamples(const InteractionMatrix& theta0,
                                 const CostMatrices& cost,
                                 const std::vector<InteractionMatrix>& samples,
                                 double eps, int k,
                                 const RiccatiOptions& riccati = {},
                                 const CertifyOptions& certify = {});

AssumptionProfile ProfileAssumption(const InteractionMatrix& theta0,
                                    const CostMatrices& cost, double eps,
                                    int n_samples, int k, CounterRng& rng,
                                    const RiccatiOptions& riccati = {},
                                    const CertifyOptions& certify = {});

}  // namespace sparse_lq
