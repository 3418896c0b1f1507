#include "sparse_lq/identifiability.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "sparse_lq/errors.h"
#include "sparse_lq/linalg.h"

namespace sparse_lq {

namespace {

constexpr double kSingularRelative = 1e-12;

// Visits subsets of size 1..k of {0..q-1}, by size, in lexicographic order.
template <typename Visit>
void ForEachSubset(int q, int k, Visit&& visit) {
  for (int size = 1; size <= std::min(k, q); ++size) {
    Subset subset(size);
    std::iota(subset.begin(), subset.end(), 0);
    while (true) {
      visit(subset);
      int i = size - 1;
      while (i >= 0 && subset[i] == q - size + i) --i;
      if (i < 0) break;
      ++subset[i];
      for (int j = i + 1; j < size; ++j) subset[j] = subset[j - 1] + 1;
    }
  }
}

double SampleComplexityFactor(int k, double rho, double c_min, double eps,
                              double delta, int q) {
  const double kd = static_cast<double>(k);
  return 4e3 * kd * kd / ((1.0 - rho) * c_min * c_min) *
         (1.0 / (eps * eps) + kd / ((1.0 - rho) * (1.0 - rho))) *
         std::log(4.0 * kd * q / delta);
}

void CheckCommonDomain(int k, double ell, double rho, double c_min, double eps,
                       double delta, int q) {
  Require(k >= 1, "sample complexity: need k >= 1");
  Require(q >= 1, "sample complexity: need q >= 1");
  Require(ell >= 1.0, "sample complexity: need ell >= 1");
  Require(rho >= 0.0 && rho < 1.0, "sample complexity: need 0 <= rho < 1");
  Require(c_min > 0.0, "sample complexity: need C_min > 0");
  Require(eps > 0.0, "sample complexity: need eps > 0");
  Require(delta > 0.0 && delta < 1.0, "sample complexity: need 0 < delta < 1");
}

SampleComplexityResult Finish(double value) {
  Require(std::isfinite(value) && value < 9.0e18,
          "sample complexity: value overflows");
  SampleComplexityResult out;
  out.value = value;
  out.n = static_cast<std::int64_t>(std::ceil(value));
  return out;
}

}  // namespace

bool SubsetPrecedes(const Subset& a, const Subset& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

SubsetMetrics EvaluateSubset(const Eigen::MatrixXd& h, const Subset& subset) {
  const int q = static_cast<int>(h.rows());
  const int s = static_cast<int>(subset.size());
  std::vector<bool> in(q, false);
  for (int j : subset) in[j] = true;
  Eigen::MatrixXd h_ss(s, s);
  Eigen::MatrixXd h_sc(s, q - s);
  for (int a = 0; a < s; ++a) {
    for (int b = 0; b < s; ++b) h_ss(a, b) = h(subset[a], subset[b]);
    int c = 0;
    for (int j = 0; j < q; ++j) {
      if (!in[j]) h_sc(a, c++) = h(subset[a], j);
    }
  }

  SubsetMetrics metrics;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h_ss,
                                                     Eigen::EigenvaluesOnly);
  metrics.min_eigenvalue = eig.eigenvalues()[0];
  const double scale = std::max(1.0, eig.eigenvalues()[s - 1]);
  if (q == s) return metrics;

  // Rows of H_{S^c S} H_SS^{-1} are columns of H_SS^{-1} H_{S S^c}.
  Eigen::MatrixXd ratio_t;
  if (metrics.min_eigenvalue <= kSingularRelative * scale) {
    metrics.singular = true;
    ratio_t = h_ss.completeOrthogonalDecomposition().solve(h_sc);
  } else {
    ratio_t = h_ss.llt().solve(h_sc);
  }
  metrics.irrepresentability = ratio_t.cwiseAbs().colwise().sum().maxCoeff();
  return metrics;
}

std::int64_t SubsetCount(int q, int k) {
  const std::int64_t cap = std::numeric_limits<std::int64_t>::max();
  std::int64_t total = 0;
  double binom = 1.0;
  for (int s = 1; s <= std::min(k, q); ++s) {
    binom = binom * (q - s + 1) / s;
    if (binom > 9.0e18 || total > cap - static_cast<std::int64_t>(binom)) {
      return cap;
    }
    total += static_cast<std::int64_t>(std::llround(binom));
  }
  return total;
}

Eigen::MatrixXd ExtendedCovariance(const InteractionMatrix& theta0,
                                   const FeedbackGain& gain,
                                   const LyapunovOptions& options) {
  const LyapunovSolution lyap = SolveLyapunov(theta0, gain, options);
  const Eigen::MatrixXd extended = gain.Extended();
  Eigen::MatrixXd h = extended * lyap.lambda_mat * extended.transpose();
  return 0.5 * (h + h.transpose());
}

IdentifiabilityCertificate CertifyCovariance(const Eigen::MatrixXd& h, int k,
                                             const CertifyOptions& options) {
  Require(h.rows() == h.cols() && h.rows() >= 1,
          "CertifyCovariance: H must be square");
  const int q = static_cast<int>(h.rows());
  Require(k >= 1, "Certify: k must be at least 1");
  const std::int64_t count = SubsetCount(q, k);
  if (count > options.enumeration_budget) {
    std::ostringstream msg;
    msg << "Certify: " << count << " subsets exceed the enumeration budget of "
        << options.enumeration_budget << "; reduce k or q";
    throw BudgetError(msg.str());
  }

  IdentifiabilityCertificate cert;
  cert.k = k;
  cert.h_mat = h;
  cert.c_min = std::numeric_limits<double>::infinity();
  double worst_ratio = -1.0;
  ForEachSubset(q, k, [&](const Subset& subset) {
    const SubsetMetrics m = EvaluateSubset(h, subset);
    ++cert.subsets_visited;
    cert.any_singular = cert.any_singular || m.singular;
    if (m.min_eigenvalue < cert.c_min ||
        (m.min_eigenvalue == cert.c_min &&
         SubsetPrecedes(subset, cert.worst_c_min_subset))) {
      cert.c_min = m.min_eigenvalue;
      cert.worst_c_min_subset = subset;
    }
    if (m.irrepresentability > worst_ratio ||
        (m.irrepresentability == worst_ratio &&
         SubsetPrecedes(subset, cert.worst_alpha_subset))) {
      worst_ratio = m.irrepresentability;
      cert.worst_alpha_subset = subset;
    }
  });
  cert.alpha = 1.0 - worst_ratio;
  return cert;
}

IdentifiabilityCertificate Certify(const InteractionMatrix& theta0,
                                   const FeedbackGain& gain, int k,
                                   const CertifyOptions& options) {
  Require(k >= 1, "Certify: k must be at least 1");
  const double rho = ClosedLoopNorm(theta0, gain);
  if (!(rho < 1.0)) {
    if (SubsetCount(theta0.q(), k) > options.enumeration_budget) {
      throw BudgetError("Certify: subset count exceeds the enumeration budget");
    }
    IdentifiabilityCertificate cert;
    cert.k = k;
    cert.rho = rho;
    cert.c_min = 0.0;
    cert.alpha = 0.0;
    return cert;
  }
  IdentifiabilityCertificate cert = CertifyCovariance(
      ExtendedCovariance(theta0, gain, options.lyapunov), k, options);
  cert.rho = rho;
  return cert;
}

SampleComplexityResult SampleComplexity(int k, double ell, double alpha,
                                        double rho, double c_min, double eps,
                                        double delta, int q, double theta_min) {
  CheckCommonDomain(k, ell, rho, c_min, eps, delta, q);
  Require(alpha > 0.0 && alpha <= 1.0, "sample complexity: need 0 < alpha <= 1");
  SampleComplexityResult out = Finish(
      ell * ell / (alpha * alpha) *
      SampleComplexityFactor(k, rho, c_min, eps, delta, q));
  double eps_cap = std::min(ell / 2.0, 3.0 / (1.0 - rho));
  if (theta_min > 0.0) eps_cap = std::min(eps_cap, theta_min);
  if (!(eps < eps_cap)) {
    std::ostringstream msg;
    msg << "eps = " << eps << " is not below min(Theta_min, ell/2, 3/(1-rho)) = "
        << eps_cap << "; the guarantee does not apply";
    out.warnings.push_back(msg.str());
  }
  return out;
}

SampleComplexityResult InitialEpisodeLength(int k, double ell0, double alpha,
                                            double rho, double c_min, double eps,
                                            double delta, int q) {
  CheckCommonDomain(k, ell0, rho, c_min, eps, delta, q);
  Require(alpha > 0.0 && alpha <= 1.0, "episode length: need 0 < alpha <= 1");
  return Finish(ell0 * ell0 / alpha *
                SampleComplexityFactor(k, rho, c_min, eps, delta, q));
}

SampleComplexityResult SteadyEpisodeLength(int k, double ell, double rho,
                                           double c_min, double eps,
                                           double delta, int q) {
  CheckCommonDomain(k, ell, rho, c_min, eps, delta, q);
  return Finish(ell * ell * SampleComplexityFactor(k, rho, c_min, eps, delta, q));
}

std::int64_t EpisodeSchedule::end(int i) const {
  return std::min(boundaries[i], horizon);
}

EpisodeSchedule EpisodeLengths(std::int64_t n0, std::int64_t n1, int q,
                               double delta, std::int64_t horizon) {
  Require(n0 >= 1 && n1 >= 1, "EpisodeLengths: need n0, n1 >= 1");
  Require(delta > 0.0 && delta < 1.0, "EpisodeLengths: need 0 < delta < 1");
  Require(q >= 2, "EpisodeLengths: need q >= 2");
  Require(static_cast<double>(q) / delta > 1.0,
          "EpisodeLengths: log(q/delta) must be positive");
  Require(horizon >= 1, "EpisodeLengths: horizon must be at least 1");
  const double log_term = std::log(static_cast<double>(q) / delta);

  EpisodeSchedule schedule;
  schedule.n0 = n0;
  schedule.n1 = n1;
  schedule.horizon = horizon;
  std::int64_t tau = 0;
  for (int i = 0;; ++i) {
    std::int64_t length = n0;
    if (i > 0) {
      const double value =
          std::ldexp(1.0, 2 * i) * (1.0 + i / log_term) * static_cast<double>(n1);
      Require(value < 4.0e18, "EpisodeLengths: episode length overflows");
      length = static_cast<std::int64_t>(std::ceil(value));
    }
    tau += length;
    schedule.lengths.push_back(length);
    schedule.boundaries.push_back(tau);
    if (tau >= horizon) break;
  }
  return schedule;
}

std::vector<InteractionMatrix> SampleNeighborhood(const InteractionMatrix& theta0,
                                                  double eps, int n_samples,
                                                  int k, CounterRng& rng) {
  Require(eps >= 0.0, "SampleNeighborhood: eps must be nonnegative");
  Require(n_samples >= 0, "SampleNeighborhood: n_samples must be nonnegative");
  const int p = theta0.p();
  const int q = theta0.q();
  std::vector<InteractionMatrix> samples;
  samples.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::MatrixXd theta = theta0.stacked();
    for (int u = 0; u < p; ++u) {
      std::vector<int> support = theta0.RowSupport(u);
      std::vector<int> others;
      for (int j = 0; j < q; ++j) {
        if (std::find(support.begin(), support.end(), j) == support.end()) {
          others.push_back(j);
        }
      }
      const int extra_cap =
          std::max(0, std::min<int>(k - static_cast<int>(support.size()),
                                    static_cast<int>(others.size())));
      const int extra =
          extra_cap == 0 ? 0 : static_cast<int>(rng.NextBelow(extra_cap + 1));
      for (int i = 0; i < extra; ++i) {
        const int pick =
            i + static_cast<int>(rng.NextBelow(others.size() - i));
        std::swap(others[i], others[pick]);
        support.push_back(others[i]);
      }
      if (support.empty()) continue;
      // Uniform in the ball: Gaussian direction, radius eps * U^{1/d}.
      Eigen::VectorXd direction(support.size());
      for (Eigen::Index i = 0; i < direction.size(); ++i) {
        direction[i] = rng.NextNormal();
      }
      const double norm = direction.norm();
      if (norm == 0.0) continue;
      const double radius =
          eps * std::pow(rng.NextUniform(),
                         1.0 / static_cast<double>(support.size()));
      for (std::size_t i = 0; i < support.size(); ++i) {
        theta(u, support[i]) += radius * direction[i] / norm;
      }
    }
    samples.push_back(InteractionMatrix::FromStacked(theta, p));
  }
  return samples;
}

AssumptionProfile ProfileSamples(const InteractionMatrix& theta0,
                                 const CostMatrices& cost,
                                 const std::vector<InteractionMatrix>& samples,
                                 double eps, int k,
                                 const RiccatiOptions& riccati,
                                 const CertifyOptions& certify) {
  AssumptionProfile profile;
  profile.eps = eps;
  profile.worst_c_min = std::numeric_limits<double>::infinity();
  auto visit = [&](const InteractionMatrix& theta, int index) {
    ++profile.samples;
    RiccatiSolution solution;
    try {
      solution = SolveRiccati(theta, cost, riccati);
    } catch (const Error&) {
      ++profile.riccati_failures;
      return;
    }
    const FeedbackGain& gain = solution.gain;
    profile.sigma_l = std::max(profile.sigma_l, OperatorNorm2(gain.l));
    profile.sigma_k = std::max(profile.sigma_k, OperatorNorm2(solution.k_mat));
    profile.ell_theta_eps = std::max(profile.ell_theta_eps, gain.RowNormBound());
    try {
      const IdentifiabilityCertificate cert = Certify(theta0, gain, k, certify);
      profile.worst_rho = std::max(profile.worst_rho, cert.rho);
      if (!cert.valid()) {
        profile.non_identifiable.push_back(index);
        return;
      }
      profile.worst_alpha = std::min(profile.worst_alpha, cert.alpha);
      profile.worst_c_min = std::min(profile.worst_c_min, cert.c_min);
    } catch (const BudgetError&) {
      throw;
    } catch (const Error&) {
      profile.non_identifiable.push_back(index);
    }
  };
  visit(theta0, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    visit(samples[i], static_cast<int>(i) + 1);
  }
  if (!std::isfinite(profile.worst_c_min)) profile.worst_c_min = 0.0;
  return profile;
}

AssumptionProfile ProfileAssumption(const InteractionMatrix& theta0,
                                    const CostMatrices& cost, double eps,
                                    int n_samples, int k, CounterRng& rng,
                                    const RiccatiOptions& riccati,
                                    const CertifyOptions& certify) {
  Require(eps >= 0.0, "ProfileAssumption: eps must be nonnegative");
  const auto samples = SampleNeighborhood(theta0, eps, n_samples, k, rng);
  return ProfileSamples(theta0, cost, samples, eps, k, riccati, certify);
}

}  // namespace sparse_lq
