#include "sparse_lq/lq_model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/SVD>

#include "sparse_lq/errors.h"
#include "sparse_lq/linalg.h"

namespace sparse_lq {

InteractionMatrix::InteractionMatrix(const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& b) {
  Require(a.rows() > 0 && a.rows() == a.cols(),
          "InteractionMatrix: A must be square and nonempty");
  Require(b.rows() == a.rows() && b.cols() > 0,
          "InteractionMatrix: B must be p x r with r >= 1");
  p_ = static_cast<int>(a.rows());
  theta_.resize(p_, a.cols() + b.cols());
  theta_ << a, b;
}

InteractionMatrix InteractionMatrix::FromStacked(const Eigen::MatrixXd& theta,
                                                 int p) {
  Require(p > 0 && theta.rows() == p && theta.cols() > p,
          "InteractionMatrix: stacked matrix must be p x (p + r), r >= 1");
  InteractionMatrix out;
  out.theta_ = theta;
  out.p_ = p;
  return out;
}

std::vector<int> InteractionMatrix::RowSupport(int u) const {
  Require(u >= 0 && u < p_, "RowSupport: row out of range");
  std::vector<int> support;
  for (int j = 0; j < q(); ++j) {
    if (theta_(u, j) != 0.0) support.push_back(j);
  }
  return support;
}

int InteractionMatrix::MaxRowSupport() const {
  int worst = 0;
  for (int u = 0; u < p_; ++u) {
    worst = std::max(worst, static_cast<int>(RowSupport(u).size()));
  }
  return worst;
}

double InteractionMatrix::MinNonzeroMagnitude() const {
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < theta_.size(); ++i) {
    const double v = std::abs(theta_.data()[i]);
    if (v > 0.0) smallest = std::min(smallest, v);
  }
  return smallest;
}

CostMatrices::CostMatrices(Eigen::MatrixXd q, Eigen::MatrixXd r)
    : q_mat(std::move(q)), r_mat(std::move(r)) {
  Require(q_mat.rows() > 0 && IsSymmetric(q_mat, 1e-12),
          "CostMatrices: Q must be square and symmetric");
  Require(r_mat.rows() > 0 && IsSymmetric(r_mat, 1e-12),
          "CostMatrices: R must be square and symmetric");
  Require(MinSymmetricEigenvalue(q_mat) >= -1e-10,
          "CostMatrices: Q must be positive semi-definite");
  Require(MinSymmetricEigenvalue(r_mat) >= -1e-10,
          "CostMatrices: R must be positive semi-definite");
}

CostMatrices CostMatrices::Identity(int p, int r) {
  return CostMatrices(Eigen::MatrixXd::Identity(p, p),
                      Eigen::MatrixXd::Identity(r, r));
}

Eigen::MatrixXd FeedbackGain::Extended() const {
  Eigen::MatrixXd out(l.cols() + l.rows(), l.cols());
  out << Eigen::MatrixXd::Identity(l.cols(), l.cols()), -l;
  return out;
}

double FeedbackGain::RowNormBound() const {
  double bound = 1.0;
  for (Eigen::Index j = 0; j < l.rows(); ++j) {
    bound = std::max(bound, l.row(j).norm());
  }
  return bound;
}

Eigen::VectorXd Step(const InteractionMatrix& theta,
                     const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& u,
                     const Eigen::Ref<const Eigen::VectorXd>& w) {
  Require(x.size() == theta.p() && w.size() == theta.p(),
          "Step: state or noise dimension does not match p");
  Require(u.size() == theta.r(), "Step: control dimension does not match r");
  Eigen::VectorXd next = theta.a() * x;
  next.noalias() += theta.b() * u;
  next += w;
  return next;
}

double StageCost(const CostMatrices& cost,
                 const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& u) {
  Require(x.size() == cost.q_mat.rows(), "StageCost: state dimension mismatch");
  Require(u.size() == cost.r_mat.rows(),
          "StageCost: control dimension mismatch");
  return x.dot(cost.q_mat * x) + u.dot(cost.r_mat * u);
}

Trajectory Rollout(const InteractionMatrix& theta, const FeedbackGain& gain,
                   const CostMatrices& cost, std::int64_t n_steps,
                   NoiseSource& noise, const Eigen::VectorXd& x0,
                   const RolloutOptions& options) {
  const int p = theta.p();
  const int r = theta.r();
  Require(n_steps >= 1, "Rollout: n_steps must be at least 1");
  Require(gain.l.rows() == r && gain.l.cols() == p,
          "Rollout: gain must be r x p");
  Require(x0.size() == p, "Rollout: x0 must have dimension p");
  Require(cost.q_mat.rows() == p && cost.r_mat.rows() == r,
          "Rollout: cost dimensions do not match the system");

  Trajectory traj;
  traj.states.resize(p, n_steps + 1);
  traj.controls.resize(r, n_steps);
  traj.noises.resize(p, n_steps);
  traj.costs.resize(n_steps);
  traj.states.col(0) = x0;

  const Eigen::MatrixXd a = theta.a();
  const Eigen::MatrixXd b = theta.b();
  Eigen::VectorXd x = x0;
  Eigen::VectorXd u(r);
  Eigen::VectorXd w(p);
  Eigen::VectorXd next(p);
  for (std::int64_t t = 0; t < n_steps; ++t) {
    u.noalias() = -gain.l * x;
    traj.costs[t] = x.dot(cost.q_mat * x) + u.dot(cost.r_mat * u);
    noise.Fill(w);
    next.noalias() = a * x;
    next.noalias() += b * u;
    next += w;
    traj.controls.col(t) = u;
    traj.noises.col(t) = w;
    traj.states.col(t + 1) = next;
    const double size = next.cwiseAbs().maxCoeff();
    if (!(size <= options.divergence_cap)) {
      std::ostringstream msg;
      msg << "Rollout: state norm " << size << " exceeded the cap "
          << options.divergence_cap << " at step " << t + 1;
      throw DivergenceError(msg.str(), t + 1);
    }
    x.swap(next);
  }
  return traj;
}

Trajectory Rollout(const InteractionMatrix& theta, const FeedbackGain& gain,
                   const CostMatrices& cost, std::int64_t n_steps,
                   NoiseSource& noise, const RolloutOptions& options) {
  return Rollout(theta, gain, cost, n_steps, noise,
                 Eigen::VectorXd::Zero(theta.p()), options);
}

double ReplayError(const InteractionMatrix& theta, const Trajectory& traj) {
  double worst = 0.0;
  for (std::int64_t t = 0; t < traj.steps(); ++t) {
    const Eigen::VectorXd predicted =
        theta.a() * traj.states.col(t) + theta.b() * traj.controls.col(t) +
        traj.noises.col(t);
    worst = std::max(
        worst, (traj.states.col(t + 1) - predicted).cwiseAbs().maxCoeff());
  }
  return worst;
}

int ControllabilityRank(const InteractionMatrix& theta, double tol) {
  const int p = theta.p();
  const int r = theta.r();
  Eigen::MatrixXd ctrb(p, p * r);
  Eigen::MatrixXd block = theta.b();
  for (int i = 0; i < p; ++i) {
    ctrb.middleCols(i * r, r) = block;
    block = theta.a() * block;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ctrb);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol * sv[0]) ++rank;
  }
  return rank;
}

bool InputsReachAllStates(const InteractionMatrix& theta) {
  const int p = theta.p();
  std::vector<bool> reached(p, false);
  // Seed with states driven directly by an input, then follow A's edges.
  for (int u = 0; u < p; ++u) {
    for (int j = p; j < theta.q(); ++j) {
      if (theta.stacked()(u, j) != 0.0) reached[u] = true;
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int u = 0; u < p; ++u) {
      if (reached[u]) continue;
      for (int j = 0; j < p; ++j) {
        if (reached[j] && theta.stacked()(u, j) != 0.0) {
          reached[u] = true;
          changed = true;
          break;
        }
      }
    }
  }
  return std::all_of(reached.begin(), reached.end(), [](bool b) { return b; });
}

InteractionMatrix GenerateSparseSystem(int p, int r, int k,
                                       double spectral_target,
                                       CounterRng& rng,
                                       const GenerationOptions& options) {
  Require(p >= 1 && r >= 1, "GenerateSparseSystem: p and r must be positive");
  const int q = p + r;
  Require(k >= 1 && k <= q, "GenerateSparseSystem: need 1 <= k <= q");
  Require(spectral_target > 0.0 && spectral_target < 1.0,
          "GenerateSparseSystem: spectral_target must lie in (0, 1)");

  std::vector<int> columns(q);
  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, q);
    for (int u = 0; u < p; ++u) {
      std::iota(columns.begin(), columns.end(), 0);
      // Partial Fisher-Yates: the first k entries form the row support.
      for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.NextBelow(q - i));
        std::swap(columns[i], columns[j]);
        const double magnitude =
            options.min_magnitude +
            (options.max_magnitude - options.min_magnitude) * rng.NextUniform();
        theta(u, columns[i]) = rng.NextUniform() < 0.5 ? -magnitude : magnitude;
      }
    }
    const double a_norm = OperatorNorm2(theta.leftCols(p));
    if (a_norm == 0.0) continue;
    theta.leftCols(p) *= spectral_target / a_norm;
    InteractionMatrix candidate = InteractionMatrix::FromStacked(theta, p);
    if (!InputsReachAllStates(candidate)) continue;
    if (ControllabilityRank(candidate) < p) continue;
    return candidate;
  }
  std::ostringstream msg;
  msg << "GenerateSparseSystem: no controllable " << k << "-sparse system with p="
      << p << ", r=" << r << " after " << options.max_retries << " attempts";
  throw GenerationError(msg.str());
}

}  // namespace sparse_lq
