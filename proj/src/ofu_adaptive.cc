#include "sparse_lq/ofu_adaptive.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sparse_lq/errors.h"
#include "sparse_lq/experiment.h"

namespace sparse_lq {

namespace {

// Streams for one run: noise and search randomness never share counters.
constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kSearchStream = 1;

struct Evaluation {
  Eigen::MatrixXd theta;
  double value = 0.0;
  Eigen::MatrixXd gradient;
  Eigen::MatrixXd k_mat;
};

class CostEvaluator {
 public:
  CostEvaluator(const CostMatrices& cost, const OfuOptions& options,
                double radius, int p)
      : cost_(cost), options_(options), radius_(radius), p_(p) {}

  std::optional<Evaluation> operator()(const Eigen::MatrixXd& stacked,
                                       const Eigen::MatrixXd* warm) {
    ++candidates;
    RiccatiOptions riccati = options_.riccati;
    if (warm != nullptr) riccati.initial = *warm;
    const InteractionMatrix theta = InteractionMatrix::FromStacked(stacked, p_);
    try {
      Evaluation out;
      out.theta = stacked;
      if (options_.finite_difference) {
        RiccatiSolution solution = SolveRiccati(theta, cost_, riccati);
        out.value = solution.k_mat.trace();
        out.k_mat = std::move(solution.k_mat);
        out.gradient = FiniteDifferenceCostGradient(
            theta, cost_, 1e-6 * (1.0 + radius_), options_.riccati);
      } else {
        CostGradient grad = AverageCostGradient(theta, cost_, riccati);
        out.value = grad.value;
        out.gradient = std::move(grad.gradient);
        out.k_mat = std::move(grad.solution.k_mat);
      }
      if (!std::isfinite(out.value) || !out.gradient.allFinite()) {
        ++failures;
        return std::nullopt;
      }
      return out;
    } catch (const Error&) {
      ++failures;
      return std::nullopt;
    }
  }

  int candidates = 0;
  int failures = 0;

 private:
  const CostMatrices& cost_;
  const OfuOptions& options_;
  double radius_;
  int p_;
};

Eigen::MatrixXd SampleBall(const ConfidenceSet& omega, CounterRng& rng) {
  Eigen::MatrixXd out = omega.center.stacked();
  const Eigen::Index q = out.cols();
  Eigen::RowVectorXd direction(q);
  for (Eigen::Index u = 0; u < out.rows(); ++u) {
    for (Eigen::Index j = 0; j < q; ++j) direction[j] = rng.NextNormal();
    const double norm = direction.norm();
    if (norm == 0.0) continue;
    const double radius =
        omega.radius * std::pow(rng.NextUniform(), 1.0 / static_cast<double>(q));
    out.row(u) += (radius / norm) * direction;
  }
  return out;
}

}  // namespace

bool ConfidenceSet::Contains(const InteractionMatrix& theta, double slack) const {
  return Distance(theta, center) <= radius + slack;
}

void ConfidenceSet::ProjectInPlace(Eigen::MatrixXd& stacked) const {
  Require(stacked.rows() == center.stacked().rows() &&
              stacked.cols() == center.stacked().cols(),
          "ConfidenceSet: dimension mismatch");
  for (Eigen::Index u = 0; u < stacked.rows(); ++u) {
    const double norm = (stacked.row(u) - center.stacked().row(u)).norm();
    if (norm > radius) {
      const double scale = norm > 0.0 ? radius / norm : 0.0;
      stacked.row(u) = center.stacked().row(u) +
                       scale * (stacked.row(u) - center.stacked().row(u));
    }
  }
}

InteractionMatrix ConfidenceSet::Project(const InteractionMatrix& theta) const {
  Eigen::MatrixXd stacked = theta.stacked();
  ProjectInPlace(stacked);
  return InteractionMatrix::FromStacked(stacked, theta.p());
}

ConfidenceSet BuildConfidenceSet(const InteractionMatrix& theta_hat,
                                 int episode_index, double eps) {
  Require(episode_index >= 1, "BuildConfidenceSet: episode index must be >= 1");
  Require(eps >= 0.0, "BuildConfidenceSet: eps must be nonnegative");
  ConfidenceSet set;
  set.center = theta_hat;
  set.radius = std::ldexp(eps, -episode_index);
  set.episode = episode_index;
  return set;
}

Eigen::MatrixXd FiniteDifferenceCostGradient(const InteractionMatrix& theta,
                                             const CostMatrices& cost, double h,
                                             const RiccatiOptions& options) {
  Require(h > 0.0, "FiniteDifferenceCostGradient: h must be positive");
  Eigen::MatrixXd work = theta.stacked();
  Eigen::MatrixXd grad(work.rows(), work.cols());
  for (Eigen::Index u = 0; u < work.rows(); ++u) {
    for (Eigen::Index j = 0; j < work.cols(); ++j) {
      const double saved = work(u, j);
      work(u, j) = saved + h;
      const double plus = OptimalAverageCost(
          InteractionMatrix::FromStacked(work, theta.p()), cost, options);
      work(u, j) = saved - h;
      const double minus = OptimalAverageCost(
          InteractionMatrix::FromStacked(work, theta.p()), cost, options);
      work(u, j) = saved;
      grad(u, j) = (plus - minus) / (2.0 * h);
    }
  }
  return grad;
}

OfuResult OfuSelect(const ConfidenceSet& omega, const CostMatrices& cost,
                    const OfuOptions& options, CounterRng& rng) {
  Require(options.starts >= 1 && options.iterations >= 0,
          "OfuSelect: need at least one start");
  const int p = omega.center.p();
  CostEvaluator evaluate(cost, options, omega.radius, p);

  std::optional<Evaluation> best;
  std::optional<double> j_center;
  for (int s = 0; s < options.starts; ++s) {
    const Eigen::MatrixXd start =
        s == 0 ? omega.center.stacked() : SampleBall(omega, rng);
    std::optional<Evaluation> current = evaluate(start, nullptr);
    if (s == 0 && current) j_center = current->value;
    if (!current) continue;

    for (int it = 0; it < options.iterations && omega.radius > 0.0; ++it) {
      const double gnorm = current->gradient.norm();
      if (!(gnorm > 0.0)) break;
      double step = options.initial_step_fraction * omega.radius;
      bool moved = false;
      for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
        Eigen::MatrixXd trial = current->theta - (step / gnorm) * current->gradient;
        omega.ProjectInPlace(trial);
        std::optional<Evaluation> next = evaluate(trial, &current->k_mat);
        if (next && next->value < current->value) {
          const double gain = current->value - next->value;
          current = std::move(next);
          moved = gain > 1e-14 * (1.0 + std::abs(current->value));
          break;
        }
      }
      if (!moved) break;
    }
    if (!best || current->value < best->value) best = std::move(current);
    if (omega.radius == 0.0) break;
  }

  if (!best) {
    std::ostringstream msg;
    msg << "OfuSelect: the Riccati equation failed at all "
        << evaluate.candidates << " candidates";
    throw SelectionError(msg.str());
  }
  OfuResult out;
  out.theta = InteractionMatrix::FromStacked(best->theta, p);
  out.j_value = best->value;
  out.j_center = j_center.value_or(std::numeric_limits<double>::quiet_NaN());
  out.candidates = evaluate.candidates;
  out.riccati_failures = evaluate.failures;
  return out;
}

FeedbackGain SynthesizeController(const InteractionMatrix& theta_tilde,
                                  const CostMatrices& cost,
                                  const RiccatiOptions& options) {
  return SolveRiccati(theta_tilde, cost, options).gain;
}

const char* ToString(ControlMode mode) {
  switch (mode) {
    case ControlMode::kAdaptive:
      return "adaptive";
    case ControlMode::kOracle:
      return "oracle";
    case ControlMode::kFixedGain:
      return "fixed-gain";
  }
  return "unknown";
}

ControlMode ParseControlMode(const std::string& text) {
  if (text == "adaptive") return ControlMode::kAdaptive;
  if (text == "oracle") return ControlMode::kOracle;
  if (text == "fixed-gain") return ControlMode::kFixedGain;
  throw ConfigError("unknown mode '" + text +
                    "' (expected adaptive, oracle or fixed-gain)");
}

const FeedbackGain& RunRecord::GainAt(std::int64_t t) const {
  Require(!episodes.empty(), "RunRecord: no episodes");
  for (const EpisodeRecord& episode : episodes) {
    if (t < episode.end) return episode.gain;
  }
  return episodes.back().gain;
}

RunRecord RunAdaptiveControl(const AdaptiveConfig& config, std::uint64_t seed) {
  const InteractionMatrix& theta0 = config.theta0;
  const int p = theta0.p();
  const int r = theta0.r();
  Require(config.horizon >= 1, "RunAdaptiveControl: horizon must be >= 1");
  Require(config.initial_gain.l.rows() == r && config.initial_gain.l.cols() == p,
          "RunAdaptiveControl: initial gain must be r x p");
  Require(config.eps > 0.0, "RunAdaptiveControl: eps must be positive");

  RunRecord record;
  record.seed = seed;
  record.mode = config.mode;
  record.schedule = EpisodeLengths(config.n0, config.n1, theta0.q(),
                                   config.delta, config.horizon);
  const RiccatiSolution optimal = SolveRiccati(theta0, config.cost, config.riccati);
  record.j_star = config.j_star.value_or(optimal.k_mat.trace());

  const std::int64_t horizon = config.horizon;
  Trajectory& traj = record.trajectory;
  traj.costs.resize(horizon);
  if (config.keep_trajectory) {
    traj.states.resize(p, horizon + 1);
    traj.controls.resize(r, horizon);
    traj.noises.resize(p, horizon);
  }
  record.noise_norms.resize(horizon);
  record.state_norms.resize(horizon + 1);

  GaussianNoise noise(DeriveSeed(seed, kNoiseStream));
  CounterRng search_rng(DeriveSeed(seed, kSearchStream));
  const Eigen::MatrixXd a = theta0.a();
  const Eigen::MatrixXd b = theta0.b();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd u(r), w(p), next(p);
  if (config.keep_trajectory) traj.states.col(0) = x;
  record.state_norms[0] = 0.0;

  FeedbackGain gain =
      config.mode == ControlMode::kOracle ? optimal.gain : config.initial_gain;
  std::optional<InteractionMatrix> previous_estimate;
  // Learner output for the next episode, filled at the end of this one.
  EpisodeRecord staged;
  std::int64_t t = 0;
  const int episodes = record.schedule.episodes();
  for (int i = 0; i < episodes; ++i) {
    EpisodeRecord episode = std::move(staged);
    staged = EpisodeRecord();
    episode.index = i;
    episode.start = record.schedule.start(i);
    episode.end = record.schedule.end(i);
    episode.gain = gain;
    SufficientStatistics stats(p);
    bool diverged = false;
    for (; t < episode.end; ++t) {
      u.noalias() = -gain.l * x;
      traj.costs[t] = x.dot(config.cost.q_mat * x) + u.dot(config.cost.r_mat * u);
      noise.Fill(w);
      next.noalias() = a * x;
      next.noalias() += b * u;
      next += w;
      record.noise_norms[t] = w.norm();
      record.state_norms[t + 1] = next.norm();
      if (config.keep_trajectory) {
        traj.controls.col(t) = u;
        traj.noises.col(t) = w;
        traj.states.col(t + 1) = next;
      }
      stats.Add(x, next);
      const double size = next.cwiseAbs().maxCoeff();
      if (!(size <= config.rollout.divergence_cap)) {
        std::ostringstream msg;
        msg << "state norm " << size << " exceeded the cap "
            << config.rollout.divergence_cap << " at step " << t + 1
            << " (episode " << i << ")";
        record.failure = msg.str();
        ++t;
        diverged = true;
        break;
      }
      x.swap(next);
    }
    record.episodes.push_back(std::move(episode));
    if (diverged) {
      record.status = RunStatus::kDiverged;
      break;
    }

    const bool has_successor = i + 1 < episodes;
    if (!has_successor || config.mode != ControlMode::kAdaptive) continue;

    // Estimate from this episode only, then pick the optimistic parameter.
    const GramForm form = stats.ToGramForm(gain);
    const double lambda = RegularizationWeight(
        config.ell, theta0.q(), config.delta, stats.n(), config.alpha, config.rho);
    InteractionMatrix estimate;
    try {
      estimate = EstimateFromGram(form, p, lambda, config.lasso,
                                  previous_estimate ? &*previous_estimate : nullptr);
    } catch (const ConvergenceError& e) {
      std::ostringstream msg;
      msg << "estimation for episode " << i + 1 << " failed: " << e.what();
      throw ConvergenceError(msg.str(), e.last_residual());
    }
    previous_estimate = estimate;
    const ConfidenceSet omega = BuildConfidenceSet(estimate, i + 1, config.eps);
    const OfuResult selected = OfuSelect(omega, config.cost, config.ofu, search_rng);
    gain = SynthesizeController(selected.theta, config.cost, config.riccati);

    staged.samples = stats.n();
    staged.lambda = lambda;
    staged.theta_hat = estimate;
    staged.omega = omega;
    staged.theta_tilde = selected.theta;
    staged.j_tilde = selected.j_value;
    staged.j_hat = selected.j_center;
    staged.candidates = selected.candidates;
    staged.riccati_failures = selected.riccati_failures;
  }
  const std::int64_t done = t;
  if (done < horizon) {
    traj.costs.conservativeResize(done);
    record.noise_norms.conservativeResize(done);
    record.state_norms.conservativeResize(done + 1);
    if (config.keep_trajectory) {
      traj.states.conservativeResize(p, done + 1);
      traj.controls.conservativeResize(r, done);
      traj.noises.conservativeResize(p, done);
    }
  }
  record.regret = CumulativeRegret(traj.costs, record.j_star);
  return record;
}

EventReport CheckGoodEvents(const RunRecord& record,
                            const InteractionMatrix& theta0, double delta,
                            double rho) {
  Require(delta > 0.0 && delta < 1.0, "CheckGoodEvents: need 0 < delta < 1");
  EventReport report;
  const std::int64_t steps = record.noise_norms.size();
  const double horizon = static_cast<double>(std::max<std::int64_t>(steps, 1));
  const double log_term = std::max(0.0, std::log(horizon / delta));
  const double root = std::sqrt(theta0.p() * log_term);
  report.noise_threshold = 2.0 * root;
  report.state_threshold = rho < 1.0 ? 2.0 / (1.0 - rho) * root
                                     : std::numeric_limits<double>::infinity();

  report.e2_steps.resize(steps);
  for (std::int64_t t = 0; t < steps; ++t) {
    report.e2_steps[t] = record.noise_norms[t] <= report.noise_threshold;
    report.e2 = report.e2 && report.e2_steps[t];
  }
  report.state_bound_steps.resize(record.state_norms.size());
  for (Eigen::Index t = 0; t < record.state_norms.size(); ++t) {
    report.state_bound_steps[t] = record.state_norms[t] <= report.state_threshold;
    report.state_bound = report.state_bound && report.state_bound_steps[t];
  }
  for (const EpisodeRecord& episode : record.episodes) {
    if (!episode.omega) continue;
    const bool inside = episode.omega->Contains(theta0);
    report.e1_episodes.push_back(inside);
    report.e1 = report.e1 && inside;
  }
  return report;
}

}  // namespace sparse_lq
