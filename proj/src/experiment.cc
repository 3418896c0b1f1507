#include "sparse_lq/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "sparse_lq/errors.h"
#include "sparse_lq/riccati.h"
#include "sparse_lq/rng.h"
#include "sparse_lq/sparse_estimator.h"

namespace sparse_lq {

Eigen::VectorXd CumulativeRegret(const Eigen::VectorXd& costs, double j_star) {
  Eigen::VectorXd out(costs.size());
  double total = 0.0;
  for (Eigen::Index t = 0; t < costs.size(); ++t) {
    total += costs[t] - j_star;
    out[t] = total;
  }
  return out;
}

std::uint64_t TrialSeed(std::uint64_t master, int trial) {
  return DeriveSeed(master, static_cast<std::uint64_t>(trial));
}

void ParallelFor(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  int workers = threads > 0 ? threads
                            : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!stop) {
      const int i = next++;
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double LogLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
  Require(x.size() == y.size() && x.size() >= 2, "LogLogSlope: need >= 2 points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double Quantile(std::vector<double> values, double prob) {
  Require(!values.empty(), "Quantile: no values");
  Require(prob >= 0.0 && prob <= 1.0, "Quantile: prob must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = prob * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

RegretReport RunExperiment(const ResolvedExperiment& experiment) {
  const ExperimentConfig& config = experiment.config;
  RegretReport report;
  report.config = config;
  report.master_seed = config.seed;
  report.j_star = experiment.j_star;
  report.certificate = experiment.certificate;
  report.ell = experiment.ell;
  report.n0 = experiment.n0;
  report.n1 = experiment.n1;
  report.warnings = experiment.warnings;
  report.horizons = config.horizons;
  if (report.horizons.empty()) report.horizons.push_back(config.horizon);

  AdaptiveConfig adaptive = experiment.ToAdaptiveConfig();
  adaptive.keep_trajectory = false;
  const double event_rho = experiment.certificate.rho;

  report.trials.resize(config.trials);
  ParallelFor(config.trials, config.threads, [&](int i) {
    TrialOutcome& out = report.trials[i];
    out.trial = i;
    out.seed = TrialSeed(config.seed, i);
    try {
      const RunRecord record = RunAdaptiveControl(adaptive, out.seed);
      out.costs = record.trajectory.costs;
      out.regret = record.regret;
      out.episodes = static_cast<int>(record.episodes.size());
      out.diverged = record.status == RunStatus::kDiverged;
      if (out.diverged) out.error = record.failure;
      out.ok = !out.diverged;
      out.final_distance = std::numeric_limits<double>::quiet_NaN();
      for (auto it = record.episodes.rbegin(); it != record.episodes.rend(); ++it) {
        if (it->theta_hat) {
          out.final_distance = Distance(*it->theta_hat, experiment.theta0);
          break;
        }
      }
      const EventReport events =
          CheckGoodEvents(record, experiment.theta0, config.delta, event_rho);
      out.e1 = events.e1;
      out.e2 = events.e2;
      out.state_bound = events.state_bound;
    } catch (const Error& e) {
      out.ok = false;
      out.error = std::string(ToString(e.category())) + ": " + e.what();
    }
  });

  std::vector<const TrialOutcome*> good;
  for (const TrialOutcome& t : report.trials) {
    if (t.ok) {
      good.push_back(&t);
    } else {
      ++report.failed_trials;
    }
  }
  if (good.empty()) {
    std::string first = report.trials.empty() ? "" : report.trials[0].error;
    throw Error(ErrorCategory::kDivergence, "all trials failed; first: " + first);
  }
  const double m = static_cast<double>(good.size());
  for (const TrialOutcome* t : good) {
    report.e1_frequency += t->e1 ? 1.0 / m : 0.0;
    report.e2_frequency += t->e2 ? 1.0 / m : 0.0;
    report.state_bound_frequency += t->state_bound ? 1.0 / m : 0.0;
  }

  for (std::int64_t h : report.horizons) {
    double mean = 0.0;
    for (const TrialOutcome* t : good) mean += t->regret[h - 1];
    mean /= m;
    double var = 0.0;
    for (const TrialOutcome* t : good) {
      const double d = t->regret[h - 1] - mean;
      var += d * d;
    }
    var = good.size() > 1 ? var / (m - 1.0) : 0.0;
    report.mean_regret.push_back(mean);
    report.stderr_regret.push_back(std::sqrt(var / m));
  }
  if (report.horizons.size() >= 2) {
    std::vector<double> x(report.horizons.begin(), report.horizons.end());
    report.slope = LogLogSlope(x, report.mean_regret);
  } else {
    report.slope = std::numeric_limits<double>::quiet_NaN();
  }

  const Eigen::Index steps = config.horizon;
  report.mean_curve = Eigen::VectorXd::Zero(steps);
  report.q10_curve.resize(steps);
  report.q50_curve.resize(steps);
  report.q90_curve.resize(steps);
  std::vector<double> column(good.size());
  for (Eigen::Index s = 0; s < steps; ++s) {
    for (std::size_t j = 0; j < good.size(); ++j) column[j] = good[j]->regret[s];
    double mean = 0.0;
    for (double v : column) mean += v;
    report.mean_curve[s] = mean / m;
    std::sort(column.begin(), column.end());
    report.q10_curve[s] = Quantile(column, 0.1);
    report.q50_curve[s] = Quantile(column, 0.5);
    report.q90_curve[s] = Quantile(column, 0.9);
  }
  return report;
}

InteractionMatrix EstimateFromRollout(const InteractionMatrix& theta0,
                                      const FeedbackGain& gain, std::int64_t n,
                                      double lambda, std::uint64_t seed) {
  Require(n >= 1, "EstimateFromRollout: need n >= 1");
  const int p = theta0.p();
  const Eigen::MatrixXd closed = ClosedLoopMatrix(theta0, gain);
  GaussianNoise noise(seed);
  SufficientStatistics stats(p);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd w(p), next(p);
  for (std::int64_t t = 0; t < n; ++t) {
    noise.Fill(w);
    next.noalias() = closed * x;
    next += w;
    stats.Add(x, next);
    if (!(next.cwiseAbs().maxCoeff() <= 1e8)) {
      throw DivergenceError("EstimateFromRollout: state diverged", t + 1);
    }
    x.swap(next);
  }
  return EstimateFromGram(stats.ToGramForm(gain), p, lambda);
}

EstimationReport EstimationExperiment(const ResolvedExperiment& experiment) {
  const ExperimentConfig& config = experiment.config;
  EstimationReport report;
  report.config = config;
  report.master_seed = config.seed;
  report.certificate = experiment.certificate;
  report.warnings = experiment.warnings;
  report.eps = config.estimation.eps.value_or(config.eps);
  const IdentifiabilityCertificate& cert = experiment.certificate;
  if (!cert.valid()) {
    throw ConfigError("estimation experiment needs a certified initial gain");
  }
  const int q = experiment.theta0.q();
  const int k = config.system.k;
  report.n_grid = config.estimation.n_grid;
  if (report.n_grid.empty()) {
    const SampleComplexityResult n =
        SampleComplexity(k, experiment.ell0, cert.alpha, cert.rho, cert.c_min,
                         report.eps, config.delta, q,
                         experiment.theta0.MinNonzeroMagnitude());
    report.n_grid.push_back(n.n);
    report.warnings.insert(report.warnings.end(), n.warnings.begin(),
                           n.warnings.end());
  }

  const int grid = static_cast<int>(report.n_grid.size());
  report.trials.resize(static_cast<std::size_t>(grid) * config.trials);
  ParallelFor(config.trials, config.threads, [&](int i) {
    const std::uint64_t seed = TrialSeed(config.seed, i);
    for (int g = 0; g < grid; ++g) {
      EstimationTrial& out = report.trials[static_cast<std::size_t>(g) * config.trials + i];
      out.n = report.n_grid[g];
      out.trial = i;
      out.seed = seed;
      out.lambda = RegularizationWeight(experiment.ell0, q, config.delta, out.n,
                                        cert.alpha, cert.rho);
      const InteractionMatrix estimate = EstimateFromRollout(
          experiment.theta0, experiment.initial_gain, out.n, out.lambda, seed);
      out.distance = Distance(estimate, experiment.theta0);
      out.success = out.distance <= report.eps;
    }
  });

  for (int g = 0; g < grid; ++g) {
    double hits = 0.0, total = 0.0;
    for (int i = 0; i < config.trials; ++i) {
      const EstimationTrial& t = report.trials[static_cast<std::size_t>(g) * config.trials + i];
      hits += t.success ? 1.0 : 0.0;
      total += t.distance;
    }
    report.success_frequency.push_back(hits / config.trials);
    report.mean_distance.push_back(total / config.trials);
  }
  return report;
}

}  // namespace sparse_lq
