#pragma once

#include "gpct/error.hpp"
#include "gpct/gp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <tuple>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpct {

/// States visited by a random-walk Metropolis chain over a vector parameter.
struct ChainStates {
  std::vector<Eigen::VectorXd> states;  // state after each iteration
  std::vector<double> log_target;
  std::vector<bool> accepted;

  std::size_t size() const { return states.size(); }

  double acceptance_rate() const {
    if (accepted.empty()) return 0.0;
    std::size_t n = 0;
    for (bool a : accepted) n += a;
    return static_cast<double>(n) / static_cast<double>(accepted.size());
  }
};

/// Metropolis acceptance probability for a change `delta` in log target.
inline double acceptance_probability(double delta) {
  if (std::isnan(delta)) return 0.0;
  return delta >= 0.0 ? 1.0 : std::exp(delta);
}

/// Random-walk Metropolis with independent Gaussian proposals of the given
/// per-coordinate scales. Proposals whose target is non-finite are rejected.
/// Deterministic for a fixed seed.
inline ChainStates random_walk_metropolis(const std::function<double(const Eigen::VectorXd&)>& log_target,
                                          Eigen::VectorXd start, int iterations, const Eigen::VectorXd& scales,
                                          std::uint64_t seed) {
  if (iterations < 0) throw std::invalid_argument("iteration count must be nonnegative");
  if (scales.size() != start.size()) throw std::invalid_argument("proposal scales and state differ in size");
  if ((scales.array() <= 0.0).any()) throw std::invalid_argument("proposal scales must be positive");

  double current = log_target(start);
  if (!std::isfinite(current))
    throw NumericalError("initial state has non-finite log target (" + std::to_string(current) + ")");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  ChainStates out;
  out.states.reserve(static_cast<std::size_t>(iterations));
  out.log_target.reserve(static_cast<std::size_t>(iterations));
  out.accepted.reserve(static_cast<std::size_t>(iterations));
  Eigen::VectorXd proposal(start.size());
  for (int it = 0; it < iterations; ++it) {
    for (Eigen::Index d = 0; d < start.size(); ++d) proposal(d) = start(d) + scales(d) * normal(rng);
    double candidate = -std::numeric_limits<double>::infinity();
    try {
      candidate = log_target(proposal);
    } catch (const NumericalError&) {
    }
    const double u = uniform(rng);
    bool accept = false;
    if (std::isfinite(candidate)) {
      const double delta = candidate - current;
      accept = delta >= 0.0 || std::log(u) < delta;
    }
    if (accept) {
      start = proposal;
      current = candidate;
    }
    out.states.push_back(start);
    out.log_target.push_back(current);
    out.accepted.push_back(accept);
  }
  return out;
}

struct ChainRecord {
  int iteration = 0;  // 1-based
  HyperParams params;
  double log_posterior = 0.0;
  bool accepted = false;
};

/// Hyperparameter chain. `log_posterior` is the log density of the
/// log-transformed hyperparameters, which under the 1/x priors equals the
/// marginal log likelihood. The length scale is NaN for families without one.
struct ChainTrace {
  std::vector<ChainRecord> records;
  int burn_in = 0;
  Eigen::VectorXd proposal_scales;
  std::uint64_t seed = 0;
  bool has_length_scale = true;

  std::size_t retained() const {
    return records.size() > static_cast<std::size_t>(burn_in) ? records.size() - burn_in : 0;
  }

  double acceptance_rate() const {
    if (records.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& r : records) n += r.accepted;
    return static_cast<double>(n) / static_cast<double>(records.size());
  }
};

struct MhOptions {
  int samples = 5000;
  int burn_in = 1000;
  double proposal_scale = 0.1;  // per coordinate, in log space
  std::uint64_t seed = 0;
  std::optional<HyperParams> start;
};

/// Default chain start: sigma_f = SD(y), l = R / 5, sigma = SD(y) / 10.
inline HyperParams default_start(const Eigen::VectorXd& y, double radius) {
  const double n = static_cast<double>(y.size());
  const double mean = y.mean();
  double sd = n > 1 ? std::sqrt((y.array() - mean).square().sum() / (n - 1.0)) : 0.0;
  if (!(sd > 0.0)) sd = 1.0;
  return {sd, radius / 5.0, 0.1 * sd};
}

/// Metropolis-Hastings over (log sigma_f, log l, log sigma); the length scale
/// coordinate is dropped for families without one.
inline ChainTrace mh_sample(const HyperObjective& objective, double radius, const MhOptions& opt) {
  if (!(opt.samples > opt.burn_in) || opt.burn_in < 0)
    throw std::invalid_argument("need samples > burn_in >= 0");
  if (!(opt.proposal_scale > 0.0)) throw std::invalid_argument("proposal scale must be positive");

  const bool with_l = has_length_scale(objective.family());
  const HyperParams start = opt.start.value_or(default_start(objective.y(), radius));
  const int dim = with_l ? 3 : 2;

  auto unpack = [&](const Eigen::VectorXd& v) {
    HyperParams p;
    p.sigma_f = std::exp(v(0));
    p.length_scale = with_l ? std::exp(v(1)) : std::numeric_limits<double>::quiet_NaN();
    p.sigma = std::exp(v(dim - 1));
    return p;
  };
  auto target = [&](const Eigen::VectorXd& v) {
    HyperParams p = unpack(v);
    if (!with_l) p.length_scale = 1.0;
    return objective.log_likelihood(p);
  };

  Eigen::VectorXd x0(dim);
  x0(0) = std::log(start.sigma_f);
  if (with_l) x0(1) = std::log(start.length_scale);
  x0(dim - 1) = std::log(start.sigma);
  const Eigen::VectorXd scales = Eigen::VectorXd::Constant(dim, opt.proposal_scale);

  const ChainStates chain = random_walk_metropolis(target, x0, opt.samples, scales, opt.seed);

  ChainTrace trace;
  trace.burn_in = opt.burn_in;
  trace.proposal_scales = scales;
  trace.seed = opt.seed;
  trace.has_length_scale = with_l;
  trace.records.reserve(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i)
    trace.records.push_back({static_cast<int>(i) + 1, unpack(chain.states[i]), chain.log_target[i],
                             chain.accepted[i]});
  return trace;
}

struct ChainEstimate {
  HyperParams mean;
  HyperParams sd;
  std::size_t count = 0;
};

/// Mean and standard deviation of each hyperparameter (original scale) over
/// the post-burn-in records, keeping every `thin`-th one.
inline ChainEstimate chain_estimate(const ChainTrace& trace, int thin = 1) {
  if (thin < 1) throw std::invalid_argument("thinning must be >= 1");
  std::vector<const ChainRecord*> kept;
  for (std::size_t i = static_cast<std::size_t>(trace.burn_in); i < trace.records.size(); i += thin)
    kept.push_back(&trace.records[i]);
  if (kept.empty()) throw std::invalid_argument("chain has no post-burn-in samples");

  auto stats = [&](auto field) {
    double mean = 0.0;
    for (const auto* r : kept) mean += field(*r);
    mean /= static_cast<double>(kept.size());
    double ss = 0.0;
    for (const auto* r : kept) ss += (field(*r) - mean) * (field(*r) - mean);
    const double sd = kept.size() > 1 ? std::sqrt(ss / static_cast<double>(kept.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  ChainEstimate e;
  e.count = kept.size();
  std::tie(e.mean.sigma_f, e.sd.sigma_f) = stats([](const ChainRecord& r) { return r.params.sigma_f; });
  std::tie(e.mean.length_scale, e.sd.length_scale) =
      stats([](const ChainRecord& r) { return r.params.length_scale; });
  std::tie(e.mean.sigma, e.sd.sigma) = stats([](const ChainRecord& r) { return r.params.sigma; });
  return e;
}

/// Integrated autocorrelation time by Geyer's initial positive sequence.
inline double autocorrelation_time(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  auto acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double c0 = acov(0);
  if (c0 <= 0.0) return 1.0;
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (acov(2 * k) + acov(2 * k + 1)) / c0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::max(tau, 1.0);
}

}  // namespace gpct
