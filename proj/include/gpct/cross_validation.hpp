#pragma once

#include "gpct/gp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace gpct {

struct CVResult {
  HyperParams params;
  double log_predictive = 0.0;  // sum over folds of log p(y_j | y_-j, params)
};

struct CrossValidation {
  std::vector<CVResult> results;
  std::size_t best = 0;
  int folds = 0;
  std::uint64_t seed = 0;

  const CVResult& best_result() const { return results.at(best); }
};

using Folds = std::vector<std::vector<Eigen::Index>>;

/// Seeded random partition of 0..n-1 into k parts whose sizes differ by at
/// most one.
inline Folds make_folds(Eigen::Index n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  if (static_cast<Eigen::Index>(k) > n)
    throw std::invalid_argument("more folds than measurements; some fold would be empty");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Folds folds(static_cast<std::size_t>(k));
  const Eigen::Index base = n / k;
  const Eigen::Index extra = n % k;
  Eigen::Index pos = 0;
  for (int f = 0; f < k; ++f) {
    const Eigen::Index len = base + (f < extra ? 1 : 0);
    folds[static_cast<std::size_t>(f)].assign(order.begin() + pos, order.begin() + pos + len);
    std::sort(folds[static_cast<std::size_t>(f)].begin(), folds[static_cast<std::size_t>(f)].end());
    pos += len;
  }
  return folds;
}

/// Cartesian product grid; the length list is ignored for families without a
/// length scale.
inline std::vector<HyperParams> hyper_grid(const std::vector<double>& sigma_f, const std::vector<double>& length,
                                           const std::vector<double>& sigma, Family family) {
  std::vector<HyperParams> out;
  const std::vector<double> ls = has_length_scale(family) ? length : std::vector<double>{1.0};
  for (double a : sigma_f)
    for (double l : ls)
      for (double s : sigma) out.push_back({a, l, s});
  return out;
}

namespace detail {

inline double gaussian_log_density(const Eigen::VectorXd& residual, const Eigen::MatrixXd& cov) {
  const Cholesky c = robust_cholesky(cov);
  const double k = static_cast<double>(residual.size());
  return -0.5 * residual.dot(c.llt.solve(residual)) - 0.5 * c.log_det() -
         0.5 * k * std::log(2.0 * std::numbers::pi);
}

/// Training/held-out split of one fold, with the Gram products of the
/// training part when the weight-space form is used.
struct FoldData {
  Eigen::MatrixXd phi_test;
  Eigen::VectorXd y_test;
  Eigen::MatrixXd phi_train;  // only for the data-space form
  Eigen::VectorXd y_train;
  std::optional<GramCache> gram;
};

inline std::vector<FoldData> split_folds(const HyperObjective& objective, const Folds& folds) {
  const Eigen::MatrixXd& phi = objective.phi();
  const Eigen::VectorXd& y = objective.y();
  const Eigen::Index m = phi.rows();
  const Eigen::Index n = phi.cols();
  std::optional<GramCache> full;
  std::vector<FoldData> out;
  for (const auto& fold : folds) {
    FoldData fd;
    std::vector<bool> held(static_cast<std::size_t>(n), false);
    for (Eigen::Index i : fold) held[static_cast<std::size_t>(i)] = true;
    fd.phi_test = phi(Eigen::all, fold);
    fd.y_test = y(fold);
    const double nt = static_cast<double>(n - static_cast<Eigen::Index>(fold.size()));
    const double md = static_cast<double>(m);
    const bool weight_space = md * md * md / 3.0 <= nt * nt * md / 2.0 + nt * nt * nt / 3.0;
    if (weight_space) {
      if (!full) full = GramCache::build(phi, y);
      GramCache g = *full;
      g.gram.noalias() -= fd.phi_test * fd.phi_test.transpose();
      g.phi_y.noalias() -= fd.phi_test * fd.y_test;
      g.yy -= fd.y_test.squaredNorm();
      g.n = n - static_cast<Eigen::Index>(fold.size());
      fd.gram = std::move(g);
    } else {
      std::vector<Eigen::Index> train;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!held[static_cast<std::size_t>(i)]) train.push_back(i);
      fd.phi_train = phi(Eigen::all, train);
      fd.y_train = y(train);
    }
    out.push_back(std::move(fd));
  }
  return out;
}

inline double cv_score(const HyperObjective& objective, const HyperParams& p, const std::vector<FoldData>& folds) {
  const Eigen::VectorXd lambda = objective.lambda(p);
  double total = 0.0;
  for (const auto& fd : folds) {
    const WeightPosterior w = fd.gram ? fit_weights_gram(*fd.gram, lambda, p.sigma)
                                      : fit_weights(fd.phi_train, fd.y_train, lambda, p.sigma, SolveForm::DataSpace);
    const Eigen::VectorXd residual = fd.y_test - fd.phi_test.transpose() * w.mean;
    Eigen::MatrixXd cov = w.covariance_of(fd.phi_test);
    cov.diagonal().array() += p.sigma * p.sigma;
    total += gaussian_log_density(residual, cov);
  }
  return total;
}

}  // namespace detail

/// Summed log predictive density of held-out folds for one parameter point.
inline double cv_log_predictive(const HyperObjective& objective, const HyperParams& p, const Folds& folds) {
  return detail::cv_score(objective, p, detail::split_folds(objective, folds));
}

/// k-fold Bayesian cross-validation over a parameter grid. Each fold is
/// refit on the remaining data and scored by the Gaussian log predictive
/// density of its held-out measurements. Ties go to the smaller sigma, then
/// the earlier grid point.
inline CrossValidation cross_validate(const HyperObjective& objective, const std::vector<HyperParams>& grid, int k,
                                      std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("cross-validation grid is empty");
  const Folds folds = make_folds(objective.y().size(), k, seed);
  const auto data = detail::split_folds(objective, folds);
  CrossValidation out;
  out.folds = k;
  out.seed = seed;
  out.results.reserve(grid.size());
  for (const auto& p : grid) out.results.push_back({p, detail::cv_score(objective, p, data)});
  for (std::size_t i = 1; i < out.results.size(); ++i) {
    const auto& cand = out.results[i];
    const auto& cur = out.results[out.best];
    if (cand.log_predictive > cur.log_predictive ||
        (cand.log_predictive == cur.log_predictive && cand.params.sigma < cur.params.sigma))
      out.best = i;
  }
  return out;
}

}  // namespace gpct
