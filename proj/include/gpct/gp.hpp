#pragma once

#include "gpct/covariance.hpp"
#include "gpct/geometry.hpp"
#include "gpct/hilbert_basis.hpp"
#include "gpct/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>

namespace gpct {

/// Which linear system is factorized: the m x m weight-space precision
/// sigma^2 I + D Phi Phi^T D (D = Lambda^{1/2}), or the n x n data-space
/// covariance Phi^T Lambda Phi + sigma^2 I. Automatic picks weight space when
/// m <= n.
enum class SolveForm { Automatic, WeightSpace, DataSpace };

/// Prior-independent products of Phi and y, reused when only Lambda and
/// sigma change.
struct GramCache {
  Eigen::MatrixXd gram;   // Phi Phi^T
  Eigen::VectorXd phi_y;  // Phi y
  double yy = 0.0;
  Eigen::Index n = 0;

  static GramCache build(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y) {
    if (phi.cols() != y.size()) throw std::invalid_argument("Phi columns and y length differ");
    GramCache c;
    c.gram = Eigen::MatrixXd::Zero(phi.rows(), phi.rows());
    c.gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
    c.gram.triangularView<Eigen::StrictlyUpper>() = c.gram.transpose();
    c.phi_y = phi * y;
    c.yy = y.squaredNorm();
    c.n = y.size();
    return c;
  }
};

namespace detail {

inline void check_fit_inputs(const Eigen::VectorXd& lambda, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("noise sigma must be positive");
  if (!lambda.allFinite() || (lambda.array() < 0.0).any())
    throw NumericalError("spectral weights must be finite and nonnegative");
}

inline Eigen::MatrixXd weight_precision(const Eigen::MatrixXd& gram, const Eigen::VectorXd& sqrt_lambda,
                                        double sigma) {
  Eigen::MatrixXd b = sqrt_lambda.asDiagonal() * gram * sqrt_lambda.asDiagonal();
  b.diagonal().array() += sigma * sigma;
  return b;
}

inline Eigen::MatrixXd data_covariance(const Eigen::MatrixXd& phi, const Eigen::VectorXd& sqrt_lambda,
                                       double sigma) {
  const Eigen::MatrixXd scaled = sqrt_lambda.asDiagonal() * phi;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(phi.cols(), phi.cols());
  c.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  c.diagonal().array() += sigma * sigma;
  return c;
}

inline SolveForm resolve(SolveForm form, Eigen::Index m, Eigen::Index n) {
  if (form != SolveForm::Automatic) return form;
  return m <= n ? SolveForm::WeightSpace : SolveForm::DataSpace;
}

}  // namespace detail

/// Gaussian posterior over basis weights, N(mean, Sigma_w) with
/// Sigma_w = (Lambda^{-1} + Phi Phi^T / sigma^2)^{-1}, held in factorized form.
class WeightPosterior {
 public:
  Eigen::VectorXd mean;
  Eigen::VectorXd lambda;
  double sigma = 1.0;
  SolveForm form = SolveForm::WeightSpace;
  double jitter = 0.0;

  int basis_size() const { return static_cast<int>(mean.size()); }

  /// Psi^T Sigma_w Psi for the columns of Psi (m x k).
  Eigen::MatrixXd covariance_of(const Eigen::MatrixXd& psi) const {
    if (form == SolveForm::WeightSpace) {
      Eigen::MatrixXd v = sqrt_lambda_.asDiagonal() * psi;
      factor_.llt.matrixL().solveInPlace(v);
      return sigma * sigma * (v.transpose() * v);
    }
    const Eigen::MatrixXd lpsi = lambda.asDiagonal() * psi;
    Eigen::MatrixXd w = phi_.transpose() * lpsi;
    factor_.llt.matrixL().solveInPlace(w);
    return psi.transpose() * lpsi - w.transpose() * w;
  }

  /// Diagonal of covariance_of, clamped at zero.
  Eigen::VectorXd variance_of(const Eigen::MatrixXd& psi) const {
    Eigen::VectorXd out;
    if (form == SolveForm::WeightSpace) {
      Eigen::MatrixXd v = sqrt_lambda_.asDiagonal() * psi;
      factor_.llt.matrixL().solveInPlace(v);
      out = sigma * sigma * v.colwise().squaredNorm().transpose();
    } else {
      const Eigen::MatrixXd lpsi = lambda.asDiagonal() * psi;
      Eigen::MatrixXd w = phi_.transpose() * lpsi;
      factor_.llt.matrixL().solveInPlace(w);
      out = (psi.array() * lpsi.array()).colwise().sum().transpose() -
            w.colwise().squaredNorm().transpose().array();
    }
    return out.cwiseMax(0.0);
  }

  const Cholesky& factor() const { return factor_; }

 private:
  friend WeightPosterior fit_weights_gram(const GramCache&, const Eigen::VectorXd&, double);
  friend WeightPosterior fit_weights(const Eigen::MatrixXd&, const Eigen::VectorXd&, const Eigen::VectorXd&,
                                     double, SolveForm);

  Eigen::VectorXd sqrt_lambda_;
  Cholesky factor_;
  Eigen::MatrixXd phi_;  // kept only for the data-space form
};

/// Weight-space fit from cached Gram products.
inline WeightPosterior fit_weights_gram(const GramCache& cache, const Eigen::VectorXd& lambda, double sigma) {
  detail::check_fit_inputs(lambda, sigma);
  if (cache.gram.rows() != lambda.size()) throw std::invalid_argument("Gram and Lambda sizes differ");
  WeightPosterior w;
  w.lambda = lambda;
  w.sigma = sigma;
  w.form = SolveForm::WeightSpace;
  w.sqrt_lambda_ = lambda.cwiseSqrt();
  w.factor_ = robust_cholesky(detail::weight_precision(cache.gram, w.sqrt_lambda_, sigma));
  w.jitter = w.factor_.jitter;
  const Eigen::VectorXd c = w.sqrt_lambda_.cwiseProduct(cache.phi_y);
  w.mean = w.sqrt_lambda_.cwiseProduct(w.factor_.llt.solve(c));
  return w;
}

/// Posterior weights: mean solves (Lambda^{-1} + Phi Phi^T / sigma^2) mu = Phi y / sigma^2,
/// equivalently mu = Lambda Phi (Phi^T Lambda Phi + sigma^2 I)^{-1} y.
inline WeightPosterior fit_weights(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& lambda, double sigma,
                                   SolveForm form = SolveForm::Automatic) {
  if (phi.cols() != y.size()) throw std::invalid_argument("Phi columns and y length differ");
  if (phi.rows() != lambda.size()) throw std::invalid_argument("Phi rows and Lambda length differ");
  detail::check_fit_inputs(lambda, sigma);
  form = detail::resolve(form, phi.rows(), phi.cols());
  if (form == SolveForm::WeightSpace) return fit_weights_gram(GramCache::build(phi, y), lambda, sigma);

  WeightPosterior w;
  w.lambda = lambda;
  w.sigma = sigma;
  w.form = SolveForm::DataSpace;
  w.sqrt_lambda_ = lambda.cwiseSqrt();
  w.factor_ = robust_cholesky(detail::data_covariance(phi, w.sqrt_lambda_, sigma));
  w.jitter = w.factor_.jitter;
  w.phi_ = phi;
  w.mean = lambda.cwiseProduct(phi * w.factor_.llt.solve(y));
  return w;
}

inline WeightPosterior fit_weights(const ProjectedBasis& basis, const Eigen::VectorXd& y, double sigma,
                                   SolveForm form = SolveForm::Automatic) {
  return fit_weights(basis.phi, y, basis.lambda, sigma, form);
}

/// Noise-free reprojection Phi^T mu of the posterior mean.
inline Eigen::VectorXd predict_measurements(const WeightPosterior& weights, const Eigen::MatrixXd& phi) {
  return phi.transpose() * weights.mean;
}

inline Eigen::VectorXd predict_measurements(const WeightPosterior& weights, const ProjectedBasis& basis) {
  return predict_measurements(weights, basis.phi);
}

struct PosteriorField {
  ImageGrid mean;
  std::optional<ImageGrid> variance;
  int basis_size = 0;
};

/// Posterior mean (and optionally pointwise variance) at every pixel center.
/// Pixels are processed in row blocks so the basis matrix stays small.
inline PosteriorField predict_field(const WeightPosterior& weights, const BasisSystem& system,
                                    const ImageGrid& grid, bool with_variance = false) {
  if (weights.basis_size() != system.size()) throw std::invalid_argument("weights and basis sizes differ");
  if (grid.half_width > system.half_width() * (1.0 + 1e-12) ||
      grid.half_height > system.half_height() * (1.0 + 1e-12))
    throw std::invalid_argument("image grid extends outside the basis rectangle");

  PosteriorField out{grid.blank(), std::nullopt, system.size()};
  if (with_variance) out.variance = grid.blank();

  constexpr double kMaxEntries = 4e6;
  const int block = std::max(1, static_cast<int>(kMaxEntries / (double(system.size()) * grid.cols)));
  for (int r0 = 0; r0 < grid.rows; r0 += block) {
    const int r1 = std::min(grid.rows, r0 + block);
    const Eigen::MatrixXd psi = basis_at_pixels(system, grid, r0, r1);
    const Eigen::VectorXd mean = psi.transpose() * weights.mean;
    Eigen::VectorXd var;
    if (with_variance) var = weights.variance_of(psi);
    for (int i = 0; i < r1 - r0; ++i)
      for (int j = 0; j < grid.cols; ++j) {
        const Eigen::Index p = static_cast<Eigen::Index>(i) * grid.cols + j;
        out.mean.values(r0 + i, j) = mean(p);
        if (with_variance) out.variance->values(r0 + i, j) = var(p);
      }
  }
  return out;
}

/// Const-free Gaussian log marginal likelihood
///   -1/2 log det(Q + sigma^2 I) - 1/2 y^T (Q + sigma^2 I)^{-1} y,  Q = Phi^T Lambda Phi.
/// The weight-space route uses
///   det(sigma^2 I_n + Q) = sigma^{2(n-m)} det(sigma^2 I_m + D Phi Phi^T D)
/// and the matching Woodbury identity for the quadratic form.
inline double log_marginal_likelihood_gram(const GramCache& cache, const Eigen::VectorXd& lambda, double sigma) {
  detail::check_fit_inputs(lambda, sigma);
  const Eigen::VectorXd d = lambda.cwiseSqrt();
  const Cholesky chol = robust_cholesky(detail::weight_precision(cache.gram, d, sigma));
  const Eigen::VectorXd c = d.cwiseProduct(cache.phi_y);
  const double quad = (cache.yy - c.dot(chol.llt.solve(c))) / (sigma * sigma);
  const double m = static_cast<double>(lambda.size());
  const double log_det = (static_cast<double>(cache.n) - m) * std::log(sigma * sigma) + chol.log_det();
  return -0.5 * log_det - 0.5 * quad;
}

inline double log_marginal_likelihood_direct(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                             const Eigen::VectorXd& lambda, double sigma) {
  detail::check_fit_inputs(lambda, sigma);
  const Cholesky chol = robust_cholesky(detail::data_covariance(phi, lambda.cwiseSqrt(), sigma));
  return -0.5 * chol.log_det() - 0.5 * y.dot(chol.llt.solve(y));
}

inline double log_marginal_likelihood(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& lambda, double sigma,
                                      SolveForm form = SolveForm::Automatic) {
  if (phi.cols() != y.size() || phi.rows() != lambda.size())
    throw std::invalid_argument("marginal likelihood inputs have mismatched sizes");
  if (detail::resolve(form, phi.rows(), phi.cols()) == SolveForm::WeightSpace)
    return log_marginal_likelihood_gram(GramCache::build(phi, y), lambda, sigma);
  return log_marginal_likelihood_direct(phi, y, lambda, sigma);
}

/// Hyperparameters (sigma_f, l, sigma). `length_scale` is unused by the
/// Tikhonov and Laplacian families.
struct HyperParams {
  double sigma_f = 1.0;
  double length_scale = 1.0;
  double sigma = 1.0;
};

/// Marginal likelihood / posterior of the hyperparameters for one prior
/// family on fixed projected data. Phi does not depend on the
/// hyperparameters, so only Lambda and sigma are recomputed per evaluation.
class HyperObjective {
 public:
  HyperObjective(BasisSystem system, Eigen::MatrixXd phi, Eigen::VectorXd y, Family family, double nu = 1.0,
                 SolveForm form = SolveForm::Automatic)
      : system_(std::move(system)), phi_(std::move(phi)), y_(std::move(y)), family_(family), nu_(nu) {
    if (phi_.rows() != system_.size() || phi_.cols() != y_.size())
      throw std::invalid_argument("objective inputs have mismatched sizes");
    const double m = static_cast<double>(phi_.rows());
    const double n = static_cast<double>(phi_.cols());
    if (form == SolveForm::Automatic)
      form = (m * m * m / 3.0 <= n * n * m / 2.0 + n * n * n / 3.0) ? SolveForm::WeightSpace
                                                                        : SolveForm::DataSpace;
    form_ = form;
    if (form_ == SolveForm::WeightSpace) cache_ = GramCache::build(phi_, y_);
  }

  CovarianceSpec spec(const HyperParams& p) const { return {family_, p.sigma_f, p.length_scale, nu_}; }

  Eigen::VectorXd lambda(const HyperParams& p) const { return spectral_weights(system_, spec(p)); }

  /// Const-free log marginal likelihood.
  double log_likelihood(const HyperParams& p) const {
    if (!(p.sigma_f > 0.0) || !(p.sigma > 0.0) || (has_length_scale(family_) && !(p.length_scale > 0.0)))
      throw std::invalid_argument("hyperparameters must be positive");
    const Eigen::VectorXd lam = lambda(p);
    if (form_ == SolveForm::WeightSpace) return log_marginal_likelihood_gram(*cache_, lam, p.sigma);
    return log_marginal_likelihood_direct(phi_, y_, lam, p.sigma);
  }

  /// Log posterior with the scale-invariant priors p(x) ~ 1/x on each
  /// hyperparameter; the length scale term is absent for families without one.
  double log_posterior(const HyperParams& p) const {
    double v = log_likelihood(p) - std::log(p.sigma_f) - std::log(p.sigma);
    if (has_length_scale(family_)) v -= std::log(p.length_scale);
    return v;
  }

  WeightPosterior fit(const HyperParams& p) const {
    if (cache_) return fit_weights_gram(*cache_, lambda(p), p.sigma);
    return fit_weights(phi_, y_, lambda(p), p.sigma, SolveForm::DataSpace);
  }

  const BasisSystem& system() const { return system_; }
  const Eigen::MatrixXd& phi() const { return phi_; }
  const Eigen::VectorXd& y() const { return y_; }
  Family family() const { return family_; }
  double nu() const { return nu_; }
  SolveForm form() const { return form_; }

 private:
  BasisSystem system_;
  Eigen::MatrixXd phi_;
  Eigen::VectorXd y_;
  Family family_;
  double nu_;
  SolveForm form_ = SolveForm::WeightSpace;
  std::optional<GramCache> cache_;
};

}  // namespace gpct
