#include "gpct/gp.hpp"
#include "gpct/linalg.hpp"
#include "gpct/phantom.hpp"

#include "catch_amalgamated.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace gpct;
using Catch::Approx;

namespace {

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

struct Problem {
  BasisSystem system;
  std::vector<Ray> rays;
  Eigen::MatrixXd phi;
  Eigen::VectorXd y;
};

Problem random_problem(std::uint64_t seed, int m1, int m2, int n) {
  std::mt19937_64 rng(seed);
  Problem p{BasisSystem::for_disk(1.0, m1, m2), oracle::random_rays(rng, n, 1.0), {}, {}};
  p.phi = project_basis(p.system, p.rays, 1.0);
  p.y = oracle::random_vector(rng, n);
  return p;
}

Eigen::MatrixXd one(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

}  // namespace

TEST_CASE("scalar posterior", "[gp]") {
  const Eigen::VectorXd lambda = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 5.0);
  for (auto form : {SolveForm::WeightSpace, SolveForm::DataSpace}) {
    const auto w = fit_weights(one(2.0), y, lambda, 1.0, form);
    CHECK(w.mean(0) == Approx(2.0));
    CHECK((one(0.5).transpose() * w.mean)(0) == Approx(1.0));
    CHECK(w.variance_of(one(0.5))(0) == Approx(0.05));
    CHECK(w.covariance_of(one(0.5))(0, 0) == Approx(0.05));
    CHECK(predict_measurements(w, one(2.0))(0) == Approx(4.0));
    CHECK(log_marginal_likelihood(one(2.0), y, lambda, 1.0, form) == Approx(-0.5 * std::log(5.0) - 2.5));
    CHECK(log_marginal_likelihood(one(2.0), y, lambda, 1.0, form) == Approx(-3.3047).epsilon(1e-4));
  }
}

TEST_CASE("zero data gives zero mean", "[gp]") {
  const auto p = random_problem(1, 4, 5, 13);
  const Eigen::VectorXd lam = Eigen::VectorXd::Constant(20, 0.3);
  for (auto form : {SolveForm::WeightSpace, SolveForm::DataSpace}) {
    const auto w = fit_weights(p.phi, Eigen::VectorXd::Zero(13), lam, 0.5, form);
    CHECK(w.mean.isZero(0.0));
    CHECK(predict_measurements(w, p.phi).isZero(0.0));
  }
}

TEST_CASE("weight-space and data-space forms agree", "[gp]") {
  for (std::uint64_t seed : {2, 3, 4}) {
    const auto p = random_problem(seed, 4, 5, 15);
    const Eigen::VectorXd lam = spectral_weights(p.system, {Family::Matern, 0.8, 0.4, 1.0});
    const auto ws = fit_weights(p.phi, p.y, lam, 0.2, SolveForm::WeightSpace);
    const auto ds = fit_weights(p.phi, p.y, lam, 0.2, SolveForm::DataSpace);
    CHECK(ws.form == SolveForm::WeightSpace);
    CHECK(ds.form == SolveForm::DataSpace);
    CHECK(rel(ws.mean, ds.mean) <= 1e-10);

    const Eigen::MatrixXd psi = basis_at_pixels(p.system, ImageGrid::square(6, 1.0));
    CHECK(rel(ws.covariance_of(psi), ds.covariance_of(psi)) <= 1e-10);
    CHECK(rel(ws.variance_of(psi), ds.variance_of(psi)) <= 1e-10);

    const double a = log_marginal_likelihood(p.phi, p.y, lam, 0.2, SolveForm::WeightSpace);
    const double b = log_marginal_likelihood(p.phi, p.y, lam, 0.2, SolveForm::DataSpace);
    CHECK(a == Approx(b).epsilon(1e-10));
    CHECK(a == Approx(oracle::dense_log_marginal(p.phi, p.y, lam, 0.2)).epsilon(1e-10));
  }
  // Automatic picks the smaller system.
  const auto tall = random_problem(5, 3, 3, 20);
  CHECK(fit_weights(tall.phi, tall.y, Eigen::VectorXd::Ones(9), 1.0).form == SolveForm::WeightSpace);
  const auto wide = random_problem(5, 5, 5, 20);
  CHECK(fit_weights(wide.phi, wide.y, Eigen::VectorXd::Ones(25), 1.0).form == SolveForm::DataSpace);
}

TEST_CASE("posterior matches a dense GP with the truncated kernel", "[gp]") {
  const auto p = random_problem(7, 5, 5, 12);
  const CovarianceSpec spec{Family::SquaredExponential, 1.0, 0.35, 1.0};
  const Eigen::VectorXd lam = spectral_weights(p.system, spec);
  const double sigma = 0.1;
  const ImageGrid grid = ImageGrid::square(5, 1.0);

  oracle::DenseLineGp dense{p.system.half_width(), p.system.half_height(), 5, 5, {}};
  dense.spectral.resize(25);
  for (int i2 = 1; i2 <= 5; ++i2)
    for (int i1 = 1; i1 <= 5; ++i1) {
      const double a = std::numbers::pi * i1 / (2.0 * dense.l1);
      const double b = std::numbers::pi * i2 / (2.0 * dense.l2);
      dense.spectral((i1 - 1) + 5 * (i2 - 1)) =
          2.0 * std::numbers::pi * 0.35 * 0.35 * std::exp(-0.35 * 0.35 * (a * a + b * b) / 2.0);
    }
  std::vector<Point> targets;
  for (int i = 0; i < grid.rows; ++i)
    for (int j = 0; j < grid.cols; ++j) targets.push_back(grid.center(i, j));
  const auto ref = dense.predict(p.rays, 1.0, p.y, sigma, targets, 40);

  const auto w = fit_weights(p.phi, p.y, lam, sigma);
  const auto field = predict_field(w, p.system, grid, true);
  Eigen::VectorXd mean(25), var(25);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      mean(i * 5 + j) = field.mean.values(i, j);
      var(i * 5 + j) = field.variance->values(i, j);
    }
  CHECK(rel(mean, ref.mean) <= 1e-6);
  CHECK(rel(var, ref.variance) <= 1e-5);
}

TEST_CASE("mean is linear in the data", "[gp]") {
  const auto p = random_problem(8, 6, 6, 30);
  std::mt19937_64 rng(80);
  const Eigen::VectorXd y2 = oracle::random_vector(rng, 30);
  const Eigen::VectorXd lam = spectral_weights(p.system, {Family::SquaredExponential, 1.0, 0.3, 1.0});
  for (auto form : {SolveForm::WeightSpace, SolveForm::DataSpace}) {
    const auto w1 = fit_weights(p.phi, p.y, lam, 0.3, form);
    const auto w2 = fit_weights(p.phi, y2, lam, 0.3, form);
    const auto wc = fit_weights(p.phi, 1.7 * p.y - 0.4 * y2, lam, 0.3, form);
    CHECK(rel(wc.mean, 1.7 * w1.mean - 0.4 * w2.mean) <= 1e-10);
  }
}

TEST_CASE("posterior variance does not depend on the data", "[gp]") {
  const auto p = random_problem(9, 6, 6, 25);
  const Eigen::VectorXd lam = spectral_weights(p.system, {Family::Matern, 1.0, 0.3, 1.0});
  Eigen::VectorXd shuffled = p.y;
  std::mt19937_64 rng(90);
  std::shuffle(shuffled.data(), shuffled.data() + shuffled.size(), rng);
  const ImageGrid grid = ImageGrid::square(12, 1.0);
  const auto a = predict_field(fit_weights(p.phi, p.y, lam, 0.2), p.system, grid, true);
  const auto b = predict_field(fit_weights(p.phi, shuffled, lam, 0.2), p.system, grid, true);
  CHECK(a.variance->values == b.variance->values);
  CHECK(a.mean.values != b.mean.values);
}

TEST_CASE("posterior variance is bounded by the prior variance", "[gp]") {
  const auto p = random_problem(10, 7, 7, 30);
  const Eigen::VectorXd lam = spectral_weights(p.system, {Family::Matern, 1.0, 0.3, 1.0});
  const ImageGrid grid = ImageGrid::square(10, 1.0);
  const auto field = predict_field(fit_weights(p.phi, p.y, lam, 0.2), p.system, grid, true);
  const Eigen::MatrixXd psi = basis_at_pixels(p.system, grid);
  const Eigen::VectorXd prior = (psi.array().square().colwise() * lam.array()).colwise().sum().transpose();
  for (int i = 0; i < grid.rows; ++i)
    for (int j = 0; j < grid.cols; ++j) CHECK(field.variance->values(i, j) <= prior(i * grid.cols + j) + 1e-12);
}

TEST_CASE("adding a measurement never increases the variance", "[gp]") {
  for (std::uint64_t seed : {11, 12}) {
    const auto p = random_problem(seed, 5, 5, 16);
    const Eigen::VectorXd lam = spectral_weights(p.system, {Family::SquaredExponential, 1.0, 0.4, 1.0});
    const ImageGrid grid = ImageGrid::square(8, 1.0);
    ImageGrid previous;
    for (int n = 4; n <= 16; n += 4) {
      const auto w = fit_weights(p.phi.leftCols(n), p.y.head(n), lam, 0.3);
      const auto field = predict_field(w, p.system, grid, true);
      if (n > 4) CHECK(((field.variance->values - previous.values).array() <= 1e-12).all());
      previous = *field.variance;
    }
  }
}

TEST_CASE("Tikhonov prior gives the classical regularized solution", "[gp]") {
  const auto p = random_problem(13, 6, 6, 40);
  const double sf = 0.7;
  const double sigma = 0.25;
  const Eigen::VectorXd lam = spectral_weights(p.system, {Family::Tikhonov, sf, 1.0, 1.0});
  for (auto form : {SolveForm::WeightSpace, SolveForm::DataSpace}) {
    const auto w = fit_weights(p.phi, p.y, lam, sigma, form);
    const Eigen::VectorXd grad =
        p.phi * (p.phi.transpose() * w.mean - p.y) / (sigma * sigma) + w.mean / (sf * sf);
    CHECK(grad.norm() <= 1e-8 * (p.phi * p.y).norm() / (sigma * sigma));
  }
}

TEST_CASE("residual shrinks as sigma decreases", "[gp]") {
  const auto p = random_problem(14, 6, 6, 40);
  const Eigen::VectorXd lam = spectral_weights(p.system, {Family::Matern, 1.0, 0.3, 1.0});
  double previous = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    const double sigma = 10.0 * std::pow(0.01, i / 19.0);
    const auto w = fit_weights(p.phi, p.y, lam, sigma);
    const double res = (predict_measurements(w, p.phi) - p.y).norm();
    CHECK(res <= previous * (1.0 + 1e-12));
    previous = res;
  }
}

TEST_CASE("marginal likelihood is invariant to measurement order", "[gp]") {
  const auto p = random_problem(15, 4, 4, 12);
  const Eigen::VectorXd lam = spectral_weights(p.system, {Family::SquaredExponential, 1.0, 0.4, 1.0});
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(150);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd phi2(p.phi.rows(), 12);
  Eigen::VectorXd y2(12);
  for (int j = 0; j < 12; ++j) {
    phi2.col(j) = p.phi.col(perm[j]);
    y2(j) = p.y(perm[j]);
  }
  for (auto form : {SolveForm::WeightSpace, SolveForm::DataSpace})
    CHECK(log_marginal_likelihood(phi2, y2, lam, 0.3, form) ==
          Approx(log_marginal_likelihood(p.phi, p.y, lam, 0.3, form)).epsilon(1e-12));
}

TEST_CASE("hyperparameter objective", "[gp]") {
  const auto p = random_problem(16, 5, 5, 30);
  const HyperParams h{0.9, 0.3, 0.2};
  for (auto form : {SolveForm::WeightSpace, SolveForm::DataSpace}) {
    const HyperObjective obj(p.system, p.phi, p.y, Family::Matern, 1.0, form);
    const Eigen::VectorXd lam = spectral_weights(p.system, {Family::Matern, 0.9, 0.3, 1.0});
    CHECK(obj.form() == form);
    CHECK(obj.log_likelihood(h) == Approx(oracle::dense_log_marginal(p.phi, p.y, lam, 0.2)).epsilon(1e-10));
    CHECK(obj.log_posterior(h) ==
          Approx(obj.log_likelihood(h) - std::log(0.9) - std::log(0.3) - std::log(0.2)).epsilon(1e-14));
    CHECK(rel(obj.fit(h).mean, fit_weights(p.phi, p.y, lam, 0.2).mean) <= 1e-10);
    CHECK_THROWS_AS(obj.log_likelihood({0.9, 0.3, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(obj.log_likelihood({-1.0, 0.3, 0.2}), std::invalid_argument);
  }
  const HyperObjective tik(p.system, p.phi, p.y, Family::Tikhonov);
  CHECK(tik.log_posterior({0.9, 123.0, 0.2}) == Approx(tik.log_likelihood({0.9, 1.0, 0.2}) - std::log(0.9 * 0.2)));
  CHECK_THROWS_AS(HyperObjective(p.system, p.phi.leftCols(3), p.y, Family::Tikhonov), std::invalid_argument);
}

TEST_CASE("input validation and jitter", "[gp]") {
  const auto p = random_problem(17, 3, 3, 6);
  CHECK_THROWS_AS(fit_weights(p.phi, p.y, Eigen::VectorXd::Ones(9), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_weights(p.phi, p.y, Eigen::VectorXd::Ones(8), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_weights(p.phi, p.y.head(5), Eigen::VectorXd::Ones(9), 1.0), std::invalid_argument);
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(9);
  bad(2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_weights(p.phi, p.y, bad, 1.0), NumericalError);

  // Rank-deficient PSD matrix: plain Cholesky may fail, jitter rescues it.
  Eigen::MatrixXd v(4, 2);
  v << 1, 2, 3, 4, 5, 6, 7, 8;
  const Eigen::MatrixXd singular = v * v.transpose();
  const Cholesky c = robust_cholesky(singular);
  CHECK(c.llt.info() == Eigen::Success);
  CHECK(c.jitter >= 0.0);
  CHECK(robust_cholesky(Eigen::MatrixXd::Identity(3, 3)).jitter == 0.0);
  CHECK(robust_cholesky(Eigen::MatrixXd::Identity(3, 3) * 4.0).log_det() == Approx(3.0 * std::log(4.0)));
  CHECK_THROWS_AS(robust_cholesky(-Eigen::MatrixXd::Identity(3, 3)), NumericalError);
  Eigen::MatrixXd inf = Eigen::MatrixXd::Identity(2, 2);
  inf(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(robust_cholesky(inf), NumericalError);
}

TEST_CASE("field prediction checks its inputs", "[gp]") {
  const auto p = random_problem(18, 3, 3, 6);
  const auto w = fit_weights(p.phi, p.y, Eigen::VectorXd::Ones(9), 1.0);
  CHECK_THROWS_AS(predict_field(w, BasisSystem::for_disk(1.0, 4, 4), ImageGrid::square(4, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(predict_field(w, p.system, ImageGrid::square(4, 2.0)), std::invalid_argument);
  CHECK_FALSE(predict_field(w, p.system, ImageGrid::square(4, 1.0)).variance.has_value());
}
