#pragma once

#include "gpct/covariance.hpp"
#include "gpct/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gpct {

/// Dirichlet Laplace eigenfunctions on [-L1, L1] x [-L2, L2]:
///
///   phi_k(x) = sin(a (x1 + L1)) sin(b (x2 + L2)) / sqrt(L1 L2),
///   a = pi i1 / (2 L1),  b = pi i2 / (2 L2),  lambda_k = a^2 + b^2,
///
/// with 1-based axis indices i1 <= m1, i2 <= m2. The flat index is 0-based,
/// k = (i1 - 1) + m1 (i2 - 1).
class BasisSystem {
 public:
  BasisSystem(double half_width, double half_height, int m1, int m2)
      : l1_(half_width), l2_(half_height), m1_(m1), m2_(m2) {
    if (!(l1_ > 0.0) || !(l2_ > 0.0)) throw std::invalid_argument("basis rectangle must be positive");
    if (m1_ < 1 || m2_ < 1) throw std::invalid_argument("basis counts must be positive");
  }

  /// Square rectangle with the default margin L = 1.25 R.
  static BasisSystem for_disk(double radius, int m1, int m2, double margin = 1.25) {
    return BasisSystem(margin * radius, margin * radius, m1, m2);
  }

  double half_width() const { return l1_; }
  double half_height() const { return l2_; }
  int m1() const { return m1_; }
  int m2() const { return m2_; }
  int size() const { return m1_ * m2_; }

  int index_of(int i1, int i2) const {
    if (i1 < 1 || i1 > m1_ || i2 < 1 || i2 > m2_) throw std::out_of_range("basis axis index out of range");
    return (i1 - 1) + m1_ * (i2 - 1);
  }

  /// 1-based (i1, i2) of flat index k.
  std::pair<int, int> axis_indices(int k) const {
    check(k);
    return {k % m1_ + 1, k / m1_ + 1};
  }

  double wavenumber1(int i1) const { return std::numbers::pi * i1 / (2.0 * l1_); }
  double wavenumber2(int i2) const { return std::numbers::pi * i2 / (2.0 * l2_); }

  double eigenvalue(int k) const {
    const auto [i1, i2] = axis_indices(k);
    const double a = wavenumber1(i1);
    const double b = wavenumber2(i2);
    return a * a + b * b;
  }

  Eigen::VectorXd eigenvalues() const {
    Eigen::VectorXd out(size());
    for (int k = 0; k < size(); ++k) out(k) = eigenvalue(k);
    return out;
  }

  double eval(int k, const Point& x) const {
    const auto [i1, i2] = axis_indices(k);
    return std::sin(wavenumber1(i1) * (x.x1 + l1_)) * std::sin(wavenumber2(i2) * (x.x2 + l2_)) /
           std::sqrt(l1_ * l2_);
  }

  bool contains(const Point& x) const {
    return std::abs(x.x1) <= l1_ * (1.0 + 1e-12) && std::abs(x.x2) <= l2_ * (1.0 + 1e-12);
  }

  void check(int k) const {
    if (k < 0 || k >= size()) throw std::out_of_range("basis index out of range");
  }

 private:
  double l1_;
  double l2_;
  int m1_;
  int m2_;
};

inline double basis_eval(const BasisSystem& system, int k, const Point& x) { return system.eval(k, x); }

namespace detail {

// sin(x)/x; below 1e-10 the Taylor remainder x^2/6 is under 1e-20.
inline double sinc(double x) { return std::abs(x) < 1e-10 ? 1.0 : std::sin(x) / x; }

}  // namespace detail

/// Closed-form integral of basis function k along `ray` for s in
/// [-half_length, half_length].
///
/// With x(s) = x0 + s u the integrand is sin(alpha s + beta) sin(gamma s + delta)
/// where alpha = -a sin(theta), beta = a (r cos(theta) + L1),
/// gamma = b cos(theta), delta = b (r sin(theta) + L2). Product-to-sum gives
///
///   S [cos(beta - delta) sinc((alpha - gamma) S) - cos(beta + delta) sinc((alpha + gamma) S)],
///
/// which stays finite through the alpha = +-gamma coincidences.
inline double phi_entry(const BasisSystem& system, int k, const Ray& ray, double half_length) {
  const auto [i1, i2] = system.axis_indices(k);
  if (half_length <= 0.0) return 0.0;
  const double a = system.wavenumber1(i1);
  const double b = system.wavenumber2(i2);
  const double c = std::cos(ray.theta);
  const double s = std::sin(ray.theta);
  const double alpha = -a * s;
  const double beta = a * (ray.r * c + system.half_width());
  const double gamma = b * c;
  const double delta = b * (ray.r * s + system.half_height());
  const double h = half_length;
  const double value = h * (std::cos(beta - delta) * detail::sinc((alpha - gamma) * h) -
                            std::cos(beta + delta) * detail::sinc((alpha + gamma) * h));
  return value / std::sqrt(system.half_width() * system.half_height());
}

/// Phi (m x n): column j holds every basis function integrated along ray j
/// over its chord through the scan disk.
inline Eigen::MatrixXd project_basis(const BasisSystem& system, std::span<const Ray> rays, double radius) {
  if (radius > std::min(system.half_width(), system.half_height()) * (1.0 + 1e-12))
    throw std::invalid_argument("scan disk does not fit inside the basis rectangle");
  const int m = system.size();
  const auto n = static_cast<Eigen::Index>(rays.size());
  Eigen::MatrixXd phi(m, n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) {
    const Ray& ray = rays[static_cast<std::size_t>(j)];
    const double h = chord_half_length(ray, radius);
    for (int k = 0; k < m; ++k) phi(k, j) = phi_entry(system, k, ray, h);
  }
  return phi;
}

/// Diagonal prior weights Lambda_kk = S(sqrt(lambda_k)).
inline Eigen::VectorXd spectral_weights(const BasisSystem& system, const CovarianceSpec& spec) {
  spec.validate();
  Eigen::VectorXd out(system.size());
  for (int k = 0; k < system.size(); ++k) out(k) = spectral_density(spec, std::sqrt(system.eigenvalue(k)));
  return out;
}

/// Basis functions integrated along the measurement rays, paired with the
/// spectral weights of one prior.
struct ProjectedBasis {
  Eigen::MatrixXd phi;     // m x n
  Eigen::VectorXd lambda;  // m

  int basis_size() const { return static_cast<int>(phi.rows()); }
  int measurement_count() const { return static_cast<int>(phi.cols()); }
};

inline ProjectedBasis assemble(const BasisSystem& system, const Sinogram& sinogram, const CovarianceSpec& spec) {
  sinogram.validate();
  return {project_basis(system, sinogram.rays, sinogram.radius), spectral_weights(system, spec)};
}

/// Basis values at the pixel centers of rows [row_begin, row_end), as an
/// m x (rows * cols) matrix with pixels in row-major order. Uses the
/// separable sine factors.
inline Eigen::MatrixXd basis_at_pixels(const BasisSystem& system, const ImageGrid& grid, int row_begin = 0,
                                       int row_end = -1) {
  if (row_end < 0) row_end = grid.rows;
  const int m1 = system.m1();
  const int m2 = system.m2();
  const int n_rows = row_end - row_begin;
  Eigen::MatrixXd s1(m1, grid.cols);
  Eigen::MatrixXd s2(m2, n_rows);
  for (int j = 0; j < grid.cols; ++j)
    for (int i1 = 1; i1 <= m1; ++i1)
      s1(i1 - 1, j) = std::sin(system.wavenumber1(i1) * (grid.x1_of_col(j) + system.half_width()));
  for (int i = 0; i < n_rows; ++i)
    for (int i2 = 1; i2 <= m2; ++i2)
      s2(i2 - 1, i) = std::sin(system.wavenumber2(i2) * (grid.x2_of_row(row_begin + i) + system.half_height()));
  const double norm = 1.0 / std::sqrt(system.half_width() * system.half_height());
  Eigen::MatrixXd out(system.size(), static_cast<Eigen::Index>(n_rows) * grid.cols);
  for (int i = 0; i < n_rows; ++i)
    for (int j = 0; j < grid.cols; ++j) {
      const Eigen::Index p = static_cast<Eigen::Index>(i) * grid.cols + j;
      for (int i2 = 0; i2 < m2; ++i2)
        for (int i1 = 0; i1 < m1; ++i1) out(i1 + m1 * i2, p) = norm * s1(i1, j) * s2(i2, i);
    }
  return out;
}

}  // namespace gpct
