#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace gpct {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// One parallel-beam projection line: the set of x with
/// x1 cos(theta) + x2 sin(theta) = r.
struct Ray {
  double theta = 0.0;
  double r = 0.0;

  Point origin() const { return {r * std::cos(theta), r * std::sin(theta)}; }
  Point direction() const { return {-std::sin(theta), std::cos(theta)}; }
};

/// Point at arc length s along the ray, measured from the foot point
/// closest to the origin.
inline Point ray_point(const Ray& ray, double s) {
  const double c = std::cos(ray.theta);
  const double sn = std::sin(ray.theta);
  return {ray.r * c - s * sn, ray.r * sn + s * c};
}

/// Half-length of the ray's chord through the disk of the given radius
/// (zero if the ray misses it).
inline double chord_half_length(const Ray& ray, double radius) {
  const double h2 = radius * radius - ray.r * ray.r;
  return h2 > 0.0 ? std::sqrt(h2) : 0.0;
}

/// Parallel-beam acquisition: n_angles directions spread uniformly over
/// [0, angle_span) and n_rays offsets spread uniformly over [-R, R].
struct ScanGeometry {
  double radius = 1.0;
  int n_angles = 1;
  double angle_span = std::numbers::pi;
  int n_rays = 1;

  void validate() const {
    if (!(radius > 0.0)) throw std::invalid_argument("scan radius must be positive");
    if (n_angles < 1) throw std::invalid_argument("n_angles must be positive");
    if (n_rays < 1) throw std::invalid_argument("n_rays must be positive");
    if (!(angle_span > 0.0)) throw std::invalid_argument("angle span must be positive");
  }

  std::size_t size() const { return static_cast<std::size_t>(n_angles) * n_rays; }

  double angle(int a) const { return angle_span * a / n_angles; }

  double offset(int k) const {
    if (n_rays == 1) return 0.0;
    return -radius + 2.0 * radius * k / (n_rays - 1);
  }

  double ray_spacing() const { return n_rays == 1 ? 2.0 * radius : 2.0 * radius / (n_rays - 1); }

  /// Angle-major ordering: all offsets of the first angle, then the next.
  std::vector<Ray> rays() const {
    validate();
    std::vector<Ray> out;
    out.reserve(size());
    for (int a = 0; a < n_angles; ++a)
      for (int k = 0; k < n_rays; ++k) out.push_back({angle(a), offset(k)});
    return out;
  }
};

/// Measurements y_i = (line integral along rays[i]) + noise.
struct Sinogram {
  double radius = 1.0;
  std::vector<Ray> rays;
  Eigen::VectorXd y;
  std::optional<double> noise_sigma;
  std::optional<ScanGeometry> geometry;

  std::size_t size() const { return rays.size(); }

  void validate() const {
    if (static_cast<std::size_t>(y.size()) != rays.size())
      throw std::invalid_argument("sinogram has mismatched ray and value counts");
    if (!(radius > 0.0)) throw std::invalid_argument("sinogram radius must be positive");
  }
};

/// N1 x N2 pixel image over [-L1, L1] x [-L2, L2]. Row 0 is the top row
/// (largest x2); column 0 is the leftmost (smallest x1).
struct ImageGrid {
  int rows = 0;
  int cols = 0;
  double half_width = 1.0;   // L1, extent along x1 (columns)
  double half_height = 1.0;  // L2, extent along x2 (rows)
  Eigen::MatrixXd values;

  ImageGrid() = default;
  ImageGrid(int n1, int n2, double l1, double l2)
      : rows(n1), cols(n2), half_width(l1), half_height(l2), values(Eigen::MatrixXd::Zero(n1, n2)) {
    if (n1 < 1 || n2 < 1) throw std::invalid_argument("image dimensions must be positive");
    if (!(l1 > 0.0) || !(l2 > 0.0)) throw std::invalid_argument("image extent must be positive");
  }

  /// Square image of n x n pixels covering [-extent, extent]^2.
  static ImageGrid square(int n, double extent) { return ImageGrid(n, n, extent, extent); }

  double pixel_width() const { return 2.0 * half_width / cols; }
  double pixel_height() const { return 2.0 * half_height / rows; }
  double pixel_area() const { return pixel_width() * pixel_height(); }

  double x1_of_col(int j) const { return -half_width + (j + 0.5) * pixel_width(); }
  double x2_of_row(int i) const { return half_height - (i + 0.5) * pixel_height(); }
  Point center(int i, int j) const { return {x1_of_col(j), x2_of_row(i)}; }

  bool same_shape(const ImageGrid& other) const { return rows == other.rows && cols == other.cols; }

  /// Fresh zero image with the same layout.
  ImageGrid blank() const { return ImageGrid(rows, cols, half_width, half_height); }

  /// Bilinear interpolation between pixel centers; the image is treated as
  /// zero beyond its border pixels.
  double sample(const Point& p) const {
    const double u = (p.x1 + half_width) / pixel_width() - 0.5;
    const double v = (half_height - p.x2) / pixel_height() - 0.5;
    if (u <= -1.0 || v <= -1.0 || u >= cols || v >= rows) return 0.0;
    const int j0 = static_cast<int>(std::floor(u));
    const int i0 = static_cast<int>(std::floor(v));
    const double fu = u - j0;
    const double fv = v - i0;
    auto at = [&](int i, int j) {
      return (i >= 0 && i < rows && j >= 0 && j < cols) ? values(i, j) : 0.0;
    };
    return (1.0 - fv) * ((1.0 - fu) * at(i0, j0) + fu * at(i0, j0 + 1)) +
           fv * ((1.0 - fu) * at(i0 + 1, j0) + fu * at(i0 + 1, j0 + 1));
  }
};

}  // namespace gpct
