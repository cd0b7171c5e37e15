#pragma once

#include "gpct/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace gpct {

/// Solid ellipse of constant additive attenuation. `psi` rotates the first
/// semi-axis counter-clockwise away from the x1 axis.
struct Ellipse {
  double c1 = 0.0;
  double c2 = 0.0;
  double a = 1.0;
  double b = 1.0;
  double psi = 0.0;
  double rho = 1.0;

  bool contains(const Point& p) const {
    const double dx = p.x1 - c1;
    const double dy = p.x2 - c2;
    const double cp = std::cos(psi);
    const double sp = std::sin(psi);
    const double u = (cp * dx + sp * dy) / a;
    const double v = (-sp * dx + cp * dy) / b;
    return u * u + v * v <= 1.0;
  }

  /// Exact length of the intersection of the ray with the ellipse. The ray
  /// is mapped into the frame where the ellipse is the unit circle; there the
  /// chord is 2 sqrt(1 - d^2) in units of the mapped direction's length.
  double chord(const Ray& ray) const {
    const Point x0 = ray.origin();
    const Point u = ray.direction();
    const double cp = std::cos(psi);
    const double sp = std::sin(psi);
    const double dx = x0.x1 - c1;
    const double dy = x0.x2 - c2;
    const double p1 = (cp * dx + sp * dy) / a;
    const double p2 = (-sp * dx + cp * dy) / b;
    const double v1 = (cp * u.x1 + sp * u.x2) / a;
    const double v2 = (-sp * u.x1 + cp * u.x2) / b;
    const double vv = v1 * v1 + v2 * v2;
    const double cross = p1 * v2 - p2 * v1;
    const double d2 = cross * cross / vv;
    if (d2 >= 1.0) return 0.0;
    return 2.0 * std::sqrt((1.0 - d2) / vv);
  }

  /// Largest distance from the origin to a point of the ellipse.
  double max_radius() const {
    constexpr int kSamples = 4096;
    const double cp = std::cos(psi);
    const double sp = std::sin(psi);
    double best = 0.0;
    for (int k = 0; k < kSamples; ++k) {
      const double t = 2.0 * std::numbers::pi * k / kSamples;
      const double ex = a * std::cos(t);
      const double ey = b * std::sin(t);
      best = std::max(best, std::hypot(c1 + cp * ex - sp * ey, c2 + sp * ex + cp * ey));
    }
    return best;
  }
};

struct EllipsePhantom {
  std::vector<Ellipse> ellipses;

  double value(const Point& p) const {
    double f = 0.0;
    for (const auto& e : ellipses)
      if (e.contains(p)) f += e.rho;
    return f;
  }

  double line_integral(const Ray& ray) const {
    double y = 0.0;
    for (const auto& e : ellipses) y += e.rho * e.chord(ray);
    return y;
  }

  double extent() const {
    double r = 0.0;
    for (const auto& e : ellipses) r = std::max(r, e.max_radius());
    return r;
  }

  void validate(double radius) const {
    for (const auto& e : ellipses) {
      if (!(e.a > 0.0) || !(e.b > 0.0))
        throw std::invalid_argument("ellipse semi-axes must be positive");
      if (e.max_radius() > radius * (1.0 + 1e-9))
        throw std::invalid_argument("ellipse extends outside the scan disk");
    }
  }

  /// Modified (higher-contrast) Shepp-Logan head phantom scaled so the unit
  /// disk maps onto the disk of the given radius.
  static EllipsePhantom shepp_logan(double radius) {
    struct Row {
      double rho, a, b, c1, c2, deg;
    };
    static constexpr Row rows[] = {
        {1.0, .69, .92, 0.0, 0.0, 0.0},        {-.8, .6624, .8740, 0.0, -.0184, 0.0},
        {-.2, .1100, .3100, .22, 0.0, -18.0},  {-.2, .1600, .4100, -.22, 0.0, 18.0},
        {.1, .2100, .2500, 0.0, .35, 0.0},     {.1, .0460, .0460, 0.0, .1, 0.0},
        {.1, .0460, .0460, 0.0, -.1, 0.0},     {.1, .0460, .0230, -.08, -.605, 0.0},
        {.1, .0230, .0230, 0.0, -.606, 0.0},   {.1, .0230, .0460, .06, -.605, 0.0},
    };
    EllipsePhantom p;
    for (const auto& r : rows)
      p.ellipses.push_back({r.c1 * radius, r.c2 * radius, r.a * radius, r.b * radius,
                            r.deg * std::numbers::pi / 180.0, r.rho});
    return p;
  }

  static EllipsePhantom centered_disk(double disk_radius, double rho = 1.0) {
    return EllipsePhantom{{Ellipse{0.0, 0.0, disk_radius, disk_radius, 0.0, rho}}};
  }
};

/// Exact (noise-free) parallel-beam data of an ellipse phantom.
inline Sinogram analytic_sinogram(const EllipsePhantom& phantom, const ScanGeometry& geometry) {
  phantom.validate(geometry.radius);
  Sinogram s;
  s.radius = geometry.radius;
  s.geometry = geometry;
  s.rays = geometry.rays();
  s.y.resize(static_cast<Eigen::Index>(s.rays.size()));
  for (std::size_t i = 0; i < s.rays.size(); ++i)
    s.y(static_cast<Eigen::Index>(i)) = phantom.line_integral(s.rays[i]);
  return s;
}

/// Pixel-averaged raster: each pixel is the mean over a supersample x
/// supersample lattice of point evaluations.
inline ImageGrid rasterize(const EllipsePhantom& phantom, ImageGrid grid, int supersample = 1) {
  if (supersample < 1) throw std::invalid_argument("supersample must be >= 1");
  const double dw = grid.pixel_width() / supersample;
  const double dh = grid.pixel_height() / supersample;
  const double inv = 1.0 / (supersample * supersample);
  for (int i = 0; i < grid.rows; ++i) {
    for (int j = 0; j < grid.cols; ++j) {
      const double left = -grid.half_width + j * grid.pixel_width();
      const double top = grid.half_height - i * grid.pixel_height();
      double acc = 0.0;
      for (int a = 0; a < supersample; ++a)
        for (int b = 0; b < supersample; ++b)
          acc += phantom.value({left + (b + 0.5) * dw, top - (a + 0.5) * dh});
      grid.values(i, j) = acc * inv;
    }
  }
  return grid;
}

}  // namespace gpct
