#pragma once

#include "gpct/geometry.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace gpct {

/// Line integrals of a raster image by trapezoid sampling along each ray with
/// bilinear interpolation. `step` <= 0 selects half the smaller pixel size.
inline Sinogram pixel_sinogram(const ImageGrid& image, const ScanGeometry& geometry,
                               double step = 0.0) {
  geometry.validate();
  if (image.half_width < geometry.radius * (1.0 - 1e-12) ||
      image.half_height < geometry.radius * (1.0 - 1e-12))
    throw std::invalid_argument("image extent does not contain the scan disk");
  if (step <= 0.0) step = 0.5 * std::min(image.pixel_width(), image.pixel_height());

  // Every ray is sampled over the whole image diagonal; samples outside the
  // image read zero.
  const double reach = std::hypot(image.half_width, image.half_height);
  const int n_steps = static_cast<int>(std::ceil(2.0 * reach / step));
  const double h = 2.0 * reach / n_steps;

  Sinogram s;
  s.radius = geometry.radius;
  s.geometry = geometry;
  s.rays = geometry.rays();
  s.y.resize(static_cast<Eigen::Index>(s.rays.size()));
  for (std::size_t i = 0; i < s.rays.size(); ++i) {
    double acc = 0.0;
    for (int k = 0; k <= n_steps; ++k) {
      const double w = (k == 0 || k == n_steps) ? 0.5 : 1.0;
      acc += w * image.sample(ray_point(s.rays[i], -reach + k * h));
    }
    s.y(static_cast<Eigen::Index>(i)) = acc * h;
  }
  return s;
}

/// Adds iid N(0, sigma^2) noise from a 64-bit Mersenne twister seeded with
/// `seed`, and records sigma on the result.
inline Sinogram add_noise(Sinogram sinogram, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be nonnegative");
  sinogram.noise_sigma = sigma;
  if (sigma == 0.0) return sinogram;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (Eigen::Index i = 0; i < sinogram.y.size(); ++i) sinogram.y(i) += normal(rng);
  return sinogram;
}

}  // namespace gpct
