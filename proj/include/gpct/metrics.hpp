#pragma once

#include "gpct/geometry.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace gpct {

/// 100 * ||f_true - f_rec||_2 / ||f_true||_2 over all pixels.
inline double relative_error(const ImageGrid& truth, const ImageGrid& rec) {
  if (!truth.same_shape(rec)) throw std::invalid_argument("images differ in shape");
  const double denom = truth.values.norm();
  if (!(denom > 0.0)) throw std::invalid_argument("ground truth image is identically zero");
  return 100.0 * (truth.values - rec.values).norm() / denom;
}

inline double mean_squared_error(const ImageGrid& truth, const ImageGrid& rec) {
  if (!truth.same_shape(rec)) throw std::invalid_argument("images differ in shape");
  return (truth.values - rec.values).squaredNorm() / static_cast<double>(truth.values.size());
}

/// 10 log10(peak^2 / MSE); +infinity when the images agree exactly.
inline double psnr(const ImageGrid& truth, const ImageGrid& rec, double peakval) {
  if (!(peakval > 0.0)) throw std::invalid_argument("peak value must be positive");
  const double mse = mean_squared_error(truth, rec);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peakval * peakval / mse);
}

struct Metrics {
  double relative_error = 0.0;  // percent
  double psnr = 0.0;            // dB
  double peakval = 0.0;
  bool peak_from_truth = true;  // peakval taken as max(f_true)
};

inline Metrics compare_images(const ImageGrid& truth, const ImageGrid& rec, std::optional<double> peakval = {}) {
  Metrics m;
  m.peak_from_truth = !peakval.has_value();
  m.peakval = peakval.value_or(truth.values.maxCoeff());
  m.relative_error = relative_error(truth, rec);
  m.psnr = psnr(truth, rec, m.peakval);
  return m;
}

}  // namespace gpct
