#pragma once

#include "gpct/gp.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace gpct {

struct LCurvePoint {
  double sigma = 0.0;
  double residual_norm = 0.0;  // ||Phi^T mu - y||_2
  double solution_norm = 0.0;  // L2 norm of the mean image
};

struct LCurve {
  std::vector<LCurvePoint> points;
  std::optional<std::size_t> corner;  // index into points

  std::optional<double> corner_sigma() const {
    if (!corner) return std::nullopt;
    return points[*corner].sigma;
  }
};

/// Signed curvature of the circle through three points; positive for a
/// counter-clockwise turn.
inline double three_point_curvature(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double cross = (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1);
  const double a = std::hypot(x1 - x0, y1 - y0);
  const double b = std::hypot(x2 - x1, y2 - y1);
  const double c = std::hypot(x2 - x0, y2 - y0);
  const double denom = a * b * c;
  return denom > 0.0 ? 2.0 * cross / denom : 0.0;
}

/// Index of the interior point of maximum curvature of the log-log curve
/// (log residual, log solution norm). Needs at least three points.
inline std::optional<std::size_t> lcurve_corner(const std::vector<LCurvePoint>& pts) {
  if (pts.size() < 3) return std::nullopt;
  std::optional<std::size_t> best;
  double best_kappa = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    auto lx = [&](std::size_t k) { return std::log(std::max(pts[k].residual_norm, 1e-300)); };
    auto ly = [&](std::size_t k) { return std::log(std::max(pts[k].solution_norm, 1e-300)); };
    const double kappa = three_point_curvature(lx(i - 1), ly(i - 1), lx(i), ly(i), lx(i + 1), ly(i + 1));
    if (kappa > best_kappa) {
      best_kappa = kappa;
      best = i;
    }
  }
  return best;
}

/// Sweeps the noise level over an ascending grid with sigma_f and l held
/// fixed, recording residual and solution norms; the solution norm is the
/// pixel l2 norm of the mean image scaled by sqrt(pixel area).
inline LCurve l_curve(const HyperObjective& objective, const std::vector<double>& sigma_grid, double sigma_f,
                      double length_scale, const ImageGrid& grid) {
  for (std::size_t i = 0; i < sigma_grid.size(); ++i) {
    if (!(sigma_grid[i] > 0.0)) throw std::invalid_argument("L-curve sigma values must be positive");
    if (i > 0 && !(sigma_grid[i] > sigma_grid[i - 1]))
      throw std::invalid_argument("L-curve sigma grid must be strictly ascending");
  }
  LCurve out;
  const double area = std::sqrt(grid.pixel_area());
  for (double sigma : sigma_grid) {
    const WeightPosterior w = objective.fit({sigma_f, length_scale, sigma});
    const Eigen::VectorXd residual = predict_measurements(w, objective.phi()) - objective.y();
    const PosteriorField field = predict_field(w, objective.system(), grid, false);
    out.points.push_back({sigma, residual.norm(), field.mean.values.norm() * area});
  }
  out.corner = lcurve_corner(out.points);
  return out;
}

/// n values log-spaced over [lo, hi].
inline std::vector<double> log_space(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw std::invalid_argument("invalid log-spaced grid");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace gpct
