#pragma once

#include "gpct/geometry.hpp"

#include <fftw3.h>

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gpct {

enum class FilterKind { RamLak, SheppLogan, Cosine, Hamming, Hann };

inline FilterKind parse_filter(std::string_view s) {
  if (s == "ramlak") return FilterKind::RamLak;
  if (s == "shepplogan") return FilterKind::SheppLogan;
  if (s == "cosine") return FilterKind::Cosine;
  if (s == "hamming") return FilterKind::Hamming;
  if (s == "hann") return FilterKind::Hann;
  throw std::invalid_argument("unknown filter '" + std::string(s) + "'");
}

inline std::string_view filter_name(FilterKind k) {
  switch (k) {
    case FilterKind::RamLak: return "ramlak";
    case FilterKind::SheppLogan: return "shepplogan";
    case FilterKind::Cosine: return "cosine";
    case FilterKind::Hamming: return "hamming";
    case FilterKind::Hann: return "hann";
  }
  return "?";
}

/// Apodization window w at the normalized frequency x = omega / omega_Nyquist
/// in [0, 1].
inline double filter_window(FilterKind kind, double x) {
  constexpr double pi = std::numbers::pi;
  switch (kind) {
    case FilterKind::RamLak: return 1.0;
    case FilterKind::SheppLogan: {
      const double t = pi * x / 2.0;
      return t == 0.0 ? 1.0 : std::sin(t) / t;
    }
    case FilterKind::Cosine: return std::cos(pi * x / 2.0);
    case FilterKind::Hamming: return 0.54 + 0.46 * std::cos(pi * x);
    case FilterKind::Hann: return 0.5 * (1.0 + std::cos(pi * x));
  }
  return 1.0;
}

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct FftwPlan {
  fftw_plan plan = nullptr;
  explicit FftwPlan(fftw_plan p) : plan(p) {}
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  ~FftwPlan() {
    if (plan) fftw_destroy_plan(plan);
  }
};

}  // namespace detail

/// Frequency response |omega| w(|omega| / omega_N) of the ramp filter for ray
/// spacing `spacing`; omega_N = pi / spacing.
inline double filter_gain(FilterKind kind, double omega, double spacing) {
  const double w = std::abs(omega);
  return w * filter_window(kind, std::min(w * spacing / std::numbers::pi, 1.0));
}

/// Ramp-filters one projection: zero-pad to a power of two >= 2n, multiply
/// the spectrum by |omega| w(omega) up to the Nyquist frequency pi / spacing,
/// transform back and keep the first n samples.
inline Eigen::VectorXd filter_projection(const Eigen::VectorXd& projection, FilterKind kind, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("ray spacing must be positive");
  const auto n = static_cast<std::size_t>(projection.size());
  if (n == 0) return projection;
  const std::size_t len = next_power_of_two(2 * n);
  const std::size_t bins = len / 2 + 1;

  std::unique_ptr<double, detail::FftwFree> buf(static_cast<double*>(fftw_malloc(sizeof(double) * len)));
  std::unique_ptr<fftw_complex, detail::FftwFree> spec(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  detail::FftwPlan forward(fftw_plan_dft_r2c_1d(static_cast<int>(len), buf.get(), spec.get(), FFTW_ESTIMATE));
  detail::FftwPlan backward(fftw_plan_dft_c2r_1d(static_cast<int>(len), spec.get(), buf.get(), FFTW_ESTIMATE));

  for (std::size_t i = 0; i < len; ++i) buf.get()[i] = i < n ? projection(static_cast<Eigen::Index>(i)) : 0.0;
  fftw_execute(forward.plan);

  for (std::size_t k = 0; k < bins; ++k) {
    const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(len) * spacing);
    const double gain = filter_gain(kind, omega, spacing) / static_cast<double>(len);
    spec.get()[k][0] *= gain;
    spec.get()[k][1] *= gain;
  }
  fftw_execute(backward.plan);

  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = buf.get()[i];
  return out;
}

/// Sinogram regrouped as one row per angle over a shared uniform offset grid.
struct ProjectionStack {
  std::vector<double> angles;
  std::vector<double> offsets;
  Eigen::MatrixXd values;  // n_angles x n_rays

  double spacing() const { return offsets.size() > 1 ? offsets[1] - offsets[0] : 1.0; }
};

/// Groups consecutive rays with equal angle; every group must share the same
/// ascending, uniformly spaced offsets.
inline ProjectionStack stack_projections(const Sinogram& sinogram) {
  sinogram.validate();
  if (sinogram.rays.empty()) throw std::invalid_argument("sinogram is empty");
  ProjectionStack s;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < sinogram.rays.size(); ++i) {
    const Ray& ray = sinogram.rays[i];
    if (s.angles.empty() || ray.theta != s.angles.back()) {
      s.angles.push_back(ray.theta);
      rows.emplace_back();
    }
    if (s.angles.size() == 1) s.offsets.push_back(ray.r);
    rows.back().push_back(sinogram.y(static_cast<Eigen::Index>(i)));
  }
  const std::size_t nr = s.offsets.size();
  const double tol = 1e-9 * std::max(1.0, sinogram.radius);
  for (std::size_t a = 0; a < s.angles.size(); ++a) {
    if (rows[a].size() != nr) throw std::invalid_argument("projections have differing ray counts");
    for (std::size_t k = 0; k < nr; ++k) {
      const double r = sinogram.rays[a * nr + k].r;
      if (std::abs(r - s.offsets[k]) > tol) throw std::invalid_argument("projections use differing ray offsets");
    }
  }
  for (std::size_t k = 2; k < nr; ++k)
    if (std::abs((s.offsets[k] - s.offsets[k - 1]) - (s.offsets[1] - s.offsets[0])) > tol)
      throw std::invalid_argument("ray offsets are not uniformly spaced");
  if (nr > 1 && !(s.offsets[1] > s.offsets[0])) throw std::invalid_argument("ray offsets must ascend");
  s.values.resize(static_cast<Eigen::Index>(s.angles.size()), static_cast<Eigen::Index>(nr));
  for (std::size_t a = 0; a < s.angles.size(); ++a)
    for (std::size_t k = 0; k < nr; ++k)
      s.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) = rows[a][k];
  return s;
}

/// Filtered backprojection onto `grid`. Filtered projections are read at
/// t = x1 cos(theta) + x2 sin(theta) by linear interpolation, summed, and
/// scaled by (pi / n_angles) / (2 pi): the angle step times the 1 / 2 pi of
/// the inverse transform in angular frequency. Pixels outside the scan disk
/// are zero.
inline ImageGrid fbp_reconstruct(const Sinogram& sinogram, ImageGrid grid, FilterKind kind) {
  const ProjectionStack stack = stack_projections(sinogram);
  const auto n_angles = static_cast<Eigen::Index>(stack.angles.size());
  const auto n_rays = static_cast<Eigen::Index>(stack.offsets.size());
  const double dr = stack.spacing();

  Eigen::MatrixXd filtered(n_angles, n_rays);
  for (Eigen::Index a = 0; a < n_angles; ++a)
    filtered.row(a) = filter_projection(stack.values.row(a).transpose(), kind, dr).transpose();

  std::vector<double> cs(stack.angles.size());
  std::vector<double> sn(stack.angles.size());
  for (std::size_t a = 0; a < stack.angles.size(); ++a) {
    cs[a] = std::cos(stack.angles[a]);
    sn[a] = std::sin(stack.angles[a]);
  }
  const double r0 = stack.offsets.front();
  const double scale = 0.5 / static_cast<double>(n_angles);
  const double radius2 = sinogram.radius * sinogram.radius;

#pragma omp parallel for schedule(static)
  for (int i = 0; i < grid.rows; ++i) {
    for (int j = 0; j < grid.cols; ++j) {
      const Point p = grid.center(i, j);
      if (p.x1 * p.x1 + p.x2 * p.x2 > radius2) {
        grid.values(i, j) = 0.0;
        continue;
      }
      double acc = 0.0;
      for (Eigen::Index a = 0; a < n_angles; ++a) {
        const double t = p.x1 * cs[static_cast<std::size_t>(a)] + p.x2 * sn[static_cast<std::size_t>(a)];
        const double u = n_rays > 1 ? (t - r0) / dr : 0.0;
        if (u < 0.0 || u > static_cast<double>(n_rays - 1)) continue;
        const auto k = std::min(static_cast<Eigen::Index>(u), n_rays - 2 >= 0 ? n_rays - 2 : 0);
        const double f = u - static_cast<double>(k);
        acc += n_rays > 1 ? (1.0 - f) * filtered(a, k) + f * filtered(a, k + 1) : filtered(a, 0);
      }
      grid.values(i, j) = scale * acc;
    }
  }
  return grid;
}

}  // namespace gpct
