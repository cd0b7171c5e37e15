#pragma once

#include "gpct/error.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gpct {

/// Prior families. Tikhonov and Laplacian have no proper covariance
/// function; they are defined only through their spectral densities.
enum class Family { SquaredExponential, Matern, Tikhonov, Laplacian };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::SquaredExponential: return "se";
    case Family::Matern: return "matern";
    case Family::Tikhonov: return "tikhonov";
    case Family::Laplacian: return "laplacian";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  if (s == "se" || s == "squared_exponential") return Family::SquaredExponential;
  if (s == "matern") return Family::Matern;
  if (s == "tikhonov") return Family::Tikhonov;
  if (s == "laplacian") return Family::Laplacian;
  throw std::invalid_argument("unknown covariance family '" + std::string(s) + "'");
}

inline bool has_length_scale(Family f) {
  return f == Family::SquaredExponential || f == Family::Matern;
}

/// Prior family plus hyperparameters in two input dimensions. `length_scale`
/// is ignored by Tikhonov and Laplacian; `nu` only matters for Matern.
struct CovarianceSpec {
  Family family = Family::Matern;
  double sigma_f = 1.0;
  double length_scale = 1.0;
  double nu = 1.0;

  static constexpr int dimension = 2;

  void validate() const {
    if (!(sigma_f > 0.0)) throw std::invalid_argument("sigma_f must be positive");
    if (has_length_scale(family) && !(length_scale > 0.0))
      throw std::invalid_argument("length_scale must be positive");
    if (family == Family::Matern && !(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  }
};

/// Stationary covariance k(r) at displacement norm `distance`.
inline double covariance(const CovarianceSpec& spec, double distance) {
  spec.validate();
  const double s2 = spec.sigma_f * spec.sigma_f;
  const double r = std::abs(distance);
  switch (spec.family) {
    case Family::SquaredExponential:
      return s2 * std::exp(-r * r / (2.0 * spec.length_scale * spec.length_scale));
    case Family::Matern: {
      if (r == 0.0) return s2;
      const double z = std::sqrt(2.0 * spec.nu) * r / spec.length_scale;
      const double log_pref = (1.0 - spec.nu) * std::numbers::ln2 - std::lgamma(spec.nu) +
                              spec.nu * std::log(z);
      if (std::isinf(z)) return 0.0;
      if (z < 300.0) return s2 * std::exp(log_pref) * std::cyl_bessel_k(spec.nu, z);
      // libstdc++ refuses large arguments; use the asymptotic series in log form.
      const double mu = 4.0 * spec.nu * spec.nu;
      const double series = 1.0 + (mu - 1.0) / (8.0 * z) + (mu - 1.0) * (mu - 9.0) / (128.0 * z * z);
      return s2 * std::exp(log_pref + 0.5 * std::log(std::numbers::pi / (2.0 * z)) - z) * series;
    }
    case Family::Tikhonov:
    case Family::Laplacian:
      break;
  }
  throw std::invalid_argument("covariance undefined for the " +
                              std::string(family_name(spec.family)) +
                              " family; use spectral_density");
}

inline double covariance(const CovarianceSpec& spec, double r1, double r2) {
  return covariance(spec, std::hypot(r1, r2));
}

/// Spectral density S(omega) at angular-frequency norm `omega`.
inline double spectral_density(const CovarianceSpec& spec, double omega) {
  spec.validate();
  constexpr double d = CovarianceSpec::dimension;
  const double s2 = spec.sigma_f * spec.sigma_f;
  const double w2 = omega * omega;
  switch (spec.family) {
    case Family::SquaredExponential: {
      const double l = spec.length_scale;
      return s2 * std::pow(2.0 * std::numbers::pi, d / 2.0) * std::pow(l, d) *
             std::exp(-l * l * w2 / 2.0);
    }
    case Family::Matern: {
      const double nu = spec.nu;
      const double l = spec.length_scale;
      const double log_s = d * std::numbers::ln2 + (d / 2.0) * std::log(std::numbers::pi) +
                           std::lgamma(nu + d / 2.0) - std::lgamma(nu) + nu * std::log(2.0 * nu) -
                           2.0 * nu * std::log(l) - (nu + d / 2.0) * std::log(2.0 * nu / (l * l) + w2);
      return s2 * std::exp(log_s);
    }
    case Family::Tikhonov:
      return s2;
    case Family::Laplacian:
      if (w2 == 0.0) throw NumericalError("Laplacian spectral density is singular at omega = 0");
      return s2 / (w2 * w2);
  }
  return 0.0;
}

inline double spectral_density(const CovarianceSpec& spec, double w1, double w2) {
  return spectral_density(spec, std::hypot(w1, w2));
}

}  // namespace gpct
