#pragma once

#include "gpct/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace gpct {

struct Cholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;  // diagonal shift that was needed, 0 if none

  double log_det() const {
    const auto& lu = llt.matrixLLT();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < lu.rows(); ++i) acc += std::log(lu(i, i));
    return 2.0 * acc;
  }
};

/// Cholesky factorization of a symmetric positive-definite matrix. If the
/// plain factorization fails, a diagonal jitter of 1e-10 * trace / dim is
/// added and escalated tenfold up to three more times.
inline Cholesky robust_cholesky(const Eigen::MatrixXd& a) {
  if (!a.allFinite()) throw NumericalError("cannot factorize: matrix has non-finite entries");
  Cholesky out;
  out.llt.compute(a);
  if (out.llt.info() == Eigen::Success) return out;

  const double dim = static_cast<double>(a.rows());
  const double base = 1e-10 * std::abs(a.trace()) / dim;
  double jitter = base;
  for (int attempt = 0; attempt < 4; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "Cholesky factorization failed (dim " << a.rows() << ", trace " << a.trace()
      << ", jitter up to " << jitter / 10.0 << "); system is too ill-conditioned";
  throw NumericalError(msg.str());
}

}  // namespace gpct
