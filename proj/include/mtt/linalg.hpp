#pragma once

#include "mtt/types.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mtt {

/// Symmetrises and clamps small negative eigenvalues to zero. Eigenvalues below
/// -floor (relative to the spectral radius when that exceeds one) are an error.
template <int D>
Eigen::Matrix<double, D, D> clamp_psd(const Eigen::Matrix<double, D, D>& m, double floor = 1e-10) {
  Eigen::Matrix<double, D, D> s = 0.5 * (m + m.transpose());
  if (Eigen::LLT<Eigen::Matrix<double, D, D>>(s).info() == Eigen::Success) return s;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, D, D>> eig(s);
  if ((eig.eigenvalues().array() >= 0.0).all()) return s;
  auto vals = eig.eigenvalues().eval();
  const double tol = floor * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  for (int i = 0; i < vals.size(); ++i) {
    if (vals(i) < -tol) {
      std::ostringstream os;
      os << "covariance has eigenvalue " << vals(i) << " below -" << floor;
      throw NumericalError(os.str());
    }
    if (vals(i) < 0.0) vals(i) = 0.0;
  }
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

/// Lower Cholesky factor with diagonal jitter escalation 1e-12 -> 1e-6 (relative to
/// the mean diagonal). Throws NumericalError with a condition report on failure.
template <int D>
Eigen::Matrix<double, D, D> robust_cholesky(const Eigen::Matrix<double, D, D>& m,
                                            const char* what = "covariance") {
  using M = Eigen::Matrix<double, D, D>;
  Eigen::LLT<M> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double scale = std::max(m.diagonal().cwiseAbs().mean(), 1e-300);
  for (double jitter = 1e-12; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
    M shifted = m;
    shifted.diagonal().array() += jitter * scale;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  Eigen::SelfAdjointEigenSolver<M> eig(0.5 * (m + m.transpose()));
  std::ostringstream os;
  os << "Cholesky of " << what << " failed after jitter escalation; eigenvalues ["
     << eig.eigenvalues().transpose() << "]";
  throw NumericalError(os.str());
}

/// Gaussian log density from a lower Cholesky factor of the covariance.
template <int D>
double gaussian_log_pdf_chol(const Eigen::Matrix<double, D, 1>& residual,
                             const Eigen::Matrix<double, D, D>& chol) {
  const Eigen::Matrix<double, D, 1> z =
      chol.template triangularView<Eigen::Lower>().solve(residual);
  const double log_det = 2.0 * chol.diagonal().array().log().sum();
  return -0.5 * (z.squaredNorm() + log_det + residual.size() * std::log(2.0 * std::numbers::pi));
}

template <int D>
double gaussian_log_pdf(const Eigen::Matrix<double, D, 1>& x, const Eigen::Matrix<double, D, 1>& mean,
                        const Eigen::Matrix<double, D, D>& cov) {
  return gaussian_log_pdf_chol<D>(x - mean, robust_cholesky<D>(cov));
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

}  // namespace mtt
