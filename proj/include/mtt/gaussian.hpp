#pragma once

#include "mtt/linalg.hpp"
#include "mtt/random.hpp"
#include "mtt/target_model.hpp"
#include "mtt/types.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mtt {

template <int D>
struct GaussianBelief {
  Eigen::Matrix<double, D, 1> mean;
  Eigen::Matrix<double, D, D> cov;
};

using Belief4 = GaussianBelief<4>;
using Belief2 = GaussianBelief<2>;

/// Default unscented scaling c = d + kappa with kappa = 3 - d.
inline constexpr double kDefaultUtScale = 3.0;

template <int D>
struct SigmaPointSet {
  std::vector<Eigen::Matrix<double, D, 1>> points;
  std::vector<double> w_mean;
  std::vector<double> w_cov;
  double c = kDefaultUtScale;
};

/// 2d+1 points mean +/- columns of chol(c P), weights (c-d)/c and 1/(2c).
template <int D>
SigmaPointSet<D> make_sigma_points(const GaussianBelief<D>& b, double c = kDefaultUtScale) {
  if (!(c > 0.0)) throw ValidationError("unscented scaling c must be > 0");
  const Eigen::Matrix<double, D, D> l =
      robust_cholesky<D>(Eigen::Matrix<double, D, D>(c * clamp_psd<D>(b.cov)), "sigma-point covariance");
  SigmaPointSet<D> s;
  s.c = c;
  s.points.reserve(2 * D + 1);
  s.points.push_back(b.mean);
  for (int i = 0; i < D; ++i) s.points.push_back(b.mean + l.col(i));
  for (int i = 0; i < D; ++i) s.points.push_back(b.mean - l.col(i));
  s.w_mean.assign(2 * D + 1, 1.0 / (2.0 * c));
  s.w_mean[0] = (c - D) / c;
  s.w_cov = s.w_mean;
  return s;
}

/// Unscented approximation of the law of g(x), x ~ b. `diff` computes y - y0 and
/// is used to form deviations from the transformed centre point (angle wrapping).
template <int D, int M>
GaussianBelief<M> unscented_transform(
    const GaussianBelief<D>& b,
    const std::function<Eigen::Matrix<double, M, 1>(const Eigen::Matrix<double, D, 1>&)>& g,
    double c = kDefaultUtScale,
    const std::function<Eigen::Matrix<double, M, 1>(const Eigen::Matrix<double, M, 1>&,
                                                    const Eigen::Matrix<double, M, 1>&)>& diff = {}) {
  using VM = Eigen::Matrix<double, M, 1>;
  const SigmaPointSet<D> s = make_sigma_points<D>(b, c);
  std::vector<VM> ys;
  ys.reserve(s.points.size());
  for (const auto& p : s.points) ys.push_back(g(p));
  auto d = [&](const VM& a, const VM& o) -> VM { return diff ? diff(a, o) : VM(a - o); };
  VM offset = VM::Zero();
  for (std::size_t i = 0; i < ys.size(); ++i) offset += s.w_mean[i] * d(ys[i], ys[0]);
  GaussianBelief<M> out;
  out.mean = ys[0] + offset;
  out.cov.setZero();
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const VM e = d(ys[i], ys[0]) - offset;
    out.cov += s.w_cov[i] * e * e.transpose();
  }
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

/// Predicted observation law N(y_hat, S) under a state belief, with the state/obs
/// cross covariance needed by the update.
struct ObservationPrediction {
  Obs mean;
  Mat2 cov;    // innovation covariance, includes the sensor noise
  Mat42 cross;
  Mat2 chol;   // lower Cholesky factor of cov
};

ObservationPrediction predict_observation(const TargetModel& model, const Belief4& predicted,
                                          double c = kDefaultUtScale);

/// log N(y; y_hat, S) with the sensor's residual convention.
double predictive_log_likelihood(const TargetModel& model, const ObservationPrediction& pred,
                                 const Obs& y);
/// Squared Mahalanobis distance of y under the prediction.
double mahalanobis2(const TargetModel& model, const ObservationPrediction& pred, const Obs& y);

Belief4 predict_state(const TargetModel& model, const Belief4& filtered);
Belief4 ukf_update(const TargetModel& model, const Belief4& predicted,
                   const ObservationPrediction& pred, const Obs& y);

struct UkfStep {
  Belief4 predicted;
  Belief4 filtered;
  double log_pred_lik = 0.0;  // 0 at missing observations
};

/// Forward UKF; `init` is the predicted belief of the first step.
std::vector<UkfStep> ukf_track_filter(const TargetModel& model,
                                      std::span<const std::optional<Obs>> obs,
                                      const Belief4& init, double c = kDefaultUtScale);

struct BackwardSample {
  std::vector<State> path;
  double log_density = 0.0;
};

/// Draws x_{1:L} from prod_t N(x_t | filtered_t) f(x_{t+1} | x_t), optionally
/// conditioned on a state `after` at step L+1. Returns the exact log density.
BackwardSample gaussian_backward_sample(std::span<const UkfStep> steps, const TargetModel& model,
                                        const std::optional<State>& after, Rng& rng);
/// Log density of a given path under gaussian_backward_sample (same code path).
double gaussian_backward_log_density(std::span<const UkfStep> steps, const TargetModel& model,
                                     const std::optional<State>& after,
                                     std::span<const State> path);

/// Linear observation model y = G x + v, v ~ N(0, Sigma_v).
struct LinearObsModel {
  Mat24 G = TargetModel::position_selector();
  Mat2 Sigma_v = Mat2::Identity();
};

/// General linear-Gaussian HMM with dynamic dimensions (exact oracle).
struct LinearGaussianHmm {
  Eigen::MatrixXd F, Q, G, R;
  Eigen::VectorXd m0;
  Eigen::MatrixXd P0;
};

LinearGaussianHmm linear_gaussian_hmm(const TargetModel& model, const LinearObsModel& obs);
/// The linear HMM of a target model using its linear sensor.
LinearGaussianHmm linear_gaussian_hmm(const TargetModel& model);

struct KalmanResult {
  std::vector<Eigen::VectorXd> pred_mean, filt_mean;
  std::vector<Eigen::MatrixXd> pred_cov, filt_cov;
  double log_marginal = 0.0;
};

KalmanResult kalman_filter(const LinearGaussianHmm& hmm,
                           std::span<const std::optional<Eigen::VectorXd>> obs);
/// Prediction-error decomposition of log p(y_{1:l}); missing entries contribute 0.
double kalman_log_marginal(const LinearGaussianHmm& hmm,
                           std::span<const std::optional<Eigen::VectorXd>> obs);
double kalman_log_marginal(const TargetModel& model, const LinearObsModel& obs_model,
                           std::span<const std::optional<Obs>> obs);

struct SmootherResult {
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> cov;
};
SmootherResult rts_smoother(const LinearGaussianHmm& hmm,
                            std::span<const std::optional<Eigen::VectorXd>> obs);

std::vector<std::optional<Eigen::VectorXd>> to_dynamic(std::span<const std::optional<Obs>> obs);

}  // namespace mtt
