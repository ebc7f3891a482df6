#pragma once

#include "mtt/params.hpp"
#include "mtt/random.hpp"
#include "mtt/types.hpp"

namespace mtt {

/// Constant-velocity transition matrix for sampling interval `delta`.
Mat4 cv_transition(double delta);
/// Process-noise covariance blockdiag(sigma_x2 * S, sigma_y2 * S),
/// S = [[d^3/3, d^2/2], [d^2/2, d]].
Mat4 cv_process_cov(double sigma_x2, double sigma_y2, double delta);

/// Single-target HMM (mu, f, g) with all factorisations precomputed.
/// Cheap to copy; rebuild whenever the parameters change.
class TargetModel {
 public:
  explicit TargetModel(const ModelParams& params);

  ObservationKind kind() const { return kind_; }
  const Mat4& transition() const { return F_; }
  const Mat4& process_cov() const { return Q_; }
  const State& birth_mean() const { return birth_mean_; }
  const Mat4& birth_cov() const { return birth_cov_; }
  const Mat2& obs_cov() const { return R_; }

  double log_birth(const State& x) const;
  double log_transition(const State& next, const State& prev) const;
  double log_observation(const Obs& y, const State& x) const;

  /// Noise-free measurement g(x).
  Obs measure(const State& x) const;
  /// y - yhat, with the bearing component wrapped for the bearing-range sensor.
  Obs residual(const Obs& y, const Obs& yhat) const;

  State sample_birth(Rng& rng) const;
  State sample_transition(const State& prev, Rng& rng) const;
  Obs sample_observation(const State& x, Rng& rng) const;

  /// Observation matrix G for the linear sensor.
  static Mat24 position_selector();

 private:
  ObservationKind kind_;
  Mat4 F_, Q_, Q_chol_, birth_cov_, birth_chol_;
  State birth_mean_;
  Mat2 R_, R_chol_;
  double q_log_norm_, birth_log_norm_, r_log_norm_;
};

}  // namespace mtt
