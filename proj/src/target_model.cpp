#include "mtt/target_model.hpp"

#include "mtt/linalg.hpp"

#include <cmath>

namespace mtt {

Mat4 cv_transition(double delta) {
  Mat4 f = Mat4::Identity();
  f(0, 1) = delta;
  f(2, 3) = delta;
  return f;
}

Mat4 cv_process_cov(double sigma_x2, double sigma_y2, double delta) {
  Mat2 s;
  s << delta * delta * delta / 3.0, delta * delta / 2.0, delta * delta / 2.0, delta;
  Mat4 q = Mat4::Zero();
  q.block<2, 2>(0, 0) = sigma_x2 * s;
  q.block<2, 2>(2, 2) = sigma_y2 * s;
  return q;
}

Mat24 TargetModel::position_selector() {
  Mat24 g = Mat24::Zero();
  g(0, 0) = 1.0;
  g(1, 2) = 1.0;
  return g;
}

TargetModel::TargetModel(const ModelParams& params) : kind_(params.observation) {
  const HmmParams& h = params.hmm;
  h.validate();
  F_ = cv_transition(h.delta);
  Q_ = cv_process_cov(h.sigma_x2, h.sigma_y2, h.delta);
  birth_mean_ << h.mu_bx, 0.0, h.mu_by, 0.0;
  birth_cov_ = Eigen::Vector4d(h.sigma_bpx2, h.sigma_bvx2, h.sigma_bpy2, h.sigma_bvy2).asDiagonal();
  R_ = Eigen::Vector2d(h.sigma_r2, h.sigma_b2).asDiagonal();
  Q_chol_ = robust_cholesky<4>(Q_, "process covariance");
  birth_chol_ = robust_cholesky<4>(birth_cov_, "birth covariance");
  R_chol_ = robust_cholesky<2>(R_, "observation covariance");
  const double l2pi = std::log(2.0 * std::numbers::pi);
  q_log_norm_ = -0.5 * (4.0 * l2pi) - Q_chol_.diagonal().array().log().sum();
  birth_log_norm_ = -0.5 * (4.0 * l2pi) - birth_chol_.diagonal().array().log().sum();
  r_log_norm_ = -0.5 * (2.0 * l2pi) - R_chol_.diagonal().array().log().sum();
}

double TargetModel::log_birth(const State& x) const {
  const State z = birth_chol_.triangularView<Eigen::Lower>().solve(State(x - birth_mean_));
  return birth_log_norm_ - 0.5 * z.squaredNorm();
}

double TargetModel::log_transition(const State& next, const State& prev) const {
  const State z = Q_chol_.triangularView<Eigen::Lower>().solve(State(next - F_ * prev));
  return q_log_norm_ - 0.5 * z.squaredNorm();
}

double TargetModel::log_observation(const Obs& y, const State& x) const {
  const Obs z = R_chol_.triangularView<Eigen::Lower>().solve(residual(y, measure(x)));
  return r_log_norm_ - 0.5 * z.squaredNorm();
}

Obs TargetModel::measure(const State& x) const {
  if (kind_ == ObservationKind::linear) return Obs(x(0), x(2));
  return Obs(std::hypot(x(0), x(2)), std::atan2(x(2), x(0)));
}

Obs TargetModel::residual(const Obs& y, const Obs& yhat) const {
  Obs r = y - yhat;
  if (kind_ == ObservationKind::bearing_range) r(1) = wrap_angle(r(1));
  return r;
}

State TargetModel::sample_birth(Rng& rng) const {
  return birth_mean_ + birth_chol_ * rng.standard_normal_vector<4>();
}

State TargetModel::sample_transition(const State& prev, Rng& rng) const {
  return F_ * prev + Q_chol_ * rng.standard_normal_vector<4>();
}

Obs TargetModel::sample_observation(const State& x, Rng& rng) const {
  Obs y = measure(x) + R_chol_ * rng.standard_normal_vector<2>();
  if (kind_ == ObservationKind::bearing_range) y(1) = wrap_angle(y(1));
  return y;
}

}  // namespace mtt
