#include "mtt/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace mtt {

namespace {

constexpr double kFilterPsdTolerance = 1e-6;

}  // namespace

ObservationPrediction predict_observation(const TargetModel& model, const Belief4& predicted,
                                          double c) {
  const SigmaPointSet<4> s = make_sigma_points<4>(predicted, c);
  std::array<Obs, 9> ys;
  for (std::size_t i = 0; i < 9; ++i) ys[i] = model.measure(s.points[i]);
  Obs offset = Obs::Zero();
  for (std::size_t i = 0; i < 9; ++i) offset += s.w_mean[i] * model.residual(ys[i], ys[0]);
  ObservationPrediction out;
  out.mean = ys[0] + offset;
  out.cov = model.obs_cov();
  out.cross.setZero();
  for (std::size_t i = 0; i < 9; ++i) {
    const Obs e = model.residual(ys[i], ys[0]) - offset;
    out.cov += s.w_cov[i] * e * e.transpose();
    out.cross += s.w_cov[i] * (s.points[i] - predicted.mean) * e.transpose();
  }
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.chol = robust_cholesky<2>(out.cov, "innovation covariance");
  return out;
}

double predictive_log_likelihood(const TargetModel& model, const ObservationPrediction& pred,
                                 const Obs& y) {
  return gaussian_log_pdf_chol<2>(model.residual(y, pred.mean), pred.chol);
}

double mahalanobis2(const TargetModel& model, const ObservationPrediction& pred, const Obs& y) {
  const Obs z = pred.chol.triangularView<Eigen::Lower>().solve(model.residual(y, pred.mean));
  return z.squaredNorm();
}

Belief4 predict_state(const TargetModel& model, const Belief4& filtered) {
  const Mat4& f = model.transition();
  Belief4 out;
  out.mean = f * filtered.mean;
  out.cov = f * filtered.cov * f.transpose() + model.process_cov();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

Belief4 ukf_update(const TargetModel& model, const Belief4& predicted,
                   const ObservationPrediction& pred, const Obs& y) {
  const Mat42 gain =
      pred.chol.transpose()
          .triangularView<Eigen::Upper>()
          .solve(pred.chol.triangularView<Eigen::Lower>().solve(pred.cross.transpose()))
          .transpose();
  Belief4 out;
  out.mean = predicted.mean + gain * model.residual(y, pred.mean);
  out.cov = predicted.cov - gain * pred.cov * gain.transpose();
  out.cov = clamp_psd<4>(out.cov, kFilterPsdTolerance);
  return out;
}

std::vector<UkfStep> ukf_track_filter(const TargetModel& model,
                                      std::span<const std::optional<Obs>> obs,
                                      const Belief4& init, double c) {
  if (obs.empty()) throw ValidationError("ukf_track_filter needs at least one step");
  std::vector<UkfStep> steps(obs.size());
  for (std::size_t t = 0; t < obs.size(); ++t) {
    UkfStep& s = steps[t];
    s.predicted = t == 0 ? Belief4{init.mean, clamp_psd<4>(init.cov)}
                         : predict_state(model, steps[t - 1].filtered);
    if (obs[t]) {
      const ObservationPrediction p = predict_observation(model, s.predicted, c);
      s.log_pred_lik = predictive_log_likelihood(model, p, *obs[t]);
      s.filtered = ukf_update(model, s.predicted, p, *obs[t]);
    } else {
      s.filtered = s.predicted;
      s.log_pred_lik = 0.0;
    }
  }
  return steps;
}

namespace {

// Shared by sample and evaluate modes so both return bit-identical densities.
double backward_pass(std::span<const UkfStep> steps, const TargetModel& model,
                     const std::optional<State>& after, Rng* rng, std::vector<State>& path) {
  const std::size_t len = steps.size();
  const Mat4& f = model.transition();
  const Mat4& q = model.process_cov();
  double log_q = 0.0;
  for (std::size_t k = len; k-- > 0;) {
    const Belief4& b = steps[k].filtered;
    const State* next = k + 1 < len ? &path[k + 1] : (after ? &*after : nullptr);
    State mean = b.mean;
    Mat4 cov = b.cov;
    if (next) {
      const Mat4 s = f * b.cov * f.transpose() + q;
      const Mat4 s_chol = robust_cholesky<4>(Mat4(0.5 * (s + s.transpose())), "backward predictive");
      // J = P F' S^-1
      const Mat4 pft = b.cov * f.transpose();
      const Mat4 gain = s_chol.transpose()
                            .triangularView<Eigen::Upper>()
                            .solve(s_chol.triangularView<Eigen::Lower>().solve(pft.transpose()))
                            .transpose();
      mean = b.mean + gain * (*next - f * b.mean);
      cov = b.cov - gain * f * b.cov;
    }
    cov = clamp_psd<4>(cov, kFilterPsdTolerance);
    const Mat4 l = robust_cholesky<4>(cov, "backward conditional");
    if (rng) path[k] = mean + l * rng->standard_normal_vector<4>();
    log_q += gaussian_log_pdf_chol<4>(State(path[k] - mean), l);
  }
  return log_q;
}

}  // namespace

BackwardSample gaussian_backward_sample(std::span<const UkfStep> steps, const TargetModel& model,
                                        const std::optional<State>& after, Rng& rng) {
  BackwardSample out;
  out.path.resize(steps.size());
  out.log_density = backward_pass(steps, model, after, &rng, out.path);
  return out;
}

double gaussian_backward_log_density(std::span<const UkfStep> steps, const TargetModel& model,
                                     const std::optional<State>& after,
                                     std::span<const State> path) {
  if (path.size() != steps.size()) throw ValidationError("path length differs from filter length");
  std::vector<State> p(path.begin(), path.end());
  return backward_pass(steps, model, after, nullptr, p);
}

LinearGaussianHmm linear_gaussian_hmm(const TargetModel& model, const LinearObsModel& obs) {
  LinearGaussianHmm h;
  h.F = model.transition();
  h.Q = model.process_cov();
  h.G = obs.G;
  h.R = obs.Sigma_v;
  h.m0 = model.birth_mean();
  h.P0 = model.birth_cov();
  return h;
}

LinearGaussianHmm linear_gaussian_hmm(const TargetModel& model) {
  if (model.kind() != ObservationKind::linear)
    throw ValidationError("exact Kalman recursions need the linear sensor");
  return linear_gaussian_hmm(model, LinearObsModel{TargetModel::position_selector(), model.obs_cov()});
}

KalmanResult kalman_filter(const LinearGaussianHmm& h,
                           std::span<const std::optional<Eigen::VectorXd>> obs) {
  KalmanResult r;
  Eigen::VectorXd m = h.m0;
  Eigen::MatrixXd p = h.P0;
  const double l2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (t > 0) {
      m = h.F * m;
      p = h.F * p * h.F.transpose() + h.Q;
    }
    r.pred_mean.push_back(m);
    r.pred_cov.push_back(p);
    if (obs[t]) {
      const Eigen::MatrixXd s = h.G * p * h.G.transpose() + h.R;
      const Eigen::LLT<Eigen::MatrixXd> llt(s);
      if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance not positive definite");
      const Eigen::VectorXd e = *obs[t] - h.G * m;
      const Eigen::MatrixXd l = llt.matrixL();
      r.log_marginal += -0.5 * (llt.matrixL().solve(e).squaredNorm() +
                                2.0 * l.diagonal().array().log().sum() + e.size() * l2pi);
      const Eigen::MatrixXd k = llt.solve(h.G * p).transpose();
      m = m + k * e;
      p = p - k * s * k.transpose();
      p = 0.5 * (p + p.transpose());
    }
    r.filt_mean.push_back(m);
    r.filt_cov.push_back(p);
  }
  return r;
}

double kalman_log_marginal(const LinearGaussianHmm& hmm,
                           std::span<const std::optional<Eigen::VectorXd>> obs) {
  return kalman_filter(hmm, obs).log_marginal;
}

std::vector<std::optional<Eigen::VectorXd>> to_dynamic(std::span<const std::optional<Obs>> obs) {
  std::vector<std::optional<Eigen::VectorXd>> out;
  out.reserve(obs.size());
  for (const auto& o : obs) {
    if (o) out.emplace_back(Eigen::VectorXd(*o));
    else out.emplace_back(std::nullopt);
  }
  return out;
}

double kalman_log_marginal(const TargetModel& model, const LinearObsModel& obs_model,
                           std::span<const std::optional<Obs>> obs) {
  const auto dyn = to_dynamic(obs);
  return kalman_log_marginal(linear_gaussian_hmm(model, obs_model), dyn);
}

SmootherResult rts_smoother(const LinearGaussianHmm& hmm,
                            std::span<const std::optional<Eigen::VectorXd>> obs) {
  const KalmanResult kf = kalman_filter(hmm, obs);
  const std::size_t n = obs.size();
  SmootherResult s;
  s.mean.resize(n);
  s.cov.resize(n);
  if (n == 0) return s;
  s.mean[n - 1] = kf.filt_mean[n - 1];
  s.cov[n - 1] = kf.filt_cov[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) {
    const Eigen::MatrixXd& p = kf.filt_cov[k];
    const Eigen::MatrixXd& pp = kf.pred_cov[k + 1];
    const Eigen::MatrixXd j = pp.ldlt().solve(hmm.F * p).transpose();
    s.mean[k] = kf.filt_mean[k] + j * (s.mean[k + 1] - kf.pred_mean[k + 1]);
    s.cov[k] = p + j * (s.cov[k + 1] - pp) * j.transpose();
  }
  return s;
}

}  // namespace mtt
