#include "oracles.hpp"

#include "mtt/gaussian.hpp"

#include <doctest.h>

using namespace mtt;

namespace {

Belief4 random_belief(Rng& rng) {
  Belief4 b;
  for (int i = 0; i < 4; ++i) b.mean(i) = 10 * rng.normal();
  Mat4 a;
  for (int i = 0; i < 16; ++i) a(i / 4, i % 4) = rng.normal();
  b.cov = a * a.transpose() + 0.1 * Mat4::Identity();
  return b;
}

LinearGaussianHmm random_hmm(Rng& rng, int d, int m) {
  LinearGaussianHmm h;
  auto rnd = [&](int r, int c) {
    Eigen::MatrixXd x(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) x(i, j) = rng.normal();
    return x;
  };
  h.F = 0.5 * rnd(d, d);
  Eigen::MatrixXd a = rnd(d, d), b = rnd(m, m), c = rnd(d, d);
  h.Q = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
  h.R = b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(m, m);
  h.P0 = c * c.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
  h.G = rnd(m, d);
  h.m0 = rnd(d, 1);
  return h;
}

std::vector<std::optional<Obs>> some_obs(const TargetModel& model, int len, Rng& rng, double miss = 0.2) {
  std::vector<std::optional<Obs>> o;
  State x = model.sample_birth(rng);
  for (int t = 0; t < len; ++t) {
    if (t > 0) x = model.sample_transition(x, rng);
    if (rng.uniform() < miss) o.emplace_back(std::nullopt);
    else o.emplace_back(model.sample_observation(x, rng));
  }
  return o;
}

}  // namespace

TEST_CASE("sigma points reconstruct the belief") {
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const Belief4 b = random_belief(rng);
    const auto s = make_sigma_points<4>(b);
    double wsum = 0.0;
    State m = State::Zero();
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      wsum += s.w_mean[i];
      m += s.w_mean[i] * s.points[i];
    }
    Mat4 p = Mat4::Zero();
    for (std::size_t i = 0; i < s.points.size(); ++i) p += s.w_cov[i] * (s.points[i] - m) * (s.points[i] - m).transpose();
    REQUIRE(s.points.size() == 9);
    CHECK(std::abs(wsum - 1.0) < 1e-12);
    CHECK((m - b.mean).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((p - b.cov).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("unscented transform of the identity") {
  Rng rng(2);
  const Belief4 b = random_belief(rng);
  const auto out = unscented_transform<4, 4>(b, [](const State& x) { return x; });
  CHECK((out.mean - b.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((out.cov - b.cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("unscented transform of a linear map") {
  Rng rng(3);
  Mat24 a;
  for (int i = 0; i < 8; ++i) a(i / 4, i % 4) = rng.normal();
  const Belief4 b = random_belief(rng);
  const auto out = unscented_transform<4, 2>(b, [&](const State& x) -> Obs { return a * x; });
  CHECK((out.mean - a * b.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((out.cov - a * b.cov * a.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("unscented transform of x squared") {
  GaussianBelief<1> b;
  b.mean << 0.0;
  b.cov << 1.0;
  const auto s = make_sigma_points<1>(b, 3.0);
  CHECK(s.points[0](0) == 0.0);
  CHECK(s.points[1](0) == doctest::Approx(std::sqrt(3.0)));
  CHECK(s.points[2](0) == doctest::Approx(-std::sqrt(3.0)));
  CHECK(s.w_mean[0] == doctest::Approx(2.0 / 3.0));
  CHECK(s.w_mean[1] == doctest::Approx(1.0 / 6.0));
  using V1 = Eigen::Matrix<double, 1, 1>;
  const auto out = unscented_transform<1, 1>(b, [](const V1& x) -> V1 { return x.cwiseProduct(x); }, 3.0);
  CHECK(out.mean(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(make_sigma_points<1>(b, 0.0), ValidationError);
}

TEST_CASE("UKF with missing observations only predicts") {
  const ModelParams p = linear_benchmark_params();
  const TargetModel model(p);
  const std::vector<std::optional<Obs>> none(6);
  const Belief4 init{model.birth_mean(), model.birth_cov()};
  const auto steps = ukf_track_filter(model, none, init);
  State m = init.mean;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    if (t > 0) m = model.transition() * m;
    CHECK((steps[t].filtered.mean - m).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((steps[t].filtered.cov - steps[t].predicted.cov).cwiseAbs().maxCoeff() == 0.0);
    CHECK(steps[t].log_pred_lik == 0.0);
  }
}

TEST_CASE("UKF equals the Kalman filter on the linear sensor") {
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    ModelParams p = linear_benchmark_params();
    p.hmm.sigma_x2 = 0.1 + rng.uniform();
    p.hmm.sigma_r2 = 1.0 + 5 * rng.uniform();
    const TargetModel model(p);
    const auto obs = some_obs(model, 12, rng);
    const auto steps = ukf_track_filter(model, obs, Belief4{model.birth_mean(), model.birth_cov()});
    const auto kf = kalman_filter(linear_gaussian_hmm(model), to_dynamic(obs));
    double ll = 0.0;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      CHECK((steps[t].filtered.mean - kf.filt_mean[t]).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((steps[t].filtered.cov - kf.filt_cov[t]).cwiseAbs().maxCoeff() < 1e-8);
      ll += steps[t].log_pred_lik;
    }
    CHECK(ll == doctest::Approx(kf.log_marginal).epsilon(1e-10));
  }
}

TEST_CASE("bearing-range update against a grid posterior") {
  ModelParams p = bearing_range_benchmark_params();
  const TargetModel model(p);
  Belief4 prior;
  prior.mean << 100.0, 0.0, 50.0, 0.0;
  prior.cov = Mat4::Identity() * 4.0;
  const State truth(101.5, 0.0, 48.8, 0.0);
  const Obs y = model.measure(truth);
  const auto pred = predict_observation(model, prior);
  const Belief4 post = ukf_update(model, prior, pred, y);
  // Grid over the position block; velocities do not enter the likelihood.
  double w = 0.0, mx = 0.0, my = 0.0;
  const double h = 0.02;
  for (double x = 88; x <= 112; x += h)
    for (double z = 38; z <= 62; z += h) {
      const State s(x, 0.0, z, 0.0);
      const double lp = -((x - 100) * (x - 100) + (z - 50) * (z - 50)) / 8.0 + model.log_observation(y, s);
      const double e = std::exp(lp);
      w += e;
      mx += e * x;
      my += e * z;
    }
  mx /= w;
  my /= w;
  CHECK(std::abs(post.mean(0) - mx) < 1e-2);
  CHECK(std::abs(post.mean(2) - my) < 1e-2);
  CHECK(post.cov.trace() < prior.cov.trace());
  const auto pos = [](const State& x) { return Obs(x(0), x(2)); };
  CHECK((pos(post.mean) - pos(truth)).norm() < (pos(prior.mean) - pos(truth)).norm());
}

TEST_CASE("kalman scalar example") {
  LinearGaussianHmm h;
  h.F = h.Q = h.G = h.R = h.P0 = Eigen::MatrixXd::Identity(1, 1);
  h.m0 = Eigen::VectorXd::Zero(1);
  std::vector<std::optional<Eigen::VectorXd>> obs = {Eigen::VectorXd::Zero(1)};
  CHECK(kalman_log_marginal(h, obs) == doctest::Approx(-1.2655).epsilon(1e-4));
  CHECK(kalman_log_marginal(h, obs) == doctest::Approx(-0.5 * std::log(4 * M_PI)).epsilon(1e-14));
  std::vector<std::optional<Eigen::VectorXd>> none(5);
  CHECK(kalman_log_marginal(h, none) == 0.0);
}

TEST_CASE("kalman marginal equals the dense Gaussian") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto h = random_hmm(rng, 3, 2);
    std::vector<std::optional<Eigen::VectorXd>> obs;
    for (int t = 0; t < 10; ++t) {
      if (rng.uniform() < 0.2) obs.emplace_back(std::nullopt);
      else obs.emplace_back(Eigen::VectorXd::NullaryExpr(2, [&] { return 3 * rng.normal(); }));
    }
    const double k = kalman_log_marginal(h, obs);
    const double d = oracle::dense_log_marginal(h, obs);
    CHECK(std::abs(k - d) < 1e-8 * std::max(1.0, std::abs(d)));
    CHECK(kalman_log_marginal(h, obs) == k);
  }
}

TEST_CASE("backward sample density re-evaluates exactly") {
  Rng rng(6);
  const ModelParams p = bearing_range_benchmark_params();
  const TargetModel model(p);
  for (int rep = 0; rep < 100; ++rep) {
    const auto obs = some_obs(model, 8, rng);
    const auto steps = ukf_track_filter(model, obs, Belief4{model.birth_mean(), model.birth_cov()});
    std::optional<State> after;
    if (rep % 2) after = model.sample_transition(model.sample_birth(rng), rng);
    const auto s = gaussian_backward_sample(steps, model, after, rng);
    REQUIRE(s.path.size() == 8);
    CHECK(gaussian_backward_log_density(steps, model, after, s.path) == s.log_density);
  }
}

TEST_CASE("backward sample of a single step follows the belief") {
  Rng rng(7);
  const ModelParams p = linear_benchmark_params();
  const TargetModel model(p);
  const std::vector<std::optional<Obs>> none(1);
  const auto steps = ukf_track_filter(model, none, Belief4{model.birth_mean(), model.birth_cov()});
  std::vector<double> xs, vs;
  for (int i = 0; i < 10000; ++i) {
    const auto s = gaussian_backward_sample(steps, model, std::nullopt, rng);
    xs.push_back(s.path[0](0));
    vs.push_back(s.path[0](1));
  }
  const auto [mx, sx] = oracle::mean_se(xs);
  const auto [mv, sv] = oracle::mean_se(vs);
  CHECK(std::abs(mx - model.birth_mean()(0)) < 3 * sx);
  CHECK(std::abs(mv - model.birth_mean()(1)) < 3 * sv);
}

TEST_CASE("backward samples match the smoother on the linear sensor") {
  Rng rng(8);
  const ModelParams p = linear_benchmark_params();
  const TargetModel model(p);
  const auto obs = some_obs(model, 6, rng);
  const auto steps = ukf_track_filter(model, obs, Belief4{model.birth_mean(), model.birth_cov()});
  const auto sm = rts_smoother(linear_gaussian_hmm(model), to_dynamic(obs));
  std::vector<std::vector<double>> draws(6 * 4);
  for (int i = 0; i < 10000; ++i) {
    const auto s = gaussian_backward_sample(steps, model, std::nullopt, rng);
    for (int t = 0; t < 6; ++t)
      for (int d = 0; d < 4; ++d) draws[static_cast<std::size_t>(4 * t + d)].push_back(s.path[static_cast<std::size_t>(t)](d));
  }
  int outside = 0;
  for (int t = 0; t < 6; ++t)
    for (int d = 0; d < 4; ++d) {
      const auto [m, se] = oracle::mean_se(draws[static_cast<std::size_t>(4 * t + d)]);
      if (std::abs(m - sm.mean[static_cast<std::size_t>(t)](d)) > 3 * se) ++outside;
    }
  CHECK(outside == 0);
}

TEST_CASE("near-zero process noise gives deterministic paths") {
  ModelParams p = linear_benchmark_params();
  p.hmm.sigma_x2 = p.hmm.sigma_y2 = 1e-12;
  const TargetModel model(p);
  Rng rng(9);
  const auto obs = some_obs(model, 7, rng, 0.0);
  const auto steps = ukf_track_filter(model, obs, Belief4{model.birth_mean(), model.birth_cov()});
  const auto s = gaussian_backward_sample(steps, model, std::nullopt, rng);
  for (std::size_t t = 0; t + 1 < s.path.size(); ++t)
    CHECK((s.path[t + 1] - model.transition() * s.path[t]).cwiseAbs().maxCoeff() < 1e-4);
}
