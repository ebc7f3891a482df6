#include "fixtures.hpp"
#include "oracles.hpp"

#include "mtt/density.hpp"
#include "mtt/simulate.hpp"

#include <doctest.h>

using namespace mtt;
using namespace mtt::testing;

namespace {

ModelParams rates(double lb, double lf) {
  ModelParams p = linear_benchmark_params();
  p.lambda_b = lb;
  p.lambda_f = lf;
  return p;
}

}  // namespace

TEST_CASE("empty single scan") {
  Scene s;
  s.obs.resize(1);
  Association z;
  z.scans.resize(1);
  const auto d = log_joint_density(rates(0.5, 3.0), z, s, ScanStates(1));
  CHECK(d.log_pz == doctest::Approx(-3.5).epsilon(1e-12));
  CHECK(d.log_px_given_z == 0.0);
  CHECK(d.log_py_given_xz == 0.0);
}

TEST_CASE("two clutter points in a single scan") {
  Scene s;
  s.obs = {{Obs(0, 0), Obs(10, 10)}};
  Association z;
  z.scans = {{{}, 0, 2, {}}};
  const ModelParams p = rates(0.5, 3.0);
  const auto d = log_joint_density(p, z, s, ScanStates(1));
  const double expected = -0.5 + (-3.0 + 2.0 * std::log(3.0) - std::log(2.0)) + 0.0;
  CHECK(d.log_pz == doctest::Approx(expected).epsilon(1e-12));
  CHECK(d.log_pz == doctest::Approx(-1.9959).epsilon(1e-4));
  CHECK(d.log_py_given_xz == doctest::Approx(-2.0 * std::log(p.obs_volume())).epsilon(1e-12));
}

TEST_CASE("simulated truth has a finite density") {
  const ModelParams p = linear_benchmark_params();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Simulation sim = simulate(p, 20, seed);
    const auto d = log_joint_density(p, sim.assoc, sim.scene, *sim.scene.states);
    REQUIRE(std::isfinite(d.total()));
    REQUIRE(std::exp(d.total() / 1000.0) > 0.0);
    const auto tracks = truth_tracks(sim);
    const auto e = tracks_log_density(p, TargetModel(p), tracks, sim.scene);
    CHECK(e.total() == doctest::Approx(d.total()).epsilon(1e-10));
  }
}

TEST_CASE("bearing-range truth has a finite density") {
  const ModelParams p = bearing_range_benchmark_params();
  const Simulation sim = simulate(p, 30, 4);
  CHECK(std::isfinite(log_joint_density(p, sim.assoc, sim.scene, *sim.scene.states).total()));
}

TEST_CASE("states violating the ordering rule have zero density") {
  const ModelParams p = linear_benchmark_params();
  Scene s;
  s.obs = {{}};
  Association z;
  z.scans = {{{}, 2, 0, {0, 0}}};
  const ScanStates ordered = {{State(1, 0, 0, 0), State(2, 0, 0, 0)}};
  const ScanStates swapped = {{State(2, 0, 0, 0), State(1, 0, 0, 0)}};
  CHECK(std::isfinite(log_joint_density(p, z, s, ordered).log_px_given_z));
  CHECK(log_joint_density(p, z, s, swapped).log_px_given_z == kNegInf);
}

TEST_CASE("duplicate observation links are a validation error") {
  const ModelParams p = linear_benchmark_params();
  Simulation sim;
  for (std::uint64_t seed = 0;; ++seed) {
    sim = simulate(p, 10, seed);
    bool found = false;
    for (auto& sc : sim.assoc.scans)
      if (sc.k_d() >= 2) found = true;
    if (found) break;
  }
  for (auto& sc : sim.assoc.scans)
    if (sc.k_d() >= 2) {
      int first = 0;
      for (int& v : sc.i_d) {
        if (v > 0 && first == 0) first = v;
        else if (v > 0) {
          v = first;
          break;
        }
      }
      break;
    }
  CHECK_THROWS_AS(log_joint_density(p, sim.assoc, sim.scene, *sim.scene.states), ValidationError);
}

TEST_CASE("association law normalises for one observation") {
  // p(y) = exp(-(lb pd + lf)) (lb pd N(y; G mu, G Sb G' + R) + lf / |Y|)
  ModelParams p = linear_benchmark_params();
  const TargetModel model(p);
  Scene s;
  const Obs y(90.0, 95.0);
  s.obs = {{y}};
  const Mat24 g = TargetModel::position_selector();
  const Mat2 cov = g * model.birth_cov() * g.transpose() + model.obs_cov();
  const Obs r = y - g * model.birth_mean();
  const double log_n = -0.5 * r.dot(cov.ldlt().solve(r)) - 0.5 * std::log(cov.determinant()) - std::log(2 * M_PI);
  const double a = p.lambda_b * p.p_d;
  const double expected = -(a + p.lambda_f) + std::log(a * std::exp(log_n) + p.lambda_f / p.obs_volume());
  const auto e = oracle::enumerate_posterior(p, s, 80);
  CHECK(std::abs(e.log_evidence - expected) < 1e-8 * std::abs(expected));
}

TEST_CASE("log_poisson") {
  CHECK(log_poisson(0, 0.0) == 0.0);
  CHECK(log_poisson(1, 0.0) == kNegInf);
  CHECK(log_poisson(2, 3.0) == doctest::Approx(-3.0 + 2 * std::log(3.0) - std::log(2.0)));
}
