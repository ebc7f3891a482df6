#include "fixtures.hpp"
#include "oracles.hpp"

#include "mtt/moves.hpp"
#include "mtt/simulate.hpp"

#include <doctest.h>

#include <functional>
#include <map>

using namespace mtt;
using namespace mtt::testing;

namespace {

/// Every track structure born at t_b that uses free observations only.
std::vector<Track> all_structures(const Scene& scene, const FreeObs& free, int t_b) {
  std::vector<Track> out;
  for (int t_d = t_b + 1; t_d <= scene.n() + 1; ++t_d) {
    Track tr;
    tr.t_b = t_b;
    tr.t_d = t_d;
    tr.y_idx.assign(static_cast<std::size_t>(t_d - t_b), 0);
    std::function<void(int)> rec = [&](int t) {
      if (t == t_d) {
        out.push_back(tr);
        return;
      }
      tr.obs_at(t) = 0;
      rec(t + 1);
      for (int y : free.at(t)) {
        tr.obs_at(t) = y;
        rec(t + 1);
      }
      tr.obs_at(t) = 0;
    };
    rec(t_b);
  }
  return out;
}

std::string key(const Track& t) {
  std::string s = std::to_string(t.t_d) + ":";
  for (int y : t.y_idx) s += std::to_string(y) + ",";
  return s;
}

}  // namespace

TEST_CASE("no clutter anywhere: never detected, death-time law only") {
  const ModelParams p = linear_benchmark_params();
  Scene scene;
  scene.obs.resize(6);
  const MoveContext ctx(scene, p, MoveConfig{});
  const FreeObs free(std::vector<Track>{}, scene);
  const int t_b = 2, n = 6, t_m = ctx.t_m;
  // Independent evaluation of the death-time law with empty candidate sets.
  const double ps = p.p_s, r = p.p_s * (1 - p.p_d);
  const int lmax = n + 1 - t_b;
  std::map<int, double> expected;
  for (int len = 1; len <= lmax; ++len) {
    const double pl = len < lmax ? std::pow(ps, len - 1) * (1 - ps) : std::pow(ps, len - 1);
    const int t_d0 = t_b + len;
    if (t_d0 <= t_b - 1 + t_m) {
      expected[t_d0] += pl;
      continue;
    }
    const int lo = t_b + 1, up = std::max(t_b - 1 + t_m, t_b + 1);
    double z = 0.0;
    for (int d = lo; d <= up; ++d) z += std::pow(r, d - t_b);
    for (int d = lo; d <= up; ++d) expected[d] += pl * std::pow(r, d - t_b) / z;
  }
  double total = 0.0;
  for (int t_d = t_b + 1; t_d <= n + 1; ++t_d) {
    Track tr;
    tr.t_b = t_b;
    tr.t_d = t_d;
    tr.y_idx.assign(static_cast<std::size_t>(t_d - t_b), 0);
    const double q = std::exp(group_measurements_log_prob(ctx, free, tr));
    CHECK(q == doctest::Approx(expected[t_d]).epsilon(1e-12));
    total += q;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Track tr = group_measurements_sample(ctx, free, t_b, rng);
    for (int y : tr.y_idx) CHECK(y == 0);
  }
}

TEST_CASE("single gated clutter point is taken with probability p_m") {
  const ModelParams p = linear_benchmark_params();
  Scene scene;
  scene.obs = {{Obs(p.hmm.mu_bx + 1.0, p.hmm.mu_by - 1.0)}, {}};
  MoveConfig cfg;
  const MoveContext ctx(scene, p, cfg);
  const FreeObs free(std::vector<Track>{}, scene);
  double taken = 0.0, total = 0.0;
  for (const Track& tr : all_structures(scene, free, 1)) {
    const double q = std::exp(group_measurements_log_prob(ctx, free, tr));
    total += q;
    if (tr.obs_at(1) == 1) taken += q;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(taken == doctest::Approx(cfg.p_m).epsilon(1e-12));
}

TEST_CASE("proposal tree sums to one and matches sampling") {
  const ModelParams p = linear_benchmark_params();
  Scene scene;
  scene.obs = {{Obs(81, 99), Obs(120, 40)}, {Obs(82, 101)}, {Obs(84, 103), Obs(83, 100)}, {}};
  const MoveContext ctx(scene, p, MoveConfig{});
  for (int t_b = 1; t_b <= 3; ++t_b) {
    const FreeObs free(std::vector<Track>{}, scene);
    std::map<std::string, double> q;
    double total = 0.0;
    for (const Track& tr : all_structures(scene, free, t_b)) {
      const double v = std::exp(group_measurements_log_prob(ctx, free, tr));
      q[key(tr)] = v;
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    Rng rng(static_cast<std::uint64_t>(t_b));
    std::map<std::string, long> counts;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[key(group_measurements_sample(ctx, free, t_b, rng))];
    std::vector<long> c;
    std::vector<double> e;
    for (const auto& [k, v] : q) {
      if (v * draws < 5) continue;
      c.push_back(counts[k]);
      e.push_back(v);
    }
    for (const auto& [k, n] : counts) CHECK(q.at(k) > 0.0);
    double rest = 0.0;
    for (double v : e) rest += v;
    for (double& v : e) v /= rest;
    CHECK(oracle::chi2_pvalue(c, e) > 0.001);
  }
}

TEST_CASE("occupied observations are unreachable") {
  const ModelParams p = linear_benchmark_params();
  const Simulation sim = simulate(p, 8, 21);
  const auto tracks = truth_tracks(sim);
  const MoveContext ctx(sim.scene, p, MoveConfig{});
  const FreeObs free(tracks, sim.scene);
  for (const Track& t : tracks) {
    if (t.num_detections() == 0) continue;
    Track probe = t;
    probe.states.clear();
    CHECK(group_measurements_log_prob(ctx, free, probe) == kNegInf);
  }
}

TEST_CASE("sample and evaluate agree along the chain") {
  const ModelParams p = linear_benchmark_params();
  const Simulation sim = simulate(p, 15, 8);
  const MoveContext ctx(sim.scene, p, MoveConfig{});
  Rng rng(3);
  ChainState st = all_clutter_state(ctx);
  for (int i = 0; i < 300; ++i) {
    dispatch_move(ctx, st, rng);
    const FreeObs free(st.tracks, sim.scene);
    const int t_b = 1 + rng.uniform_int(sim.scene.n());
    const Track tr = group_measurements_sample(ctx, free, t_b, rng);
    const double lq = group_measurements_log_prob(ctx, free, tr);
    REQUIRE(std::isfinite(lq));
    CHECK(lq <= 0.0);
  }
}
