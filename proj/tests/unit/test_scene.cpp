#include "fixtures.hpp"

#include "mtt/scene.hpp"
#include "mtt/simulate.hpp"

#include <doctest.h>

#include <algorithm>

using namespace mtt;
using namespace mtt::testing;

namespace {

/// The four-scan example: five targets, two clutter points.
struct FigureOne {
  Association z;
  Scene scene;
  ScanStates states;

  FigureOne() {
    z.scans = {{{}, 3, 1, {3, 1, 0}}, {{1, 1, 1}, 0, 0, {0, 1, 2}}, {{1, 1, 0}, 1, 1, {2, 3, 0}}, {{0, 1, 0}, 1, 0, {0, 1}}};
    const int k_y[] = {3, 2, 3, 1};
    for (int t = 0; t < 4; ++t) {
      std::vector<Obs> o;
      for (int i = 0; i < k_y[t]; ++i) o.emplace_back(10.0 * t + i, 5.0 * i);
      scene.obs.push_back(o);
    }
    auto s = [](double x) { return State(x, 1.0, 0.0, 0.0); };
    states = {{s(10), s(20), s(30)}, {s(11), s(21), s(31)}, {s(12), s(22), s(5)}, {s(23), s(40)}};
  }
};

}  // namespace

TEST_CASE("derived association quantities") {
  const FigureOne f;
  CHECK(f.z.at(1).i_s().empty());
  CHECK(f.z.at(2).i_s() == std::vector<int>{1, 2, 3});
  CHECK(f.z.at(3).i_s() == std::vector<int>{1, 2});
  CHECK(f.z.at(4).i_s() == std::vector<int>{2});
  CHECK(f.z.at(3).k_x() == 3);
  CHECK(f.z.at(3).k_y() == 3);
  CHECK_NOTHROW(validate_association(f.z, f.scene));
}

TEST_CASE("decompose the four-scan example") {
  const FigureOne f;
  const TrackSet ts = decompose(f.z, f.scene, &f.states);
  auto tracks = sorted(ts.tracks);
  REQUIRE(tracks.size() == 5);
  auto check = [&](std::size_t k, int tb, int td, std::vector<int> y) {
    CHECK(tracks[k].t_b == tb);
    CHECK(tracks[k].t_d == td);
    CHECK(tracks[k].y_idx == y);
  };
  check(0, 1, 4, {3, 0, 2});
  check(1, 1, 5, {1, 1, 3, 0});
  check(2, 1, 3, {0, 2});
  check(3, 3, 4, {0});
  check(4, 4, 5, {1});
  CHECK(tracks[1].state_at(4) == State(23, 1, 0, 0));
  const std::vector<std::pair<int, int>> clutter = {{1, 2}, {3, 1}};
  CHECK(ts.clutter == clutter);
}

TEST_CASE("recompose the four-scan example") {
  const FigureOne f;
  auto tracks = decompose(f.z, f.scene, &f.states).tracks;
  std::reverse(tracks.begin(), tracks.end());
  const FlatSample flat = recompose(tracks, f.scene);
  CHECK(flat.assoc == f.z);
  CHECK(flat.states == f.states);
}

TEST_CASE("empty scene") {
  Scene s;
  s.obs.resize(3);
  Association z;
  z.scans.resize(3);
  const TrackSet ts = decompose(z, s);
  CHECK(ts.tracks.empty());
  CHECK(ts.clutter.empty());
  CHECK(recompose(std::vector<Track>{}, s).assoc == z);
}

TEST_CASE("no tracks gives the all-clutter association") {
  const FigureOne f;
  const FlatSample flat = recompose(std::vector<Track>{}, f.scene);
  for (int t = 1; t <= 4; ++t) {
    CHECK(flat.assoc.at(t).k_x() == 0);
    CHECK(flat.assoc.at(t).k_f == f.scene.k_y(t));
  }
}

TEST_CASE("round trip on simulated scenes") {
  ModelParams p = linear_benchmark_params();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Simulation sim = simulate(p, 12, seed);
    auto tracks = decompose(sim.assoc, sim.scene).tracks;
    std::shuffle(tracks.begin(), tracks.end(), std::mt19937_64(seed));
    const FlatSample flat = recompose(tracks, sim.scene);
    REQUIRE(flat.assoc == sim.assoc);
    REQUIRE(flat.states == *sim.scene.states);
    const auto again = decompose(flat.assoc, sim.scene, &flat.states).tracks;
    REQUIRE(same_tracks(again, tracks));
  }
}

TEST_CASE("invalid associations are rejected") {
  const FigureOne f;
  Association z = f.z;
  z.at(2).i_d = {1, 1, 2};
  CHECK_THROWS_AS(validate_association(z, f.scene), ValidationError);
  z = f.z;
  z.at(2).i_d = {0, 1, 3};
  CHECK_THROWS_AS(validate_association(z, f.scene), ValidationError);
  z = f.z;
  z.at(1).k_f = 2;
  CHECK_THROWS_AS(validate_association(z, f.scene), ValidationError);
  z = f.z;
  z.at(3).c_s = {1, 1};
  CHECK_THROWS_AS(validate_association(z, f.scene), ValidationError);
}

TEST_CASE("overlapping or missing track observations are rejected") {
  const FigureOne f;
  auto tracks = decompose(f.z, f.scene, &f.states).tracks;
  auto bad = tracks;
  bad[0].y_idx[0] = bad[1].y_idx[0];
  CHECK_THROWS_AS(validate_tracks(bad, f.scene, true), ValidationError);
  CHECK_THROWS_AS(recompose(bad, f.scene), ValidationError);
  bad = tracks;
  bad[0].t_d = 6;
  CHECK_THROWS_AS(validate_tracks(bad, f.scene, false), ValidationError);
  CHECK_NOTHROW(validate_tracks(tracks, f.scene, true));
}

TEST_CASE("ordering rule is a total order with tie breaks") {
  const State a(1, 0, 0, 0), b(1, 1, 0, 0), c(1, 1, 0, -1);
  CHECK(state_precedes(a, b));
  CHECK_FALSE(state_precedes(b, a));
  CHECK(state_precedes(c, b));
  CHECK_FALSE(state_precedes(a, a));
}

TEST_CASE("clutter list and free observations agree") {
  const Simulation sim = simulate(linear_benchmark_params(), 10, 9);
  const auto tracks = truth_tracks(sim);
  const auto free = free_observations(tracks, sim.scene);
  const auto clutter = clutter_list(tracks, sim.scene);
  std::size_t total = 0;
  for (const auto& v : free) total += v.size();
  CHECK(total == clutter.size());
  int kf = 0;
  for (const auto& s : sim.assoc.scans) kf += s.k_f;
  CHECK(static_cast<int>(clutter.size()) == kf);
}
