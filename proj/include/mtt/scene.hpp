#pragma once

#include "mtt/types.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mtt {

/// States of all targets alive at each scan, in label order. states[t-1][j-1] = x_{t,j}.
using ScanStates = std::vector<std::vector<State>>;

/// Data association at one scan: Z_t = (C^s_t, K^b_t, K^f_t, I^d_t).
struct ScanAssociation {
  std::vector<int> c_s;  // survival indicator per target of the previous scan
  int k_b = 0;
  int k_f = 0;
  std::vector<int> i_d;  // observation index per target (1-based, 0 = undetected)

  int k_s() const;
  int k_x() const { return k_s() + k_b; }
  int k_d() const;
  int k_y() const { return k_d() + k_f; }
  /// Ancestor (1-based label at t-1) of each survivor at t.
  std::vector<int> i_s() const;

  bool operator==(const ScanAssociation&) const = default;
};

struct Association {
  std::vector<ScanAssociation> scans;  // scans[t-1]

  int n() const { return static_cast<int>(scans.size()); }
  const ScanAssociation& at(int t) const { return scans.at(static_cast<std::size_t>(t - 1)); }
  ScanAssociation& at(int t) { return scans.at(static_cast<std::size_t>(t - 1)); }
  int k_x(int t) const { return t <= 0 ? 0 : at(t).k_x(); }

  bool operator==(const Association&) const = default;
};

/// Observations per scan and, when simulated, the truth.
struct Scene {
  std::vector<std::vector<Obs>> obs;  // obs[t-1][i-1] = y_{t,i}
  std::optional<ScanStates> states;
  std::optional<Association> truth;

  int n() const { return static_cast<int>(obs.size()); }
  int k_y(int t) const { return static_cast<int>(obs.at(static_cast<std::size_t>(t - 1)).size()); }
  const Obs& y(int t, int i) const {
    return obs.at(static_cast<std::size_t>(t - 1)).at(static_cast<std::size_t>(i - 1));
  }
  int total_obs() const;
};

/// One target: alive on scans t_b .. t_d-1.
struct Track {
  int t_b = 1;
  int t_d = 2;
  std::vector<State> states;  // empty when only the structure is known
  std::vector<int> y_idx;     // 0 = mis-detected

  int length() const { return t_d - t_b; }
  bool alive(int t) const { return t >= t_b && t < t_d; }
  int obs_at(int t) const { return y_idx[static_cast<std::size_t>(t - t_b)]; }
  int& obs_at(int t) { return y_idx[static_cast<std::size_t>(t - t_b)]; }
  const State& state_at(int t) const { return states[static_cast<std::size_t>(t - t_b)]; }
  State& state_at(int t) { return states[static_cast<std::size_t>(t - t_b)]; }
  int num_detections() const;

  bool operator==(const Track& o) const;
};

struct TrackSet {
  std::vector<Track> tracks;
  std::vector<std::pair<int, int>> clutter;  // (t, observation index)
};

/// Ordering rule A: lexicographic on the state components, so the first
/// component decides unless tied.
bool state_precedes(const State& a, const State& b);
/// Total order on tracks used for canonical listings: birth time, initial state
/// under rule A, then death time and observation indices as fallbacks.
bool track_precedes(const Track& a, const Track& b);
void sort_canonical(std::vector<Track>& tracks);

/// Throws ValidationError naming the first violated invariant.
void validate_association(const Association& z, const Scene& scene);
void validate_tracks(std::span<const Track> tracks, const Scene& scene, bool require_states);

/// Flat -> per-target view. States come from `states` if given, else scene.states
/// if present, else tracks carry no states.
TrackSet decompose(const Association& z, const Scene& scene, const ScanStates* states = nullptr);

struct FlatSample {
  Association assoc;
  ScanStates states;
};

/// Per-target -> flat view, canonical under ordering rule A. Any order of
/// `tracks.tracks` gives the same output.
FlatSample recompose(const TrackSet& tracks, const Scene& scene);
FlatSample recompose(std::span<const Track> tracks, const Scene& scene);

/// Observation indices not used by any track, per scan (1-based).
std::vector<std::vector<int>> free_observations(std::span<const Track> tracks, const Scene& scene);
std::vector<std::pair<int, int>> clutter_list(std::span<const Track> tracks, const Scene& scene);

}  // namespace mtt
