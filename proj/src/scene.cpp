#include "mtt/scene.hpp"

#include <algorithm>
#include <sstream>
#include <string>

namespace mtt {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

std::string at_scan(int t) { return " at scan " + std::to_string(t); }

}  // namespace

int ScanAssociation::k_s() const {
  int s = 0;
  for (int c : c_s) s += c;
  return s;
}

int ScanAssociation::k_d() const {
  int d = 0;
  for (int i : i_d) d += i > 0 ? 1 : 0;
  return d;
}

std::vector<int> ScanAssociation::i_s() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < c_s.size(); ++j)
    if (c_s[j]) out.push_back(static_cast<int>(j) + 1);
  return out;
}

int Scene::total_obs() const {
  int s = 0;
  for (const auto& o : obs) s += static_cast<int>(o.size());
  return s;
}

int Track::num_detections() const {
  int d = 0;
  for (int i : y_idx) d += i > 0 ? 1 : 0;
  return d;
}

bool Track::operator==(const Track& o) const {
  if (t_b != o.t_b || t_d != o.t_d || y_idx != o.y_idx || states.size() != o.states.size())
    return false;
  for (std::size_t i = 0; i < states.size(); ++i)
    if (!(states[i].array() == o.states[i].array()).all()) return false;
  return true;
}

bool state_precedes(const State& a, const State& b) {
  for (int i = 0; i < 4; ++i) {
    if (a(i) < b(i)) return true;
    if (b(i) < a(i)) return false;
  }
  return false;
}

bool track_precedes(const Track& a, const Track& b) {
  if (a.t_b != b.t_b) return a.t_b < b.t_b;
  if (!a.states.empty() && !b.states.empty()) {
    if (state_precedes(a.states.front(), b.states.front())) return true;
    if (state_precedes(b.states.front(), a.states.front())) return false;
  }
  if (a.t_d != b.t_d) return a.t_d < b.t_d;
  return a.y_idx < b.y_idx;
}

void sort_canonical(std::vector<Track>& tracks) {
  std::stable_sort(tracks.begin(), tracks.end(), track_precedes);
}

void validate_association(const Association& z, const Scene& scene) {
  if (z.n() != scene.n())
    fail("association has " + std::to_string(z.n()) + " scans, scene has " + std::to_string(scene.n()));
  int prev_kx = 0;
  for (int t = 1; t <= z.n(); ++t) {
    const ScanAssociation& s = z.at(t);
    if (t == 1 && !s.c_s.empty()) fail("c_s must be empty at scan 1");
    if (static_cast<int>(s.c_s.size()) != prev_kx)
      fail("c_s has length " + std::to_string(s.c_s.size()) + ", expected k_x[t-1] = " +
           std::to_string(prev_kx) + at_scan(t));
    for (int c : s.c_s)
      if (c != 0 && c != 1) fail("c_s entries must be binary" + at_scan(t));
    if (s.k_b < 0) fail("k_b must be >= 0" + at_scan(t));
    if (s.k_f < 0) fail("k_f must be >= 0" + at_scan(t));
    if (static_cast<int>(s.i_d.size()) != s.k_x())
      fail("i_d has length " + std::to_string(s.i_d.size()) + ", expected k_x = " +
           std::to_string(s.k_x()) + at_scan(t));
    if (s.k_y() != scene.k_y(t))
      fail("k_d + k_f = " + std::to_string(s.k_y()) + " differs from the observation count " +
           std::to_string(scene.k_y(t)) + at_scan(t));
    std::vector<char> used(static_cast<std::size_t>(s.k_y()) + 1, 0);
    for (int i : s.i_d) {
      if (i < 0 || i > s.k_y())
        fail("i_d entry " + std::to_string(i) + " outside 0.." + std::to_string(s.k_y()) + at_scan(t));
      if (i > 0) {
        if (used[static_cast<std::size_t>(i)]) fail("duplicate i_d entry " + std::to_string(i) + at_scan(t));
        used[static_cast<std::size_t>(i)] = 1;
      }
    }
    prev_kx = s.k_x();
  }
}

void validate_tracks(std::span<const Track> tracks, const Scene& scene, bool require_states) {
  const int n = scene.n();
  std::vector<std::vector<int>> owner(static_cast<std::size_t>(n));
  for (int t = 1; t <= n; ++t) owner[static_cast<std::size_t>(t - 1)].assign(static_cast<std::size_t>(scene.k_y(t)), -1);
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    const Track& tr = tracks[k];
    const std::string who = "track " + std::to_string(k + 1);
    if (!(1 <= tr.t_b && tr.t_b < tr.t_d && tr.t_d <= n + 1))
      fail(who + " has invalid life span [" + std::to_string(tr.t_b) + ", " + std::to_string(tr.t_d) + ")");
    if (static_cast<int>(tr.y_idx.size()) != tr.length()) fail(who + " y_idx length differs from life span");
    if (require_states && static_cast<int>(tr.states.size()) != tr.length())
      fail(who + " state count differs from life span");
    if (!tr.states.empty() && static_cast<int>(tr.states.size()) != tr.length())
      fail(who + " state count differs from life span");
    for (int t = tr.t_b; t < tr.t_d; ++t) {
      const int i = tr.obs_at(t);
      if (i == 0) continue;
      if (i < 0 || i > scene.k_y(t))
        fail(who + " references observation " + std::to_string(i) + at_scan(t));
      int& o = owner[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(i - 1)];
      if (o >= 0)
        fail("observation " + std::to_string(i) + at_scan(t) + " assigned to tracks " +
             std::to_string(o + 1) + " and " + std::to_string(k + 1));
      o = static_cast<int>(k);
    }
  }
}

TrackSet decompose(const Association& z, const Scene& scene, const ScanStates* states) {
  validate_association(z, scene);
  if (!states && scene.states) states = &*scene.states;
  const int n = z.n();
  if (states) {
    if (static_cast<int>(states->size()) != n) fail("state list length differs from scan count");
    for (int t = 1; t <= n; ++t)
      if (static_cast<int>((*states)[static_cast<std::size_t>(t - 1)].size()) != z.at(t).k_x())
        fail("state count differs from k_x" + at_scan(t));
  }
  TrackSet out;
  std::vector<int> label_to_track;
  for (int t = 1; t <= n; ++t) {
    const ScanAssociation& s = z.at(t);
    std::vector<int> cur;
    cur.reserve(static_cast<std::size_t>(s.k_x()));
    for (std::size_t j = 0; j < s.c_s.size(); ++j) {
      const int k = label_to_track[j];
      if (s.c_s[j]) cur.push_back(k);
      else out.tracks[static_cast<std::size_t>(k)].t_d = t;
    }
    for (int b = 0; b < s.k_b; ++b) {
      Track tr;
      tr.t_b = t;
      tr.t_d = n + 1;
      out.tracks.push_back(std::move(tr));
      cur.push_back(static_cast<int>(out.tracks.size()) - 1);
    }
    for (std::size_t j = 0; j < cur.size(); ++j) {
      Track& tr = out.tracks[static_cast<std::size_t>(cur[j])];
      tr.y_idx.push_back(s.i_d[j]);
      if (states) tr.states.push_back((*states)[static_cast<std::size_t>(t - 1)][j]);
    }
    label_to_track = std::move(cur);
  }
  out.clutter = clutter_list(out.tracks, scene);
  return out;
}

FlatSample recompose(std::span<const Track> tracks, const Scene& scene) {
  validate_tracks(tracks, scene, false);
  const int n = scene.n();
  bool with_states = !tracks.empty();
  for (const Track& tr : tracks) with_states = with_states && !tr.states.empty();

  std::vector<std::vector<int>> born(static_cast<std::size_t>(n) + 2);
  for (std::size_t k = 0; k < tracks.size(); ++k)
    born[static_cast<std::size_t>(tracks[k].t_b)].push_back(static_cast<int>(k));
  for (auto& b : born)
    std::stable_sort(b.begin(), b.end(), [&](int a, int c) {
      return track_precedes(tracks[static_cast<std::size_t>(a)], tracks[static_cast<std::size_t>(c)]);
    });

  FlatSample out;
  out.assoc.scans.resize(static_cast<std::size_t>(n));
  out.states.resize(static_cast<std::size_t>(n));
  std::vector<int> prev;
  for (int t = 1; t <= n; ++t) {
    ScanAssociation& s = out.assoc.at(t);
    std::vector<int> cur;
    for (int k : prev) {
      const bool survives = tracks[static_cast<std::size_t>(k)].alive(t);
      s.c_s.push_back(survives ? 1 : 0);
      if (survives) cur.push_back(k);
    }
    const auto& nb = born[static_cast<std::size_t>(t)];
    s.k_b = static_cast<int>(nb.size());
    cur.insert(cur.end(), nb.begin(), nb.end());
    for (int k : cur) {
      const Track& tr = tracks[static_cast<std::size_t>(k)];
      s.i_d.push_back(tr.obs_at(t));
      if (with_states) out.states[static_cast<std::size_t>(t - 1)].push_back(tr.state_at(t));
    }
    s.k_f = scene.k_y(t) - s.k_d();
    prev = std::move(cur);
  }
  if (!with_states) out.states.clear();
  return out;
}

FlatSample recompose(const TrackSet& ts, const Scene& scene) {
  if (!ts.clutter.empty()) {
    auto expected = clutter_list(ts.tracks, scene);
    auto given = ts.clutter;
    std::sort(given.begin(), given.end());
    if (given != expected)
      fail("clutter list does not match the observations left unassigned by the tracks");
  }
  return recompose(std::span<const Track>(ts.tracks), scene);
}

std::vector<std::vector<int>> free_observations(std::span<const Track> tracks, const Scene& scene) {
  const int n = scene.n();
  std::vector<std::vector<char>> used(static_cast<std::size_t>(n));
  for (int t = 1; t <= n; ++t) used[static_cast<std::size_t>(t - 1)].assign(static_cast<std::size_t>(scene.k_y(t)) + 1, 0);
  for (const Track& tr : tracks)
    for (int t = tr.t_b; t < tr.t_d; ++t)
      if (tr.obs_at(t) > 0) used[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(tr.obs_at(t))] = 1;
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  for (int t = 1; t <= n; ++t)
    for (int i = 1; i <= scene.k_y(t); ++i)
      if (!used[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(i)]) out[static_cast<std::size_t>(t - 1)].push_back(i);
  return out;
}

std::vector<std::pair<int, int>> clutter_list(std::span<const Track> tracks, const Scene& scene) {
  std::vector<std::pair<int, int>> out;
  const auto f = free_observations(tracks, scene);
  for (int t = 1; t <= scene.n(); ++t)
    for (int i : f[static_cast<std::size_t>(t - 1)]) out.emplace_back(t, i);
  return out;
}

}  // namespace mtt
