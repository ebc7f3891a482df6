#include "mtt/pgibbs.hpp"

namespace mtt {

Track refresh_track(const TargetModel& model, const Track& track, const Scene& scene, int n_particles,
                    Rng& rng, SmcProposal proposal) {
  if (n_particles < 1) throw ValidationError("particle count must be >= 1");
  const auto obs = track_observations(track, scene, track.t_b, track.t_d - 1);
  const ParticleSystem ps = conditional_particle_filter(model, obs, n_particles, track.states, rng, proposal);
  Track out = track;
  out.states = backward_simulate(ps, model, rng).path;
  return out;
}

std::vector<Track> refresh_states(const TargetModel& model, std::span<const Track> tracks,
                                  const Scene& scene, int n_particles, Rng& rng, SmcProposal proposal) {
  const std::uint64_t base = rng.engine()();
  std::vector<Track> out;
  out.reserve(tracks.size());
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    Rng sub(derive_seed(base, k));
    out.push_back(refresh_track(model, tracks[k], scene, n_particles, sub, proposal));
  }
  return out;
}

void refresh_chain(const MoveContext& ctx, ChainState& state, int n_particles, Rng& rng, SmcProposal proposal) {
  state.tracks = refresh_states(ctx.model, state.tracks, *ctx.scene, n_particles, rng, proposal);
  state.log_density = chain_log_density(ctx, state.tracks);
}

}  // namespace mtt
