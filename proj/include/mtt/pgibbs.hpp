#pragma once

#include "mtt/moves.hpp"
#include "mtt/smc.hpp"

#include <span>
#include <vector>

namespace mtt {

/// Particle Gibbs refresh of one track: conditional particle filter pinned to the
/// current states, then backward simulation. Observations and life span are kept.
Track refresh_track(const TargetModel& model, const Track& track, const Scene& scene, int n_particles,
                    Rng& rng, SmcProposal proposal = SmcProposal::bootstrap);

/// Refreshes every track. Track k uses its own substream of a seed drawn from `rng`,
/// so the result does not depend on the order the tracks are processed in.
std::vector<Track> refresh_states(const TargetModel& model, std::span<const Track> tracks,
                                  const Scene& scene, int n_particles, Rng& rng,
                                  SmcProposal proposal = SmcProposal::bootstrap);

/// refresh_states on a chain state; the cached log density is recomputed.
void refresh_chain(const MoveContext& ctx, ChainState& state, int n_particles, Rng& rng,
                   SmcProposal proposal = SmcProposal::bootstrap);

}  // namespace mtt
