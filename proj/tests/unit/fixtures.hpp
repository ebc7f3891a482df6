#pragma once

#include "mtt/moves.hpp"
#include "mtt/scene.hpp"
#include "mtt/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mtt::testing {

/// Linear-Gaussian target whose ten-step likelihood a hundred-particle filter estimates with small variance.
inline ModelParams well_conditioned_params() {
  ModelParams p = linear_benchmark_params();
  p.hmm.sigma_x2 = p.hmm.sigma_y2 = 0.01;
  p.hmm.sigma_r2 = p.hmm.sigma_b2 = 100.0;
  p.hmm.sigma_bpx2 = p.hmm.sigma_bpy2 = 1.0;
  p.hmm.sigma_bvx2 = p.hmm.sigma_bvy2 = 0.01;
  return p;
}

inline std::vector<Track> truth_tracks(const Simulation& sim) {
  return decompose(sim.assoc, sim.scene, &*sim.scene.states).tracks;
}

inline std::vector<Track> sorted(std::vector<Track> tracks) {
  sort_canonical(tracks);
  return tracks;
}

inline bool same_tracks(std::vector<Track> a, std::vector<Track> b) {
  return sorted(std::move(a)) == sorted(std::move(b));
}

/// Outcome of proposing a move and checking its reverse.
struct ReversibilityCheck {
  bool proposed = false;       // a valid forward proposal exists
  bool reconstructs = false;   // reverse plan maps back bit-exactly
  bool sample_matches = false; // evaluate(forward) reproduces the sampled log q
  double ratio_sum = 0.0;      // log r_fwd + log r_rev
  bool finite = false;         // both ratios finite
};

inline ReversibilityCheck check_reversibility(const MoveContext& ctx, const ChainState& state, MoveKind kind,
                                              Rng& rng) {
  ReversibilityCheck c;
  const ProposalResult r = propose(ctx, state, kind, rng);
  if (!r.valid) return c;
  c.proposed = true;
  const PlanOutcome fwd = evaluate_plan(ctx, state.tracks, r.forward);
  c.sample_matches = fwd.valid && fwd.log_q == r.log_q_fwd && fwd.tracks == r.tracks;
  const PlanOutcome back = evaluate_plan(ctx, r.tracks, r.reverse);
  c.reconstructs = back.valid && same_tracks(back.tracks, state.tracks);
  // Reverse ratio evaluated from the proposed state with the reverse plan.
  const double log_pm = std::log(ctx.cfg.move_probs[static_cast<std::size_t>(reverse_kind(kind))]) -
                        std::log(ctx.cfg.move_probs[static_cast<std::size_t>(kind)]);
  const double rev = chain_log_density(ctx, back.tracks) - r.log_target_new + fwd.log_q - back.log_q - log_pm;
  c.finite = std::isfinite(r.log_acceptance_ratio) && std::isfinite(rev);
  c.ratio_sum = r.log_acceptance_ratio + rev;
  // The reverse plan's own reverse must be the forward plan's outcome again.
  const PlanOutcome again = evaluate_plan(ctx, back.tracks, back.reverse);
  c.reconstructs = c.reconstructs && again.valid && same_tracks(again.tracks, r.tracks) &&
                   std::abs(again.log_q - fwd.log_q) <= 1e-9 * std::max(1.0, std::abs(fwd.log_q));
  return c;
}

}  // namespace mtt::testing
