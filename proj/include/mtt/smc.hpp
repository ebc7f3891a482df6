#pragma once

#include "mtt/random.hpp"
#include "mtt/target_model.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mtt {

enum class SmcProposal { bootstrap, ukf };

/// Weighted particles of a single-target filter. Indices are 0-based; slot 0 is
/// the retained path in the conditional filter.
struct ParticleSystem {
  std::vector<std::vector<State>> particles;     // [t][k]
  std::vector<std::vector<double>> weights;      // normalised W_t^k
  std::vector<std::vector<double>> log_weights;  // log W_t^k
  std::vector<std::vector<int>> ancestors;       // [t][k]; identity at t = 0
  double log_lik = 0.0;

  int steps() const { return static_cast<int>(particles.size()); }
  int size() const { return particles.empty() ? 0 : static_cast<int>(particles.front().size()); }
};

/// N i.i.d. categorical draws. Throws ValidationError unless weights sum to one.
std::vector<int> multinomial_resample(std::span<const double> weights, int n, Rng& rng);

/// Resample-every-step particle filter for the target HMM (mu, f, g) with missing
/// observations (g = 1). log_lik is the unbiased likelihood estimate.
ParticleSystem particle_filter(const TargetModel& model, std::span<const std::optional<Obs>> obs,
                               int n_particles, SmcProposal proposal, Rng& rng);

/// Particle filter with slot 0 pinned to `retained` (ancestor 0 at every step).
ParticleSystem conditional_particle_filter(const TargetModel& model,
                                           std::span<const std::optional<Obs>> obs,
                                           int n_particles, std::span<const State> retained,
                                           Rng& rng, SmcProposal proposal = SmcProposal::bootstrap);

struct BackwardPath {
  std::vector<int> indices;  // b_t
  std::vector<State> path;
};

/// Backward simulation: b_T ~ W_T, then W_{t|T} ~ W_t f(x_{t+1} | x_t).
BackwardPath backward_simulate(const ParticleSystem& ps, const TargetModel& model, Rng& rng);

}  // namespace mtt
