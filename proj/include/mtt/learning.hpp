#pragma once

#include "mtt/density.hpp"
#include "mtt/moves.hpp"
#include "mtt/pgibbs.hpp"

#include <span>

namespace mtt {

/// Conjugate prior hyperparameters. Gamma laws use (shape, scale).
struct PriorHyperparams {
  double rate_alpha0 = 0.01;  // Gamma prior of lambda_b, lambda_f
  double rate_beta0 = 100.0;
  double var_alpha0 = 0.01;   // inverse-gamma prior of every variance
  double var_beta0 = 0.01;
  double n0 = 0.01;           // birth-mean prior N(mu0, sigma^2 / n0)
  double mu0 = 0.0;
  bool tied_birth = true;     // sigma_bpx2 = sigma_bpy2 and sigma_bvx2 = sigma_bvy2

  void validate() const;
};

/// Count statistics of an association.
struct AssocStats {
  int n = 0;
  double survivals = 0.0;  // sum k_s
  double deaths = 0.0;     // sum_{t>=2} (k_x[t-1] - k_s[t])
  double detections = 0.0; // sum k_d
  double misses = 0.0;     // sum (k_x - k_d)
  double births = 0.0;     // sum k_b
  double clutter = 0.0;    // sum k_f
};

AssocStats assoc_stats(const ScanCounts& counts);

/// Sufficient statistics of the HMM parameters given (z, x, y).
struct HmmStats {
  int K = 0;                  // number of tracks
  double transitions = 0.0;   // sum k_s
  Mat2 sxx = Mat2::Zero();    // I_x-projected residual outer products, x block
  Mat2 syy = Mat2::Zero();    // same for the y block
  State xbar1 = State::Zero();
  double beta1x = 0.0, beta1y = 0.0;  // sum (x_1 - xbar_1)^2 per position axis
  double beta3x = 0.0, beta3y = 0.0;  // sum of squared initial velocities
  double detections = 0.0;    // sum k_d
  Mat2 sv = Mat2::Zero();     // observation residual outer products
};

HmmStats hmm_stats(const ModelParams& params, std::span<const Track> tracks, const Scene& scene);

struct AssocParams {
  double p_s = 0.0, p_d = 0.0, lambda_b = 0.0, lambda_f = 0.0;
};

AssocParams sample_assoc_params(const AssocStats& s, const PriorHyperparams& h, Rng& rng);

/// Draws every variance from its inverse-gamma conditional and the birth means
/// from their normal conditionals. `base` supplies delta (and is otherwise replaced).
HmmParams sample_hmm_params(const HmmStats& s, const HmmParams& base, const PriorHyperparams& h, Rng& rng);

/// Gibbs update of all parameters given the tracks.
ModelParams sample_params(const ModelParams& current, std::span<const Track> tracks, const Scene& scene,
                          const PriorHyperparams& h, Rng& rng);

/// Maximum-likelihood parameters given the true association and states.
ModelParams mle_given_truth(const ModelParams& base, std::span<const Track> tracks, const Scene& scene);

/// n1 association moves followed by n2 particle Gibbs refreshes.
void mcmc_mtt_sweep(const MoveContext& ctx, ChainState& state, int n1, int n2, int n_particles, Rng& rng,
                    MoveStats* stats = nullptr, SmcProposal proposal = SmcProposal::bootstrap);

struct LearnState {
  ModelParams params;
  ChainState chain;
};

/// One sweep of the joint sampler: an MCMC-MTT loop under the current parameters,
/// then n3 Gibbs updates of the parameters.
void param_sweep(const Scene& scene, const MoveConfig& cfg, const PriorHyperparams& h, LearnState& state,
                 int n1, int n2, int n3, int n_particles, Rng& rng, MoveStats* stats = nullptr,
                 SmcProposal proposal = SmcProposal::bootstrap);

}  // namespace mtt
