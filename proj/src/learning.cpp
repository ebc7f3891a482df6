#include "mtt/learning.hpp"

#include <cmath>

namespace mtt {

void PriorHyperparams::validate() const {
  if (!(rate_alpha0 > 0.0 && rate_beta0 > 0.0)) throw ValidationError("rate prior must have alpha0, beta0 > 0");
  if (!(var_alpha0 > 0.0 && var_beta0 > 0.0)) throw ValidationError("variance prior must have alpha0, beta0 > 0");
  if (!(n0 > 0.0)) throw ValidationError("n0 must be > 0");
}

AssocStats assoc_stats(const ScanCounts& c) {
  AssocStats s;
  s.n = static_cast<int>(c.k_x.size()) - 1;
  for (int t = 1; t <= s.n; ++t) {
    const auto i = static_cast<std::size_t>(t);
    s.survivals += c.k_s[i];
    if (t >= 2) s.deaths += c.k_x[i - 1] - c.k_s[i];
    s.detections += c.k_d[i];
    s.misses += c.k_x[i] - c.k_d[i];
    s.births += c.k_b[i];
    s.clutter += c.k_f[i];
  }
  return s;
}

HmmStats hmm_stats(const ModelParams& params, std::span<const Track> tracks, const Scene& scene) {
  const TargetModel model(params);
  const Mat4& f = model.transition();
  HmmStats s;
  s.K = static_cast<int>(tracks.size());
  for (const Track& tr : tracks) s.xbar1 += tr.states.front();
  if (s.K > 0) s.xbar1 /= s.K;
  for (const Track& tr : tracks) {
    const State& x1 = tr.states.front();
    s.beta1x += (x1(0) - s.xbar1(0)) * (x1(0) - s.xbar1(0));
    s.beta1y += (x1(2) - s.xbar1(2)) * (x1(2) - s.xbar1(2));
    s.beta3x += x1(1) * x1(1);
    s.beta3y += x1(3) * x1(3);
    for (std::size_t i = 0; i + 1 < tr.states.size(); ++i) {
      const State u = tr.states[i + 1] - f * tr.states[i];
      s.sxx += u.segment<2>(0) * u.segment<2>(0).transpose();
      s.syy += u.segment<2>(2) * u.segment<2>(2).transpose();
      s.transitions += 1.0;
    }
    for (int t = tr.t_b; t < tr.t_d; ++t) {
      if (tr.obs_at(t) == 0) continue;
      const Obs dy = model.residual(scene.y(t, tr.obs_at(t)), model.measure(tr.state_at(t)));
      s.sv += dy * dy.transpose();
      s.detections += 1.0;
    }
  }
  return s;
}

AssocParams sample_assoc_params(const AssocStats& s, const PriorHyperparams& h, Rng& rng) {
  AssocParams p;
  p.p_s = rng.beta(1.0 + s.survivals, 1.0 + s.deaths);
  p.p_d = rng.beta(1.0 + s.detections, 1.0 + s.misses);
  const double scale = 1.0 / (1.0 / h.rate_beta0 + s.n);
  p.lambda_b = rng.gamma(h.rate_alpha0 + s.births, scale);
  p.lambda_f = rng.gamma(h.rate_alpha0 + s.clutter, scale);
  return p;
}

namespace {

Mat2 cv_block(double delta) {
  Mat2 m;
  m << delta * delta * delta / 3.0, delta * delta / 2.0, delta * delta / 2.0, delta;
  return m;
}

double beta2(const PriorHyperparams& h, int k, double xbar) {
  return h.n0 * k / (h.n0 + k) * (h.mu0 - xbar) * (h.mu0 - xbar);
}

double posterior_mean_location(const PriorHyperparams& h, int k, double xbar) {
  return (h.n0 * h.mu0 + k * xbar) / (h.n0 + k);
}

}  // namespace

HmmParams sample_hmm_params(const HmmStats& s, const HmmParams& base, const PriorHyperparams& h, Rng& rng) {
  HmmParams p = base;
  const double a0 = h.var_alpha0, b0 = h.var_beta0;
  const Mat2 sinv = cv_block(base.delta).inverse();
  p.sigma_x2 = rng.inverse_gamma(a0 + s.transitions, b0 + 0.5 * (sinv * s.sxx).trace());
  p.sigma_y2 = rng.inverse_gamma(a0 + s.transitions, b0 + 0.5 * (sinv * s.syy).trace());

  const int k = s.K;
  const double b2x = k > 0 ? beta2(h, k, s.xbar1(0)) : 0.0;
  const double b2y = k > 0 ? beta2(h, k, s.xbar1(2)) : 0.0;
  if (h.tied_birth) {
    const double bp = rng.inverse_gamma(a0 + k, b0 + 0.5 * (s.beta1x + b2x + s.beta1y + b2y));
    const double bv = rng.inverse_gamma(a0 + k, b0 + 0.5 * (s.beta3x + s.beta3y));
    p.sigma_bpx2 = p.sigma_bpy2 = bp;
    p.sigma_bvx2 = p.sigma_bvy2 = bv;
  } else {
    p.sigma_bpx2 = rng.inverse_gamma(a0 + 0.5 * k, b0 + 0.5 * (s.beta1x + b2x));
    p.sigma_bpy2 = rng.inverse_gamma(a0 + 0.5 * k, b0 + 0.5 * (s.beta1y + b2y));
    p.sigma_bvx2 = rng.inverse_gamma(a0 + 0.5 * k, b0 + 0.5 * s.beta3x);
    p.sigma_bvy2 = rng.inverse_gamma(a0 + 0.5 * k, b0 + 0.5 * s.beta3y);
  }
  p.mu_bx = posterior_mean_location(h, k, s.xbar1(0)) + std::sqrt(p.sigma_bpx2 / (h.n0 + k)) * rng.normal();
  p.mu_by = posterior_mean_location(h, k, s.xbar1(2)) + std::sqrt(p.sigma_bpy2 / (h.n0 + k)) * rng.normal();

  p.sigma_r2 = rng.inverse_gamma(a0 + 0.5 * s.detections, b0 + 0.5 * s.sv(0, 0));
  p.sigma_b2 = rng.inverse_gamma(a0 + 0.5 * s.detections, b0 + 0.5 * s.sv(1, 1));
  return p;
}

ModelParams sample_params(const ModelParams& current, std::span<const Track> tracks, const Scene& scene,
                          const PriorHyperparams& h, Rng& rng) {
  ModelParams out = current;
  const AssocParams a = sample_assoc_params(assoc_stats(count_scans(tracks, scene)), h, rng);
  out.p_s = a.p_s;
  out.p_d = a.p_d;
  out.lambda_b = a.lambda_b;
  out.lambda_f = a.lambda_f;
  out.hmm = sample_hmm_params(hmm_stats(current, tracks, scene), current.hmm, h, rng);
  return out;
}

ModelParams mle_given_truth(const ModelParams& base, std::span<const Track> tracks, const Scene& scene) {
  const AssocStats a = assoc_stats(count_scans(tracks, scene));
  const HmmStats s = hmm_stats(base, tracks, scene);
  ModelParams p = base;
  p.p_s = a.survivals / (a.survivals + a.deaths);
  p.p_d = a.detections / (a.detections + a.misses);
  p.lambda_b = a.births / a.n;
  p.lambda_f = a.clutter / a.n;
  const Mat2 sinv = cv_block(base.hmm.delta).inverse();
  p.hmm.sigma_x2 = (sinv * s.sxx).trace() / (2.0 * s.transitions);
  p.hmm.sigma_y2 = (sinv * s.syy).trace() / (2.0 * s.transitions);
  p.hmm.mu_bx = s.xbar1(0);
  p.hmm.mu_by = s.xbar1(2);
  p.hmm.sigma_bpx2 = p.hmm.sigma_bpy2 = (s.beta1x + s.beta1y) / (2.0 * s.K);
  p.hmm.sigma_bvx2 = p.hmm.sigma_bvy2 = (s.beta3x + s.beta3y) / (2.0 * s.K);
  p.hmm.sigma_r2 = s.sv(0, 0) / s.detections;
  p.hmm.sigma_b2 = s.sv(1, 1) / s.detections;
  return p;
}

void mcmc_mtt_sweep(const MoveContext& ctx, ChainState& state, int n1, int n2, int n_particles, Rng& rng,
                    MoveStats* stats, SmcProposal proposal) {
  for (int i = 0; i < n1; ++i) dispatch_move(ctx, state, rng, stats);
  for (int i = 0; i < n2; ++i) refresh_chain(ctx, state, n_particles, rng, proposal);
}

void param_sweep(const Scene& scene, const MoveConfig& cfg, const PriorHyperparams& h, LearnState& state,
                 int n1, int n2, int n3, int n_particles, Rng& rng, MoveStats* stats,
                 SmcProposal proposal) {
  {
    const MoveContext ctx(scene, state.params, cfg);
    mcmc_mtt_sweep(ctx, state.chain, n1, n2, n_particles, rng, stats, proposal);
  }
  if (n3 <= 0) return;
  for (int i = 0; i < n3; ++i) state.params = sample_params(state.params, state.chain.tracks, scene, h, rng);
  const MoveContext ctx(scene, state.params, cfg);
  state.chain.log_density = chain_log_density(ctx, state.chain.tracks);
}

}  // namespace mtt
