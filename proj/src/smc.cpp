#include "mtt/smc.hpp"

#include "mtt/gaussian.hpp"
#include "mtt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtt {

std::vector<int> multinomial_resample(std::span<const double> weights, int n, Rng& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("resampling weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("resampling weights must sum to one");
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) cdf[i] = (acc += weights[i]);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int& a : out) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    if (k >= cdf.size()) k = cdf.size() - 1;
    a = static_cast<int>(k);
  }
  return out;
}

namespace {

// Proposal for one particle at step t from its parent (nullptr at t = 0).
struct Move {
  State x;
  double log_w;
};

class Propagator {
 public:
  Propagator(const TargetModel& m, SmcProposal p) : model_(m), proposal_(p) {}

  Move draw(const State* parent, const std::optional<Obs>& y, Rng& rng) const {
    if (proposal_ == SmcProposal::bootstrap || !y) {
      State x = parent ? model_.sample_transition(*parent, rng) : model_.sample_birth(rng);
      return {x, y ? model_.log_observation(*y, x) : 0.0};
    }
    const Belief4 q = ukf_belief(parent, *y);
    const Mat4 l = robust_cholesky<4>(q.cov, "proposal covariance");
    State x = q.mean + l * rng.standard_normal_vector<4>();
    return {x, weight(parent, *y, x, q.mean, l)};
  }

  double evaluate(const State* parent, const std::optional<Obs>& y, const State& x) const {
    if (proposal_ == SmcProposal::bootstrap || !y) return y ? model_.log_observation(*y, x) : 0.0;
    const Belief4 q = ukf_belief(parent, *y);
    return weight(parent, *y, x, q.mean, robust_cholesky<4>(q.cov, "proposal covariance"));
  }

 private:
  Belief4 ukf_belief(const State* parent, const Obs& y) const {
    const Belief4 pred = parent ? Belief4{model_.transition() * *parent, model_.process_cov()}
                                : Belief4{model_.birth_mean(), model_.birth_cov()};
    return ukf_update(model_, pred, predict_observation(model_, pred), y);
  }

  double weight(const State* parent, const Obs& y, const State& x, const State& qm,
                const Mat4& ql) const {
    const double prior = parent ? model_.log_transition(x, *parent) : model_.log_birth(x);
    return prior + model_.log_observation(y, x) - gaussian_log_pdf_chol<4>(State(x - qm), ql);
  }

  const TargetModel& model_;
  SmcProposal proposal_;
};

double normalise(const std::vector<double>& log_w, std::vector<double>& w, std::vector<double>& lw,
                 int step) {
  const double lse = log_sum_exp(log_w);
  if (!std::isfinite(lse))
    throw DegeneracyError("all particle weights vanished at step " + std::to_string(step + 1), step + 1);
  w.resize(log_w.size());
  lw.resize(log_w.size());
  double s = 0.0;
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    lw[k] = log_w[k] - lse;
    w[k] = std::exp(lw[k]);
    s += w[k];
  }
  for (double& v : w) v /= s;
  return lse - std::log(static_cast<double>(log_w.size()));
}

ParticleSystem run_filter(const TargetModel& model, std::span<const std::optional<Obs>> obs,
                          int n, SmcProposal proposal, Rng& rng, std::span<const State> retained) {
  if (n < 1) throw ValidationError("particle count must be >= 1");
  if (obs.empty()) throw ValidationError("observation sequence must be non-empty");
  const bool conditional = !retained.empty();
  if (conditional && retained.size() != obs.size())
    throw ValidationError("retained path length differs from observation sequence length");
  const Propagator prop(model, proposal);
  const std::size_t steps = obs.size();
  const auto nn = static_cast<std::size_t>(n);
  ParticleSystem ps;
  ps.particles.assign(steps, std::vector<State>(nn));
  ps.weights.resize(steps);
  ps.log_weights.resize(steps);
  ps.ancestors.assign(steps, std::vector<int>(nn));
  std::vector<double> log_w(nn);
  for (std::size_t t = 0; t < steps; ++t) {
    auto& anc = ps.ancestors[t];
    if (t == 0) {
      for (std::size_t k = 0; k < nn; ++k) anc[k] = static_cast<int>(k);
    } else if (conditional) {
      anc[0] = 0;
      if (n > 1) {
        const auto rest = multinomial_resample(ps.weights[t - 1], n - 1, rng);
        std::copy(rest.begin(), rest.end(), anc.begin() + 1);
      }
    } else {
      anc = multinomial_resample(ps.weights[t - 1], n, rng);
    }
    for (std::size_t k = 0; k < nn; ++k) {
      const State* parent = t == 0 ? nullptr : &ps.particles[t - 1][static_cast<std::size_t>(anc[k])];
      if (conditional && k == 0) {
        ps.particles[t][0] = retained[t];
        log_w[0] = prop.evaluate(parent, obs[t], retained[t]);
      } else {
        const Move m = prop.draw(parent, obs[t], rng);
        ps.particles[t][k] = m.x;
        log_w[k] = m.log_w;
      }
    }
    ps.log_lik += normalise(log_w, ps.weights[t], ps.log_weights[t], static_cast<int>(t));
  }
  return ps;
}

}  // namespace

ParticleSystem particle_filter(const TargetModel& model, std::span<const std::optional<Obs>> obs,
                               int n_particles, SmcProposal proposal, Rng& rng) {
  return run_filter(model, obs, n_particles, proposal, rng, {});
}

ParticleSystem conditional_particle_filter(const TargetModel& model,
                                           std::span<const std::optional<Obs>> obs,
                                           int n_particles, std::span<const State> retained,
                                           Rng& rng, SmcProposal proposal) {
  if (retained.size() != obs.size())
    throw ValidationError("retained path length differs from observation sequence length");
  return run_filter(model, obs, n_particles, proposal, rng, retained);
}

BackwardPath backward_simulate(const ParticleSystem& ps, const TargetModel& model, Rng& rng) {
  const int steps = ps.steps();
  if (steps == 0) throw ValidationError("empty particle system");
  BackwardPath out;
  out.indices.assign(static_cast<std::size_t>(steps), 0);
  out.path.resize(static_cast<std::size_t>(steps));
  const auto last = static_cast<std::size_t>(steps - 1);
  int b = rng.categorical_log(ps.log_weights[last]);
  if (b < 0) throw DegeneracyError("final weights vanished", steps);
  out.indices[last] = b;
  out.path[last] = ps.particles[last][static_cast<std::size_t>(b)];
  std::vector<double> lw(static_cast<std::size_t>(ps.size()));
  for (std::size_t t = last; t-- > 0;) {
    const State& next = out.path[t + 1];
    for (std::size_t m = 0; m < lw.size(); ++m)
      lw[m] = ps.log_weights[t][m] + model.log_transition(next, ps.particles[t][m]);
    b = rng.categorical_log(lw);
    if (b < 0)
      throw DegeneracyError("backward weights vanished at step " + std::to_string(t + 1),
                            static_cast<int>(t) + 1);
    out.indices[t] = b;
    out.path[t] = ps.particles[t][static_cast<std::size_t>(b)];
  }
  return out;
}

}  // namespace mtt
