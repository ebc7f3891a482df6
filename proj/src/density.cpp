#include "mtt/density.hpp"

#include <cmath>

namespace mtt {

namespace {

double xlogy(double k, double p) { return k == 0.0 ? 0.0 : k * std::log(p); }

double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

}  // namespace

double log_poisson(int k, double lambda) {
  if (lambda == 0.0) return k == 0 ? 0.0 : kNegInf;
  return k * std::log(lambda) - lambda - log_factorial(k);
}

ScanCounts count_scans(std::span<const Track> tracks, const Scene& scene) {
  const int n = scene.n();
  ScanCounts c;
  for (auto* v : {&c.k_x, &c.k_s, &c.k_b, &c.k_d, &c.k_f, &c.k_y}) v->assign(static_cast<std::size_t>(n) + 1, 0);
  for (const Track& tr : tracks) {
    c.k_b[static_cast<std::size_t>(tr.t_b)] += 1;
    for (int t = tr.t_b; t < tr.t_d; ++t) {
      c.k_x[static_cast<std::size_t>(t)] += 1;
      if (t > tr.t_b) c.k_s[static_cast<std::size_t>(t)] += 1;
      if (tr.obs_at(t) > 0) c.k_d[static_cast<std::size_t>(t)] += 1;
    }
  }
  for (int t = 1; t <= n; ++t) {
    c.k_y[static_cast<std::size_t>(t)] = scene.k_y(t);
    c.k_f[static_cast<std::size_t>(t)] = scene.k_y(t) - c.k_d[static_cast<std::size_t>(t)];
  }
  return c;
}

ScanCounts count_scans(const Association& z) {
  const int n = z.n();
  ScanCounts c;
  for (auto* v : {&c.k_x, &c.k_s, &c.k_b, &c.k_d, &c.k_f, &c.k_y}) v->assign(static_cast<std::size_t>(n) + 1, 0);
  for (int t = 1; t <= n; ++t) {
    const ScanAssociation& s = z.at(t);
    const auto i = static_cast<std::size_t>(t);
    c.k_x[i] = s.k_x();
    c.k_s[i] = s.k_s();
    c.k_b[i] = s.k_b;
    c.k_d[i] = s.k_d();
    c.k_f[i] = s.k_f;
    c.k_y[i] = s.k_y();
  }
  return c;
}

double log_association_prior(const ModelParams& p, const ScanCounts& c) {
  double lp = 0.0;
  const auto n = c.k_x.size() - 1;
  for (std::size_t t = 1; t <= n; ++t) {
    const int deaths = c.k_x[t - 1] - c.k_s[t];
    const int missed = c.k_x[t] - c.k_d[t];
    lp += xlogy(c.k_s[t], p.p_s) + xlogy(deaths, 1.0 - p.p_s);
    lp += log_poisson(c.k_b[t], p.lambda_b) + log_poisson(c.k_f[t], p.lambda_f);
    lp += xlogy(c.k_d[t], p.p_d) + xlogy(missed, 1.0 - p.p_d);
    lp += log_factorial(c.k_f[t]) - log_factorial(c.k_y[t]);
  }
  return lp;
}

double track_log_hmm(const TargetModel& model, const Track& tr, const Scene& scene) {
  double lp = model.log_birth(tr.states.front());
  for (int t = tr.t_b; t < tr.t_d; ++t) {
    if (t > tr.t_b) lp += model.log_transition(tr.state_at(t), tr.state_at(t - 1));
    if (tr.obs_at(t) > 0) lp += model.log_observation(scene.y(t, tr.obs_at(t)), tr.state_at(t));
  }
  return lp;
}

LogDensityTerms tracks_log_density(const ModelParams& params, const TargetModel& model,
                                   std::span<const Track> tracks, const Scene& scene) {
  const ScanCounts c = count_scans(tracks, scene);
  LogDensityTerms out;
  out.log_pz = log_association_prior(params, c);
  const double log_vol = std::log(params.obs_volume());
  for (int t = 1; t <= scene.n(); ++t) {
    out.log_px_given_z += log_factorial(c.k_b[static_cast<std::size_t>(t)]);
    out.log_py_given_xz -= c.k_f[static_cast<std::size_t>(t)] * log_vol;
  }
  for (const Track& tr : tracks) {
    out.log_px_given_z += model.log_birth(tr.states.front());
    for (int t = tr.t_b; t < tr.t_d; ++t) {
      if (t > tr.t_b) out.log_px_given_z += model.log_transition(tr.state_at(t), tr.state_at(t - 1));
      if (tr.obs_at(t) > 0)
        out.log_py_given_xz += model.log_observation(scene.y(t, tr.obs_at(t)), tr.state_at(t));
    }
  }
  return out;
}

LogDensityTerms log_joint_density(const ModelParams& params, const Association& z,
                                  const Scene& scene, const ScanStates& states) {
  params.validate();
  const TrackSet ts = decompose(z, scene, &states);
  const TargetModel model(params);
  LogDensityTerms out = tracks_log_density(params, model, ts.tracks, scene);
  for (int t = 1; t <= z.n(); ++t) {
    const auto& xs = states[static_cast<std::size_t>(t - 1)];
    for (int j = z.at(t).k_s() + 1; j < z.at(t).k_x(); ++j)
      if (!state_precedes(xs[static_cast<std::size_t>(j - 1)], xs[static_cast<std::size_t>(j)]))
        out.log_px_given_z = kNegInf;
  }
  return out;
}

}  // namespace mtt
