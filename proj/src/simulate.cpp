#include "mtt/simulate.hpp"

#include "mtt/random.hpp"
#include "mtt/target_model.hpp"

#include <algorithm>
#include <numeric>

namespace mtt {

Simulation simulate(const ModelParams& params, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("scan count n must be >= 1");
  params.validate();
  const TargetModel model(params);
  Rng rng(seed);
  Simulation sim;
  sim.assoc.scans.resize(static_cast<std::size_t>(n));
  sim.scene.obs.resize(static_cast<std::size_t>(n));
  ScanStates states(static_cast<std::size_t>(n));

  std::vector<State> prev;
  for (int t = 1; t <= n; ++t) {
    ScanAssociation& s = sim.assoc.at(t);
    std::vector<State> cur;
    for (const State& x : prev) {
      const bool survives = rng.bernoulli(params.p_s);
      s.c_s.push_back(survives ? 1 : 0);
      if (survives) cur.push_back(model.sample_transition(x, rng));
    }
    s.k_b = rng.poisson(params.lambda_b);
    std::vector<State> born;
    for (int b = 0; b < s.k_b; ++b) born.push_back(model.sample_birth(rng));
    std::sort(born.begin(), born.end(), state_precedes);
    cur.insert(cur.end(), born.begin(), born.end());

    std::vector<int> detected;
    for (std::size_t j = 0; j < cur.size(); ++j)
      if (rng.bernoulli(params.p_d)) detected.push_back(static_cast<int>(j));
    s.k_f = rng.poisson(params.lambda_f);
    const int k_y = static_cast<int>(detected.size()) + s.k_f;
    std::vector<int> slots(static_cast<std::size_t>(k_y));
    std::iota(slots.begin(), slots.end(), 1);
    std::shuffle(slots.begin(), slots.end(), rng.engine());

    auto& ys = sim.scene.obs[static_cast<std::size_t>(t - 1)];
    ys.assign(static_cast<std::size_t>(k_y), Obs::Zero());
    s.i_d.assign(cur.size(), 0);
    for (std::size_t d = 0; d < detected.size(); ++d) {
      const int j = detected[d];
      s.i_d[static_cast<std::size_t>(j)] = slots[d];
      ys[static_cast<std::size_t>(slots[d] - 1)] = model.sample_observation(cur[static_cast<std::size_t>(j)], rng);
    }
    const ObservationWindow& w = params.window;
    for (std::size_t f = detected.size(); f < slots.size(); ++f) {
      Obs y;
      for (int a = 0; a < 2; ++a) y(a) = w.lo(a) + (w.hi(a) - w.lo(a)) * rng.uniform();
      ys[static_cast<std::size_t>(slots[f] - 1)] = y;
    }
    states[static_cast<std::size_t>(t - 1)] = cur;
    prev = std::move(cur);
  }
  sim.scene.states = std::move(states);
  sim.scene.truth = sim.assoc;
  return sim;
}

}  // namespace mtt
