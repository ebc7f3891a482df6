#include "mtt/runner.hpp"

#include <atomic>
#include <exception>
#include <thread>

namespace mtt {

namespace {

ChainRun run_chain(const Scene& scene, const Config& cfg, std::uint64_t seed, bool learn) {
  Rng rng(seed);
  const RunSettings& r = cfg.run;
  LearnState st;
  st.params = learn && r.learn_init ? with_reported_params(cfg.model, *r.learn_init) : cfg.model;
  {
    const MoveContext ctx(scene, st.params, cfg.moves);
    st.chain = all_clutter_state(ctx);
  }
  ChainRun out;
  out.trace.reserve(static_cast<std::size_t>(r.sweeps));
  out.map.log_density = kNegInf;
  const MoveContext fixed(scene, st.params, cfg.moves);
  for (int s = 1; s <= r.sweeps; ++s) {
    TraceEntry e;
    if (learn) {
      param_sweep(scene, cfg.moves, cfg.priors, st, r.n1, r.n2, r.n3, cfg.smc.particles, rng, &e.stats,
                  cfg.smc.proposal);
      e.theta = reported_params(st.params);
    } else {
      mcmc_mtt_sweep(fixed, st.chain, r.n1, r.n2, cfg.smc.particles, rng, &e.stats, cfg.smc.proposal);
    }
    e.log_density = st.chain.log_density;
    out.trace.push_back(e);
    if (s <= r.burn_in) continue;
    if (st.chain.log_density > out.map.log_density) out.map = {s, st.chain.log_density, st.chain.tracks};
    if ((s - r.burn_in) % r.sample_every == 0) out.samples.push_back({s, st.chain.log_density, st.chain.tracks});
  }
  out.final_params = st.params;
  return out;
}

}  // namespace

ChainRun run_track_chain(const Scene& scene, const Config& cfg, std::uint64_t seed) {
  return run_chain(scene, cfg, seed, false);
}

ChainRun run_learn_chain(const Scene& scene, const Config& cfg, std::uint64_t seed) {
  return run_chain(scene, cfg, seed, true);
}

std::vector<ChainRun> run_chains(const Scene& scene, const Config& cfg, std::uint64_t seed, bool learn,
                                 int workers) {
  cfg.validate();
  const int k = cfg.run.chains;
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, k);
  std::vector<ChainRun> runs(static_cast<std::size_t>(k));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int c = next++; c < k; c = next++) {
      try {
        runs[static_cast<std::size_t>(c)] = run_chain(scene, cfg, derive_seed(seed, static_cast<std::uint64_t>(c)), learn);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return runs;
}

std::vector<OspaResult> ospa_per_scan(std::span<const Track> estimate, std::span<const Track> truth, int n,
                                      double c, double p) {
  std::vector<OspaResult> out;
  for (int t = 1; t <= n; ++t) {
    const auto a = positions_at(estimate, t);
    const auto b = positions_at(truth, t);
    out.push_back(ospa(a, b, c, p));
  }
  return out;
}

}  // namespace mtt
