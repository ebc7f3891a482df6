#pragma once

#include "mtt/io.hpp"


namespace mtt {

struct StoredSample {
  int sweep = 0;
  double log_density = 0.0;
  std::vector<Track> tracks;
};

/// Output of one chain run.
struct ChainRun {
  std::vector<TraceEntry> trace;
  std::vector<StoredSample> samples;  // thinned by run.sample_every after burn-in
  StoredSample map;
  ModelParams final_params;
};

/// Tracking with fixed parameters from all-clutter initialisation.
ChainRun run_track_chain(const Scene& scene, const Config& cfg, std::uint64_t seed);

/// Joint association and parameter sampling. Starts from run.learn_init when set.
ChainRun run_learn_chain(const Scene& scene, const Config& cfg, std::uint64_t seed);

/// Runs `chains` independent chains on worker threads. Chain c uses derive_seed(seed, c),
/// so the result does not depend on the number of workers.
std::vector<ChainRun> run_chains(const Scene& scene, const Config& cfg, std::uint64_t seed, bool learn,
                                 int workers = 0);

/// Per-scan OSPA between an estimate and the truth.
std::vector<OspaResult> ospa_per_scan(std::span<const Track> estimate, std::span<const Track> truth, int n,
                                      double c, double p);

}  // namespace mtt
