#pragma once

#include "mtt/learning.hpp"
#include "mtt/metrics.hpp"
#include "mtt/smc.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mtt {

inline constexpr const char* kVersion = "1.0.0";

struct SmcConfig {
  int particles = 15;
  SmcProposal proposal = SmcProposal::bootstrap;
};

struct RunSettings {
  int scans = 50;          // simulate
  int sweeps = 2000;
  int n1 = 50;             // association moves per sweep
  int n2 = 1;              // particle Gibbs refreshes per sweep
  int n3 = 1;              // parameter Gibbs updates per sweep (learn)
  int burn_in = 0;
  int chains = 1;
  int sample_every = 10;   // thinning of stored association samples
  std::uint64_t seed = 1;
  double ospa_c = 10.0;
  double ospa_p = 1.0;
  std::optional<std::array<double, kNumReportedParams>> learn_init;  // theta^(0)
};

/// Full run configuration: sections model, priors, moves, smc, run.
struct Config {
  ModelParams model = linear_benchmark_params();
  PriorHyperparams priors;
  MoveConfig moves;
  SmcConfig smc;
  RunSettings run;

  void validate() const;
};

Config config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const Config& c);
Config load_config(const std::filesystem::path& path);
/// Hex digest of the canonical JSON form.
std::string config_hash(const Config& c);

/// Provenance lines written at the top of every output file.
struct OutputHeader {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kVersion;
};

nlohmann::json header_json(const OutputHeader& h);
std::string header_comment(const OutputHeader& h);

/// Scene CSV: `# key: value` header lines, then `t,obs_id,y1,y2` rows.
void write_scene_csv(const std::filesystem::path& path, const Scene& scene, const OutputHeader& h);
Scene read_scene_csv(const std::filesystem::path& path);

nlohmann::json tracks_to_json(std::span<const Track> tracks, const Scene& scene);
std::vector<Track> tracks_from_json(const nlohmann::json& j);

void write_truth_json(const std::filesystem::path& path, std::span<const Track> tracks, const Scene& scene,
                      const OutputHeader& h);
std::vector<Track> read_truth_json(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace mtt
