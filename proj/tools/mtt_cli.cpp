#include "mtt/runner.hpp"
#include "mtt/simulate.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> sweeps, chains, burn_in, scans;
  std::string out_dir = ".";
  std::string scene;
  std::string truth;
  std::vector<std::string> samples;
};

/// Files created by the current command, removed again if it fails.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  fs::path add(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }
  void discard() {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
  }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

mtt::Config resolve_config(const Options& o) {
  mtt::Config c = o.config.empty() ? mtt::config_from_json(json::object()) : mtt::load_config(o.config);
  if (o.seed) c.run.seed = *o.seed;
  if (o.sweeps) c.run.sweeps = *o.sweeps;
  if (o.chains) c.run.chains = *o.chains;
  if (o.burn_in) c.run.burn_in = *o.burn_in;
  if (o.scans) c.run.scans = *o.scans;
  c.validate();
  return c;
}

mtt::OutputHeader header_for(const mtt::Config& c) { return {mtt::config_hash(c), c.run.seed, mtt::kVersion}; }

std::ofstream open_csv(const fs::path& p, const mtt::OutputHeader& h) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  out << std::setprecision(17) << mtt::header_comment(h);
  return out;
}

void cmd_simulate(const Options& o) {
  const mtt::Config c = resolve_config(o);
  const auto h = header_for(c);
  Outputs out(o.out_dir);
  fs::create_directories(out.dir());
  try {
    const mtt::Simulation sim = mtt::simulate(c.model, c.run.scans, c.run.seed);
    const auto truth = mtt::decompose(sim.assoc, sim.scene, &*sim.scene.states).tracks;
    mtt::write_scene_csv(out.add("scene.csv"), sim.scene, h);
    mtt::write_truth_json(out.add("truth.json"), truth, sim.scene, h);
  } catch (...) {
    out.discard();
    throw;
  }
}

json sample_json(const mtt::StoredSample& s, const mtt::Scene& scene) {
  json j = mtt::tracks_to_json(s.tracks, scene);
  j["sweep"] = s.sweep;
  j["log_density"] = s.log_density;
  return j;
}

void write_run(const std::vector<mtt::ChainRun>& runs, const mtt::Scene& scene, const mtt::Config& c, bool learn,
               Outputs& out) {
  const auto h = header_for(c);
  {
    auto f = open_csv(out.add("trace.csv"), h);
    f << "chain,sweep,log_density,move,proposed,accepted\n";
    for (std::size_t k = 0; k < runs.size(); ++k)
      for (std::size_t s = 0; s < runs[k].trace.size(); ++s) {
        const auto& e = runs[k].trace[s];
        for (int m = 0; m < mtt::kNumMoves; ++m)
          f << k << ',' << s + 1 << ',' << e.log_density << ',' << mtt::to_string(static_cast<mtt::MoveKind>(m))
            << ',' << e.stats.proposed[static_cast<std::size_t>(m)] << ','
            << e.stats.accepted[static_cast<std::size_t>(m)] << '\n';
      }
    if (!f) throw std::runtime_error("write failed: trace.csv");
  }
  json summary = {{"meta", mtt::header_json(h)}, {"chains", json::array()}};
  for (std::size_t k = 0; k < runs.size(); ++k) {
    json j = {{"meta", mtt::header_json(h)}, {"chain", k}, {"map", sample_json(runs[k].map, scene)},
              {"samples", json::array()}};
    for (const auto& s : runs[k].samples) j["samples"].push_back(sample_json(s, scene));
    mtt::write_json(out.add("samples_chain" + std::to_string(k) + ".json"), j);

    const mtt::ChainSummary cs = mtt::chain_summary(runs[k].trace, c.run.burn_in);
    json acc = json::object();
    for (int m = 0; m < mtt::kNumMoves; ++m)
      acc[std::string(mtt::to_string(static_cast<mtt::MoveKind>(m)))] = cs.acceptance[static_cast<std::size_t>(m)];
    json cj = {{"chain", k},
               {"acceptance", acc},
               {"overall_acceptance", cs.overall_acceptance},
               {"map_sweep", cs.map_index + 1},
               {"map_log_density", runs[k].trace[static_cast<std::size_t>(cs.map_index)].log_density}};
    if (learn) {
      json mean = json::object(), var = json::object();
      const auto& names = mtt::reported_param_names();
      for (std::size_t i = 0; i < names.size(); ++i) {
        mean[std::string(names[i])] = cs.theta_mean[i];
        var[std::string(names[i])] = cs.theta_var[i];
      }
      cj["theta_mean"] = mean;
      cj["theta_var"] = var;
    }
    summary["chains"].push_back(cj);
  }
  mtt::write_json(out.add("summary.json"), summary);
  if (!learn) return;
  auto f = open_csv(out.add("theta.csv"), h);
  f << "chain,sweep";
  for (auto n : mtt::reported_param_names()) f << ',' << n;
  f << '\n';
  for (std::size_t k = 0; k < runs.size(); ++k)
    for (std::size_t s = 0; s < runs[k].trace.size(); ++s) {
      f << k << ',' << s + 1;
      for (double v : *runs[k].trace[s].theta) f << ',' << v;
      f << '\n';
    }
  if (!f) throw std::runtime_error("write failed: theta.csv");
}

void cmd_run(const Options& o, bool learn) {
  const mtt::Config c = resolve_config(o);
  const fs::path scene_path = o.scene.empty() ? fs::path(o.out_dir) / "scene.csv" : fs::path(o.scene);
  const mtt::Scene scene = mtt::read_scene_csv(scene_path);
  Outputs out(o.out_dir);
  fs::create_directories(out.dir());
  try {
    const auto runs = mtt::run_chains(scene, c, c.run.seed, learn);
    write_run(runs, scene, c, learn, out);
  } catch (...) {
    out.discard();
    throw;
  }
}

void cmd_evaluate(const Options& o) {
  const mtt::Config c = resolve_config(o);
  const fs::path dir(o.out_dir);
  const fs::path truth_path = o.truth.empty() ? dir / "truth.json" : fs::path(o.truth);
  const auto truth = mtt::read_truth_json(truth_path);
  std::vector<fs::path> files(o.samples.begin(), o.samples.end());
  if (files.empty())
    for (int k = 0; fs::exists(dir / ("samples_chain" + std::to_string(k) + ".json")); ++k)
      files.push_back(dir / ("samples_chain" + std::to_string(k) + ".json"));
  if (files.empty()) throw std::runtime_error("no sample files found in " + dir.string());

  int n = 0;
  for (const auto& t : truth) n = std::max(n, t.t_d - 1);
  std::vector<std::vector<mtt::Track>> samples;
  std::vector<mtt::Track> map;
  double map_ld = mtt::kNegInf;
  for (const auto& f : files) {
    const json j = mtt::read_json(f);
    const json& m = j.at("map");
    if (m.at("log_density").get<double>() > map_ld) {
      map_ld = m.at("log_density").get<double>();
      map = mtt::tracks_from_json(m);
    }
    for (const json& s : j.at("samples")) samples.push_back(mtt::tracks_from_json(s));
  }
  for (const auto& s : samples)
    for (const auto& t : s) n = std::max(n, t.t_d - 1);
  for (const auto& t : map) n = std::max(n, t.t_d - 1);

  const auto at_map = mtt::ospa_per_scan(map, truth, n, c.run.ospa_c, c.run.ospa_p);
  std::vector<mtt::OspaResult> mean(static_cast<std::size_t>(n));
  for (const auto& s : samples) {
    const auto r = mtt::ospa_per_scan(s, truth, n, c.run.ospa_c, c.run.ospa_p);
    for (int t = 0; t < n; ++t) {
      mean[static_cast<std::size_t>(t)].total += r[static_cast<std::size_t>(t)].total;
      mean[static_cast<std::size_t>(t)].localisation += r[static_cast<std::size_t>(t)].localisation;
      mean[static_cast<std::size_t>(t)].cardinality += r[static_cast<std::size_t>(t)].cardinality;
    }
  }
  json scans = json::array();
  for (int t = 0; t < n; ++t) {
    const auto i = static_cast<std::size_t>(t);
    json row = {{"t", t + 1},
                {"map", {{"ospa", at_map[i].total}, {"loc", at_map[i].localisation}, {"card", at_map[i].cardinality}}}};
    if (!samples.empty()) {
      const double k = static_cast<double>(samples.size());
      row["mean"] = {{"ospa", mean[i].total / k}, {"loc", mean[i].localisation / k}, {"card", mean[i].cardinality / k}};
    }
    scans.push_back(row);
  }
  const json report = {{"meta", mtt::header_json(header_for(c))},
                       {"c", c.run.ospa_c},
                       {"p", c.run.ospa_p},
                       {"samples", samples.size()},
                       {"scans", scans}};
  Outputs out(dir);
  fs::create_directories(dir);
  try {
    mtt::write_json(out.add("ospa.json"), report);
  } catch (...) {
    out.discard();
    throw;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple target tracking by MCMC data association"};
  app.set_version_flag("--version", std::string(mtt::kVersion));
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
    s->add_option("--seed", o.seed, "master seed (overrides run.seed)");
    s->add_option("--out-dir", o.out_dir, "output directory");
  };
  auto chain_flags = [&](CLI::App* s) {
    s->add_option("--sweeps", o.sweeps, "number of sweeps");
    s->add_option("--chains", o.chains, "independent chains");
    s->add_option("--burn-in", o.burn_in, "sweeps discarded before storing samples");
    s->add_option("--scene", o.scene, "scene CSV (default <out-dir>/scene.csv)");
  };

  auto* sim = app.add_subcommand("simulate", "simulate a scene; writes scene.csv and truth.json");
  common(sim);
  sim->add_option("--scans", o.scans, "number of scans (overrides run.scans)");
  auto* track = app.add_subcommand("track", "sample associations with fixed parameters");
  common(track);
  chain_flags(track);
  auto* learn = app.add_subcommand("learn", "sample associations and parameters jointly");
  common(learn);
  chain_flags(learn);
  auto* eval = app.add_subcommand("evaluate", "per-scan OSPA of stored samples against the truth");
  common(eval);
  eval->add_option("--truth", o.truth, "truth JSON (default <out-dir>/truth.json)");
  eval->add_option("--samples", o.samples, "sample JSON files (default <out-dir>/samples_chain*.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim) cmd_simulate(o);
    else if (*track) cmd_run(o, false);
    else if (*learn) cmd_run(o, true);
    else if (*eval) cmd_evaluate(o);
  } catch (const mtt::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
