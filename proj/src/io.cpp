#include "mtt/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace mtt {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw ValidationError("config section '" + section + "' must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ValidationError("unknown key '" + k + "' in config section '" + section + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad value for '") + key + "': " + e.what());
  }
}

json obs_json(const Obs& o) { return json::array({o(0), o(1)}); }

Obs obs_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw ValidationError(std::string(what) + " must be a 2-element array");
  return Obs(j[0].get<double>(), j[1].get<double>());
}

ModelParams model_from_json(const json& j) {
  check_keys(j, {"preset", "observation", "p_s", "p_d", "lambda_b", "lambda_f", "window", "hmm"}, "model");
  ModelParams m = linear_benchmark_params();
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "linear_benchmark") m = linear_benchmark_params();
    else if (preset == "bearing_range_benchmark") m = bearing_range_benchmark_params();
    else throw ValidationError("unknown model preset '" + preset + "'");
  }
  if (j.contains("observation")) m.observation = observation_kind_from_string(j.at("observation").get<std::string>());
  read(j, "p_s", m.p_s);
  read(j, "p_d", m.p_d);
  read(j, "lambda_b", m.lambda_b);
  read(j, "lambda_f", m.lambda_f);
  if (j.contains("window")) {
    const json& w = j.at("window");
    check_keys(w, {"lo", "hi"}, "model.window");
    if (w.contains("lo")) m.window.lo = obs_from(w.at("lo"), "window.lo");
    if (w.contains("hi")) m.window.hi = obs_from(w.at("hi"), "window.hi");
  }
  if (j.contains("hmm")) {
    const json& h = j.at("hmm");
    check_keys(h, {"sigma_x2", "sigma_y2", "sigma_r2", "sigma_b2", "mu_bx", "mu_by", "sigma_bpx2", "sigma_bpy2",
                   "sigma_bvx2", "sigma_bvy2", "delta"},
               "model.hmm");
    read(h, "sigma_x2", m.hmm.sigma_x2);
    read(h, "sigma_y2", m.hmm.sigma_y2);
    read(h, "sigma_r2", m.hmm.sigma_r2);
    read(h, "sigma_b2", m.hmm.sigma_b2);
    read(h, "mu_bx", m.hmm.mu_bx);
    read(h, "mu_by", m.hmm.mu_by);
    read(h, "sigma_bpx2", m.hmm.sigma_bpx2);
    read(h, "sigma_bpy2", m.hmm.sigma_bpy2);
    read(h, "sigma_bvx2", m.hmm.sigma_bvx2);
    read(h, "sigma_bvy2", m.hmm.sigma_bvy2);
    read(h, "delta", m.hmm.delta);
  }
  return m;
}

json model_to_json(const ModelParams& m) {
  return {{"observation", std::string(to_string(m.observation))},
          {"p_s", m.p_s},
          {"p_d", m.p_d},
          {"lambda_b", m.lambda_b},
          {"lambda_f", m.lambda_f},
          {"window", {{"lo", obs_json(m.window.lo)}, {"hi", obs_json(m.window.hi)}}},
          {"hmm",
           {{"sigma_x2", m.hmm.sigma_x2},
            {"sigma_y2", m.hmm.sigma_y2},
            {"sigma_r2", m.hmm.sigma_r2},
            {"sigma_b2", m.hmm.sigma_b2},
            {"mu_bx", m.hmm.mu_bx},
            {"mu_by", m.hmm.mu_by},
            {"sigma_bpx2", m.hmm.sigma_bpx2},
            {"sigma_bpy2", m.hmm.sigma_bpy2},
            {"sigma_bvx2", m.hmm.sigma_bvx2},
            {"sigma_bvy2", m.hmm.sigma_bvy2},
            {"delta", m.hmm.delta}}}};
}

std::string proposal_name(SmcProposal p) { return p == SmcProposal::ukf ? "ukf" : "bootstrap"; }

SmcProposal proposal_from(const std::string& s) {
  if (s == "bootstrap") return SmcProposal::bootstrap;
  if (s == "ukf") return SmcProposal::ukf;
  throw ValidationError("unknown smc proposal '" + s + "'");
}

}  // namespace

void Config::validate() const {
  model.validate();
  priors.validate();
  moves.validate();
  if (smc.particles < 1) throw ValidationError("smc.particles must be >= 1");
  if (run.scans < 1) throw ValidationError("run.scans must be >= 1");
  if (run.sweeps < 1) throw ValidationError("run.sweeps must be >= 1");
  if (run.n1 < 0 || run.n2 < 0 || run.n3 < 0) throw ValidationError("run.n1, n2, n3 must be >= 0");
  if (run.burn_in < 0 || run.burn_in >= run.sweeps) throw ValidationError("run.burn_in must lie in [0, sweeps)");
  if (run.chains < 1) throw ValidationError("run.chains must be >= 1");
  if (run.sample_every < 1) throw ValidationError("run.sample_every must be >= 1");
  if (!(run.ospa_c > 0.0) || !(run.ospa_p >= 1.0)) throw ValidationError("OSPA needs c > 0 and p >= 1");
  if (run.learn_init) with_reported_params(model, *run.learn_init).validate();
}

Config config_from_json(const json& j) {
  check_keys(j, {"model", "priors", "moves", "smc", "run"}, "root");
  Config c;
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("priors")) {
    const json& p = j.at("priors");
    check_keys(p, {"rate_alpha0", "rate_beta0", "var_alpha0", "var_beta0", "n0", "mu0", "tied_birth"}, "priors");
    read(p, "rate_alpha0", c.priors.rate_alpha0);
    read(p, "rate_beta0", c.priors.rate_beta0);
    read(p, "var_alpha0", c.priors.var_alpha0);
    read(p, "var_beta0", c.priors.var_beta0);
    read(p, "n0", c.priors.n0);
    read(p, "mu0", c.priors.mu0);
    read(p, "tied_birth", c.priors.tied_birth);
  }
  if (j.contains("moves")) {
    const json& m = j.at("moves");
    check_keys(m, {"p_m", "gate_radius", "tau", "move_probs", "ut_scale"}, "moves");
    read(m, "p_m", c.moves.p_m);
    read(m, "gate_radius", c.moves.gate_radius);
    read(m, "tau", c.moves.tau);
    read(m, "ut_scale", c.moves.ut_scale);
    if (m.contains("move_probs")) {
      const auto v = m.at("move_probs").get<std::vector<double>>();
      if (v.size() != static_cast<std::size_t>(kNumMoves)) throw ValidationError("moves.move_probs must have 6 entries");
      std::copy(v.begin(), v.end(), c.moves.move_probs.begin());
    }
  }
  if (j.contains("smc")) {
    const json& s = j.at("smc");
    check_keys(s, {"particles", "proposal"}, "smc");
    read(s, "particles", c.smc.particles);
    if (s.contains("proposal")) c.smc.proposal = proposal_from(s.at("proposal").get<std::string>());
  }
  if (j.contains("run")) {
    const json& r = j.at("run");
    check_keys(r, {"scans", "sweeps", "n1", "n2", "n3", "burn_in", "chains", "sample_every", "seed", "ospa_c",
                   "ospa_p", "learn_init"},
               "run");
    read(r, "scans", c.run.scans);
    read(r, "sweeps", c.run.sweeps);
    read(r, "n1", c.run.n1);
    read(r, "n2", c.run.n2);
    read(r, "n3", c.run.n3);
    read(r, "burn_in", c.run.burn_in);
    read(r, "chains", c.run.chains);
    read(r, "sample_every", c.run.sample_every);
    read(r, "seed", c.run.seed);
    read(r, "ospa_c", c.run.ospa_c);
    read(r, "ospa_p", c.run.ospa_p);
    if (r.contains("learn_init")) {
      const auto v = r.at("learn_init").get<std::vector<double>>();
      if (v.size() != static_cast<std::size_t>(kNumReportedParams)) throw ValidationError("run.learn_init must have 12 entries");
      std::array<double, kNumReportedParams> a{};
      std::copy(v.begin(), v.end(), a.begin());
      c.run.learn_init = a;
    }
  }
  c.validate();
  return c;
}

json config_to_json(const Config& c) {
  json run = {{"scans", c.run.scans},     {"sweeps", c.run.sweeps},   {"n1", c.run.n1},
              {"n2", c.run.n2},           {"n3", c.run.n3},           {"burn_in", c.run.burn_in},
              {"chains", c.run.chains},   {"sample_every", c.run.sample_every},
              {"seed", c.run.seed},       {"ospa_c", c.run.ospa_c},   {"ospa_p", c.run.ospa_p}};
  if (c.run.learn_init) run["learn_init"] = std::vector<double>(c.run.learn_init->begin(), c.run.learn_init->end());
  return {{"model", model_to_json(c.model)},
          {"priors",
           {{"rate_alpha0", c.priors.rate_alpha0},
            {"rate_beta0", c.priors.rate_beta0},
            {"var_alpha0", c.priors.var_alpha0},
            {"var_beta0", c.priors.var_beta0},
            {"n0", c.priors.n0},
            {"mu0", c.priors.mu0},
            {"tied_birth", c.priors.tied_birth}}},
          {"moves",
           {{"p_m", c.moves.p_m},
            {"gate_radius", c.moves.gate_radius},
            {"tau", c.moves.tau},
            {"move_probs", std::vector<double>(c.moves.move_probs.begin(), c.moves.move_probs.end())},
            {"ut_scale", c.moves.ut_scale}}},
          {"smc", {{"particles", c.smc.particles}, {"proposal", proposal_name(c.smc.proposal)}}},
          {"run", run}};
}

Config load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const json::exception& e) {
    throw ValidationError("cannot parse config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const Config& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json header_json(const OutputHeader& h) {
  return {{"config_hash", h.config_hash}, {"seed", h.seed}, {"version", h.version}};
}

std::string header_comment(const OutputHeader& h) {
  std::ostringstream os;
  os << "# config_hash: " << h.config_hash << "\n# seed: " << h.seed << "\n# version: " << h.version << "\n";
  return os.str();
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_scene_csv(const std::filesystem::path& path, const Scene& scene, const OutputHeader& h) {
  auto out = open_out(path);
  out << header_comment(h) << "# scans: " << scene.n() << "\n";
  out << "t,obs_id,y1,y2\n";
  for (int t = 1; t <= scene.n(); ++t)
    for (int i = 1; i <= scene.k_y(t); ++i) out << t << ',' << i << ',' << scene.y(t, i)(0) << ',' << scene.y(t, i)(1) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Scene read_scene_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  Scene s;
  int scans = -1;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("scans:");
      if (pos != std::string::npos) scans = std::stoi(line.substr(pos + 6));
      continue;
    }
    if (!header) {
      if (line != "t,obs_id,y1,y2") throw ValidationError("scene CSV header must be 't,obs_id,y1,y2'");
      header = true;
      continue;
    }
    std::istringstream ls(line);
    int t = 0, i = 0;
    double a = 0, b = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ls >> t >> c1 >> i >> c2 >> a >> c3 >> b) || c1 != ',' || c2 != ',' || c3 != ',')
      throw ValidationError("malformed scene row at line " + std::to_string(lineno));
    if (t < 1) throw ValidationError("scan index must be >= 1 at line " + std::to_string(lineno));
    if (static_cast<int>(s.obs.size()) < t) s.obs.resize(static_cast<std::size_t>(t));
    auto& scan = s.obs[static_cast<std::size_t>(t - 1)];
    if (i != static_cast<int>(scan.size()) + 1)
      throw ValidationError("observation ids must be consecutive from 1 at line " + std::to_string(lineno));
    scan.emplace_back(a, b);
  }
  if (!header) throw ValidationError("scene CSV has no header row");
  if (scans >= 0) {
    if (scans < static_cast<int>(s.obs.size())) throw ValidationError("scene rows exceed the declared scan count");
    s.obs.resize(static_cast<std::size_t>(scans));
  }
  if (s.obs.empty()) throw ValidationError("scene has no scans");
  return s;
}

json tracks_to_json(std::span<const Track> tracks, const Scene& scene) {
  json arr = json::array();
  for (const Track& t : tracks) {
    json states = json::array();
    for (const State& x : t.states) states.push_back({x(0), x(1), x(2), x(3)});
    arr.push_back({{"t_b", t.t_b}, {"t_d", t.t_d}, {"y_idx", t.y_idx}, {"states", states}});
  }
  json clutter = json::array();
  for (const auto& [t, i] : clutter_list(tracks, scene)) clutter.push_back({t, i});
  return {{"tracks", arr}, {"clutter", clutter}};
}

std::vector<Track> tracks_from_json(const json& j) {
  std::vector<Track> out;
  try {
    for (const json& e : j.at("tracks")) {
      Track t;
      t.t_b = e.at("t_b").get<int>();
      t.t_d = e.at("t_d").get<int>();
      t.y_idx = e.at("y_idx").get<std::vector<int>>();
      if (e.contains("states"))
        for (const json& x : e.at("states")) {
          const auto v = x.get<std::vector<double>>();
          if (v.size() != 4) throw ValidationError("state vectors must have 4 entries");
          t.states.emplace_back(v[0], v[1], v[2], v[3]);
        }
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed track JSON: ") + e.what());
  }
  return out;
}

void write_truth_json(const std::filesystem::path& path, std::span<const Track> tracks, const Scene& scene,
                      const OutputHeader& h) {
  json j = tracks_to_json(tracks, scene);
  j["meta"] = header_json(h);
  write_json(path, j);
}

std::vector<Track> read_truth_json(const std::filesystem::path& path) { return tracks_from_json(read_json(path)); }

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return json::parse(in);
}

}  // namespace mtt
