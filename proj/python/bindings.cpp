#include "mtt/density.hpp"
#include "mtt/gaussian.hpp"
#include "mtt/runner.hpp"
#include "mtt/simulate.hpp"
#include "mtt/smc.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mtt;

namespace {

Scene scene_from(const std::vector<Eigen::MatrixXd>& scans) {
  Scene s;
  for (const auto& m : scans) {
    if (m.size() > 0 && m.cols() != 2) throw ValidationError("each scan must be a (k, 2) array");
    std::vector<Obs> v;
    for (Eigen::Index i = 0; i < m.rows(); ++i) v.emplace_back(m(i, 0), m(i, 1));
    s.obs.push_back(std::move(v));
  }
  return s;
}

std::vector<Eigen::MatrixXd> scans_of(const Scene& s) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& scan : s.obs) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(scan.size()), 2);
    for (std::size_t i = 0; i < scan.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = scan[i].transpose();
    out.push_back(m);
  }
  return out;
}

py::dict run_dict(const ChainRun& r) {
  std::vector<double> ld;
  std::vector<std::array<long, kNumMoves>> proposed, accepted;
  std::vector<std::array<double, kNumReportedParams>> theta;
  for (const auto& e : r.trace) {
    ld.push_back(e.log_density);
    proposed.push_back(e.stats.proposed);
    accepted.push_back(e.stats.accepted);
    if (e.theta) theta.push_back(*e.theta);
  }
  std::vector<std::vector<Track>> samples;
  for (const auto& s : r.samples) samples.push_back(s.tracks);
  py::dict d;
  d["log_density"] = ld;
  d["proposed"] = proposed;
  d["accepted"] = accepted;
  d["map_tracks"] = r.map.tracks;
  d["map_log_density"] = r.map.log_density;
  d["samples"] = samples;
  if (!theta.empty()) d["theta"] = theta;
  return d;
}

Config config_from_str(const std::string& s) { return config_from_json(nlohmann::json::parse(s)); }

}  // namespace

PYBIND11_MODULE(_mtt, m) {
  m.doc() = "MCMC data association for multiple target tracking";
  m.attr("__version__") = kVersion;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::enum_<ObservationKind>(m, "ObservationKind")
      .value("linear", ObservationKind::linear)
      .value("bearing_range", ObservationKind::bearing_range);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("p_s", &ModelParams::p_s)
      .def_readwrite("p_d", &ModelParams::p_d)
      .def_readwrite("lambda_b", &ModelParams::lambda_b)
      .def_readwrite("lambda_f", &ModelParams::lambda_f)
      .def_readwrite("observation", &ModelParams::observation)
      .def_property(
          "theta", [](const ModelParams& p) { return reported_params(p); },
          [](ModelParams& p, const std::array<double, kNumReportedParams>& v) { p = with_reported_params(p, v); })
      .def_property_readonly("obs_volume", &ModelParams::obs_volume)
      .def("validate", &ModelParams::validate);
  m.def("theta_names", [] {
    std::vector<std::string> out;
    for (auto n : reported_param_names()) out.emplace_back(n);
    return out;
  });
  m.def("linear_benchmark_params", &linear_benchmark_params);
  m.def("bearing_range_benchmark_params", &bearing_range_benchmark_params);

  py::class_<Track>(m, "Track")
      .def(py::init<>())
      .def_readwrite("t_b", &Track::t_b)
      .def_readwrite("t_d", &Track::t_d)
      .def_readwrite("y_idx", &Track::y_idx)
      .def_readwrite("states", &Track::states)
      .def("__repr__", [](const Track& t) {
        return "Track(t_b=" + std::to_string(t.t_b) + ", t_d=" + std::to_string(t.t_d) + ")";
      });

  m.def(
      "simulate",
      [](const ModelParams& p, int n, std::uint64_t seed) {
        const Simulation sim = simulate(p, n, seed);
        return py::make_tuple(scans_of(sim.scene), decompose(sim.assoc, sim.scene, &*sim.scene.states).tracks);
      },
      py::arg("params"), py::arg("n"), py::arg("seed"),
      "Simulate n scans. Returns (scans, truth_tracks); scans[t-1] is a (k, 2) array.");

  m.def(
      "log_density",
      [](const ModelParams& p, const std::vector<Track>& tracks, const std::vector<Eigen::MatrixXd>& scans) {
        const Scene s = scene_from(scans);
        validate_tracks(tracks, s, true);
        const auto t = tracks_log_density(p, TargetModel(p), tracks, s);
        return py::make_tuple(t.total(), t.log_pz, t.log_px_given_z, t.log_py_given_xz);
      },
      py::arg("params"), py::arg("tracks"), py::arg("scans"),
      "log p(z, x, y) and its three terms.");

  m.def(
      "kalman_log_marginal",
      [](const ModelParams& p, const std::vector<std::optional<Eigen::Vector2d>>& obs) {
        const TargetModel model(p);
        LinearObsModel lin;
        lin.Sigma_v = model.obs_cov();
        std::vector<std::optional<Obs>> o(obs.begin(), obs.end());
        return kalman_log_marginal(model, lin, o);
      },
      py::arg("params"), py::arg("obs"));

  m.def(
      "pf_log_likelihood",
      [](const ModelParams& p, const std::vector<std::optional<Eigen::Vector2d>>& obs, int n, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<std::optional<Obs>> o(obs.begin(), obs.end());
        return particle_filter(TargetModel(p), o, n, SmcProposal::bootstrap, rng).log_lik;
      },
      py::arg("params"), py::arg("obs"), py::arg("particles"), py::arg("seed"));

  m.def(
      "ospa",
      [](const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b, double c, double p) {
        const auto r = ospa(a, b, c, p);
        return py::make_tuple(r.total, r.localisation, r.cardinality);
      },
      py::arg("a"), py::arg("b"), py::arg("c") = 10.0, py::arg("p") = 1.0);

  m.def("_config_hash", [](const std::string& cfg) { return config_hash(config_from_str(cfg)); });
  m.def("_config_resolved", [](const std::string& cfg) { return config_to_json(config_from_str(cfg)).dump(); });

  m.def(
      "_run",
      [](const std::vector<Eigen::MatrixXd>& scans, const std::string& cfg, std::uint64_t seed, bool learn) {
        const Scene s = scene_from(scans);
        const Config c = config_from_str(cfg);
        ChainRun r;
        {
          py::gil_scoped_release release;
          r = learn ? run_learn_chain(s, c, seed) : run_track_chain(s, c, seed);
        }
        return run_dict(r);
      },
      py::arg("scans"), py::arg("config"), py::arg("seed"), py::arg("learn"));
}
