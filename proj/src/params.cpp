#include "mtt/params.hpp"

#include <cmath>
#include <numbers>

namespace mtt {

std::string_view to_string(ObservationKind kind) {
  switch (kind) {
    case ObservationKind::linear: return "linear";
    case ObservationKind::bearing_range: return "bearing_range";
  }
  return "unknown";
}

ObservationKind observation_kind_from_string(std::string_view name) {
  if (name == "linear") return ObservationKind::linear;
  if (name == "bearing_range") return ObservationKind::bearing_range;
  throw ValidationError("unknown observation model '" + std::string(name) + "'");
}

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ValidationError(std::string(name) + " must be finite and > 0");
}

}  // namespace

void HmmParams::validate() const {
  require_positive(sigma_x2, "sigma_x2");
  require_positive(sigma_y2, "sigma_y2");
  require_positive(sigma_r2, "sigma_r2");
  require_positive(sigma_b2, "sigma_b2");
  require_positive(sigma_bpx2, "sigma_bpx2");
  require_positive(sigma_bpy2, "sigma_bpy2");
  require_positive(sigma_bvx2, "sigma_bvx2");
  require_positive(sigma_bvy2, "sigma_bvy2");
  require_positive(delta, "delta");
  if (!std::isfinite(mu_bx) || !std::isfinite(mu_by))
    throw ValidationError("birth mean must be finite");
}

bool ObservationWindow::contains(const Obs& y) const {
  return (y.array() >= lo.array()).all() && (y.array() <= hi.array()).all();
}

void ModelParams::validate() const {
  hmm.validate();
  if (!(p_s >= 0.0 && p_s <= 1.0)) throw ValidationError("p_s must lie in [0, 1]");
  if (!(p_d >= 0.0 && p_d <= 1.0)) throw ValidationError("p_d must lie in [0, 1]");
  if (!(lambda_b >= 0.0) || !std::isfinite(lambda_b))
    throw ValidationError("lambda_b must be finite and >= 0");
  if (!(lambda_f >= 0.0) || !std::isfinite(lambda_f))
    throw ValidationError("lambda_f must be finite and >= 0");
  if (!(obs_volume() > 0.0) || !std::isfinite(obs_volume()))
    throw ValidationError("observation window must have positive finite volume");
}

std::array<double, kNumReportedParams> reported_params(const ModelParams& p) {
  return {p.p_s,          p.p_d,          p.lambda_b,     p.lambda_f,
          p.hmm.mu_bx,    p.hmm.mu_by,    p.hmm.sigma_bpx2, p.hmm.sigma_bvx2,
          p.hmm.sigma_x2, p.hmm.sigma_y2, p.hmm.sigma_r2, p.hmm.sigma_b2};
}

const std::array<std::string_view, kNumReportedParams>& reported_param_names() {
  static const std::array<std::string_view, kNumReportedParams> names = {
      "p_s",       "p_d",       "lambda_b", "lambda_f", "mu_bx",    "mu_by",
      "sigma_bp2", "sigma_bv2", "sigma_x2", "sigma_y2", "sigma_r2", "sigma_b2"};
  return names;
}

ModelParams with_reported_params(const ModelParams& base,
                                 const std::array<double, kNumReportedParams>& v) {
  ModelParams p = base;
  p.p_s = v[0];
  p.p_d = v[1];
  p.lambda_b = v[2];
  p.lambda_f = v[3];
  p.hmm.mu_bx = v[4];
  p.hmm.mu_by = v[5];
  p.hmm.sigma_bpx2 = p.hmm.sigma_bpy2 = v[6];
  p.hmm.sigma_bvx2 = p.hmm.sigma_bvy2 = v[7];
  p.hmm.sigma_x2 = v[8];
  p.hmm.sigma_y2 = v[9];
  p.hmm.sigma_r2 = v[10];
  p.hmm.sigma_b2 = v[11];
  return p;
}

ModelParams linear_benchmark_params() {
  ModelParams p;
  p.p_s = 0.95;
  p.p_d = 0.9;
  p.lambda_b = 0.5;
  p.lambda_f = 3.0;
  p.hmm.mu_bx = 80.0;
  p.hmm.mu_by = 100.0;
  p.hmm.sigma_bpx2 = p.hmm.sigma_bpy2 = 49.0;
  p.hmm.sigma_bvx2 = p.hmm.sigma_bvy2 = 9.0;
  p.hmm.sigma_x2 = 0.7 * 0.7;
  p.hmm.sigma_y2 = 1.5 * 1.5;
  p.hmm.sigma_r2 = 4.0;
  p.hmm.sigma_b2 = 4.0;
  p.observation = ObservationKind::linear;
  p.window.lo = Obs(-50.0, -50.0);
  p.window.hi = Obs(250.0, 250.0);
  return p;
}

ModelParams bearing_range_benchmark_params() {
  ModelParams p;
  p.p_s = 0.95;
  p.p_d = 0.9;
  p.lambda_b = 0.4;
  p.lambda_f = 3.0;
  p.hmm.mu_bx = 80.0;
  p.hmm.mu_by = 100.0;
  p.hmm.sigma_bpx2 = p.hmm.sigma_bpy2 = 64.0;
  p.hmm.sigma_bvx2 = p.hmm.sigma_bvy2 = 9.0;
  p.hmm.sigma_x2 = 0.3;
  p.hmm.sigma_y2 = 0.7;
  p.hmm.sigma_r2 = 2.0;
  p.hmm.sigma_b2 = 2.5e-3;
  p.observation = ObservationKind::bearing_range;
  // Range/bearing rectangle enclosing the Cartesian window [-20, 310] x [-50, 210]
  // around a sensor at the origin.
  p.window.lo = Obs(0.0, -std::numbers::pi);
  p.window.hi = Obs(std::hypot(310.0, 210.0), std::numbers::pi);
  return p;
}

}  // namespace mtt
