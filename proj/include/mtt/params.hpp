#pragma once

#include "mtt/types.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace mtt {

enum class ObservationKind {
  linear,         // y = (S_x, S_y) + noise, noise variances (sigma_r2, sigma_b2) per axis
  bearing_range,  // y = (range, bearing) of (S_x, S_y) seen from the origin, plus noise
};

std::string_view to_string(ObservationKind kind);
ObservationKind observation_kind_from_string(std::string_view name);

/// Parameters of the single-target HMM: nearly constant velocity dynamics,
/// Gaussian birth density and the sensor noise.
struct HmmParams {
  double sigma_x2 = 0.49;   // process noise intensity, x axis
  double sigma_y2 = 2.25;   // process noise intensity, y axis
  double sigma_r2 = 4.0;    // range (or x) observation noise variance
  double sigma_b2 = 4.0;    // bearing (or y) observation noise variance
  double mu_bx = 80.0;
  double mu_by = 100.0;
  double sigma_bpx2 = 49.0;
  double sigma_bpy2 = 49.0;
  double sigma_bvx2 = 9.0;
  double sigma_bvy2 = 9.0;
  double delta = 1.0;       // sampling interval

  void validate() const;
};

/// Axis-aligned observation window. Clutter is uniform over it.
struct ObservationWindow {
  Obs lo = Obs(-50.0, -50.0);
  Obs hi = Obs(250.0, 250.0);

  double volume() const { return (hi - lo).prod(); }
  bool contains(const Obs& y) const;
};

/// Full MTT parameter vector: HMM parameters plus the association parameters.
struct ModelParams {
  HmmParams hmm;
  double p_s = 0.95;
  double p_d = 0.9;
  double lambda_b = 0.5;
  double lambda_f = 3.0;
  ObservationKind observation = ObservationKind::linear;
  ObservationWindow window;

  double obs_volume() const { return window.volume(); }
  void validate() const;
};

/// The 12 learned components in reporting order
/// (p_s, p_d, lambda_b, lambda_f, mu_bx, mu_by, sigma_bp2, sigma_bv2,
///  sigma_x2, sigma_y2, sigma_r2, sigma_b2). Birth variances are reported
/// as the x-axis values (tied models keep both axes equal).
inline constexpr int kNumReportedParams = 12;
std::array<double, kNumReportedParams> reported_params(const ModelParams& p);
const std::array<std::string_view, kNumReportedParams>& reported_param_names();
/// Inverse of reported_params for tied birth variances; keeps kind/window/delta.
ModelParams with_reported_params(const ModelParams& base,
                                 const std::array<double, kNumReportedParams>& v);

/// Setting of the linear-Gaussian benchmark scene.
ModelParams linear_benchmark_params();
/// Setting of the bearing-range benchmark scene.
ModelParams bearing_range_benchmark_params();

}  // namespace mtt
