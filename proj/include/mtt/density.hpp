#pragma once

#include "mtt/params.hpp"
#include "mtt/scene.hpp"
#include "mtt/target_model.hpp"

#include <span>
#include <vector>

namespace mtt {

struct LogDensityTerms {
  double log_pz = 0.0;
  double log_px_given_z = 0.0;
  double log_py_given_xz = 0.0;

  double total() const { return log_pz + log_px_given_z + log_py_given_xz; }
};

/// Per-scan counts of an association, 1-based (index 0 holds k_x[0] = 0).
struct ScanCounts {
  std::vector<int> k_x, k_s, k_b, k_d, k_f, k_y;
};

ScanCounts count_scans(std::span<const Track> tracks, const Scene& scene);
ScanCounts count_scans(const Association& z);

double log_poisson(int k, double lambda);

/// log p(z) from the counts, including the k_f!/k_y! permutation term.
double log_association_prior(const ModelParams& params, const ScanCounts& c);

/// log mu(x_1) + sum log f + sum over detections log g for one target.
double track_log_hmm(const TargetModel& model, const Track& track, const Scene& scene);

/// log p(z, x, y) of a set of tracks (ordering rule A holds by construction).
LogDensityTerms tracks_log_density(const ModelParams& params, const TargetModel& model,
                                   std::span<const Track> tracks, const Scene& scene);

/// log p(z, x, y) in the flat representation. States must satisfy ordering rule A
/// among new-borns, otherwise log_px_given_z = -inf.
LogDensityTerms log_joint_density(const ModelParams& params, const Association& z,
                                  const Scene& scene, const ScanStates& states);

}  // namespace mtt
