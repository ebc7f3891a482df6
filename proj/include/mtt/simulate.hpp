#pragma once

#include "mtt/params.hpp"
#include "mtt/scene.hpp"

#include <cstdint>

namespace mtt {

struct Simulation {
  Association assoc;
  Scene scene;  // carries the truth states and association
};

/// Draws (z, x, y) from the MTT law with n scans.
Simulation simulate(const ModelParams& params, int n, std::uint64_t seed);

}  // namespace mtt
