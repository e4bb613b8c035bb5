#pragma once

#include "fes/types.hpp"

#include <random>

namespace fes {

using Rng = std::mt19937_64;

/// Uniform sample from a box; unbounded sides fall back to a unit interval
/// around the finite side (or the origin).
[[nodiscard]] Vec sample_box(const BoxSet& box, Rng& rng);

[[nodiscard]] Vec sample_normal(Eigen::Index n, Rng& rng, double scale = 1.0);

[[nodiscard]] double sample_uniform(Rng& rng, double lo, double hi);

}  // namespace fes
