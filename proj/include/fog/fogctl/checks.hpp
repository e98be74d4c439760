#pragma once

#include <cstdint>

#include "fog/gnnlayers.hpp"
#include "fog/tensorcore.hpp"

namespace fog::cli {

/// Connected Erdos-Renyi graph: isolated nodes get one random neighbor.
Graph random_graph(std::size_t n, double p, Rng& rng);

/// Small dims with distinct extents so every matrix is exercised.
LayerDims gradcheck_dims(Family f);

/// Finite-difference check of one layer (64-bit) on a random graph of 6..10
/// nodes. The loss is a random projection of the layer outputs; node and edge
/// inputs are checked alongside the weights.
GradCheckReport gradcheck_layer(Family f, std::uint64_t seed, double h = 1e-5);

}  // namespace fog::cli
