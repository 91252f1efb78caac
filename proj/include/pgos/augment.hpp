#pragma once

#include "pgos/graph.hpp"
#include "pgos/rng.hpp"

namespace pgos {

/// Stochastic view generation for contrastive training: independent edge
/// dropping and feature masking.
struct AugmentationConfig {
  double edge_drop_p = 0.2;
  double feat_mask_p = 0.2;
};

void validate_augmentation(const AugmentationConfig& cfg);

/// Never adds edges, never changes the node count; symmetry and the zero
/// diagonal are preserved by deciding each undirected edge once.
Graph augment(const Graph& g, const AugmentationConfig& cfg, RngStream& rng);

}  // namespace pgos
