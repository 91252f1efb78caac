#include "pgos/augment.hpp"

namespace pgos {

void validate_augmentation(const AugmentationConfig& cfg) {
  if (cfg.edge_drop_p < 0.0 || cfg.edge_drop_p > 1.0)
    throw ValidationError("augmentation: edge_drop_p outside [0,1]");
  if (cfg.feat_mask_p < 0.0 || cfg.feat_mask_p > 1.0)
    throw ValidationError("augmentation: feat_mask_p outside [0,1]");
}

Graph augment(const Graph& g, const AugmentationConfig& cfg, RngStream& rng) {
  Graph out = g;
  const int n = g.num_nodes();
  if (cfg.edge_drop_p > 0.0) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (out.adjacency(i, j) != 0.0 && rng.bernoulli(cfg.edge_drop_p)) {
          out.adjacency(i, j) = 0.0;
          out.adjacency(j, i) = 0.0;
        }
  }
  if (cfg.feat_mask_p > 0.0) {
    for (int i = 0; i < out.features.rows(); ++i)
      for (int j = 0; j < out.features.cols(); ++j)
        if (rng.bernoulli(cfg.feat_mask_p)) out.features(i, j) = 0.0;
  }
  return out;
}

}  // namespace pgos
