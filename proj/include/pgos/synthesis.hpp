#pragma once

#include "pgos/embedder.hpp"
#include "pgos/latent_env.hpp"

namespace pgos {

struct SynthConfig {
  double edge_threshold = 0.5;  // in (0,1)
  double eps_keep = 0.05;       // shared with the latent collector
  double burn_in_fraction = 0.25;
  double sigma_factor = 0.1;  // gaussian baseline: sigma = factor * R_max
};

void validate_synth_config(const SynthConfig& cfg);

/// Decode each latent into a graph: node count drawn from the empirical ID
/// histogram, adjacency binarized at edge_threshold. Output size equals the
/// latent count; the dataset is tagged OOD.
GraphDataset synthesize_graphs(const Matrix& latents, const DecoderParams& dec,
                               const std::vector<int>& id_node_histogram,
                               const SynthConfig& cfg, std::uint64_t seed);

/// Fig.-4 style baseline: midpoint of two distinct prototypes plus isotropic
/// Gaussian noise, projected into the boundary.
Matrix gaussian_midpoint_sampler(const PrototypeSet& protos,
                                 const GlobalBoundary& boundary, int count,
                                 double sigma, std::uint64_t seed);

/// Non-adaptive ablation sampler: uniform over the R_max ball.
Matrix uniform_boundary_sampler(const GlobalBoundary& boundary, int count,
                                std::uint64_t seed);

}  // namespace pgos
