#include "pgos/synthesis.hpp"

#include <cmath>

namespace pgos {

void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.edge_threshold <= 0.0 || cfg.edge_threshold >= 1.0)
    throw ValidationError("synth: edge_threshold must lie in (0,1)");
  if (cfg.eps_keep < 0.0) throw ValidationError("synth: eps_keep must be >= 0");
  if (cfg.burn_in_fraction < 0.0 || cfg.burn_in_fraction >= 1.0)
    throw ValidationError("synth: burn_in_fraction must lie in [0,1)");
  if (cfg.sigma_factor < 0.0)
    throw ValidationError("synth: sigma_factor must be >= 0");
}

GraphDataset synthesize_graphs(const Matrix& latents, const DecoderParams& dec,
                               const std::vector<int>& id_node_histogram,
                               const SynthConfig& cfg, std::uint64_t seed) {
  validate_synth_config(cfg);
  if (latents.rows() == 0)
    throw ValidationError("synthesize_graphs: no latents");
  if (id_node_histogram.empty())
    throw ValidationError("synthesize_graphs: empty node-count histogram");

  RngStream root(seed);
  GraphDataset out;
  out.name = "pseudo_ood";
  for (Eigen::Index i = 0; i < latents.rows(); ++i) {
    RngStream g_rng = root.derive("synth", static_cast<std::uint64_t>(i));
    int n = id_node_histogram[static_cast<std::size_t>(
        g_rng.uniform_u64(0, id_node_histogram.size() - 1))];
    std::uint64_t noise_seed = g_rng.derive("noise").seed();
    DecodeResult dr = decode(latents.row(i), n, dec, noise_seed);
    Graph g;
    g.adjacency = Matrix::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (dr.adj_probs(a, b) >= cfg.edge_threshold) {
          g.adjacency(a, b) = 1.0;
          g.adjacency(b, a) = 1.0;
        }
    g.features = dr.features;
    out.graphs.push_back(std::move(g));
    out.labels.push_back(GraphLabel::OOD);
  }
  validate_dataset(out, false);
  return out;
}

Matrix gaussian_midpoint_sampler(const PrototypeSet& protos,
                                 const GlobalBoundary& boundary, int count,
                                 double sigma, std::uint64_t seed) {
  if (protos.count() < 2)
    throw ValidationError("gaussian_midpoint_sampler: need >= 2 prototypes");
  if (count < 1)
    throw ValidationError("gaussian_midpoint_sampler: count must be >= 1");
  RngStream rng(seed);
  const int k = protos.count();
  Matrix out(count, protos.dim());
  for (int i = 0; i < count; ++i) {
    int a = rng.uniform_int(0, k - 1);
    int b = rng.uniform_int(0, k - 2);
    if (b >= a) ++b;
    RowVector s = 0.5 * (protos.c.row(a) + protos.c.row(b));
    for (int d = 0; d < protos.dim(); ++d) s(d) += sigma * rng.normal();
    out.row(i) = project(s, boundary);
  }
  return out;
}

Matrix uniform_boundary_sampler(const GlobalBoundary& boundary, int count,
                                std::uint64_t seed) {
  if (count < 1)
    throw ValidationError("uniform_boundary_sampler: count must be >= 1");
  RngStream rng(seed);
  const Eigen::Index dim = boundary.mu_g.size();
  Matrix out(count, dim);
  for (int i = 0; i < count; ++i) {
    RowVector dir(dim);
    double norm = 0.0;
    do {
      for (Eigen::Index d = 0; d < dim; ++d) dir(d) = rng.normal();
      norm = dir.norm();
    } while (norm < 1e-12);
    dir /= norm;
    // radius with density proportional to r^(D-1)
    double r = boundary.r_max *
               std::pow(rng.uniform01(), 1.0 / static_cast<double>(dim));
    out.row(i) = boundary.mu_g + r * dir;
  }
  return out;
}

}  // namespace pgos
