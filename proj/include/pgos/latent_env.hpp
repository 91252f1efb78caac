#pragma once

#include <vector>

#include "pgos/embedder.hpp"
#include "pgos/rng.hpp"
#include "pgos/types.hpp"

namespace pgos {

/// One in-distribution cluster: centroid, effective radius (max member
/// distance), member count. `prototype` is the prototype index that
/// defined the cluster.
struct Cluster {
  int prototype = 0;
  RowVector centroid;
  double radius = 0.0;
  int count = 0;
};

struct ClusterStats {
  std::vector<Cluster> clusters;
  double r_bar = 0.0;      // mean radius over kept clusters
  double r_bar_eff = 0.0;  // r_bar, or the R_max/10 fallback when r_bar == 0
};

struct GlobalBoundary {
  RowVector mu_g;
  double r_max = 0.0;
};

struct EnvConfig {
  double delta_multiplier = 0.5;
  int max_steps = 32;
  double action_scale = 0.0;  // max per-step displacement norm
  double h_max = 0.0;         // peak target entropy
};

void validate_env_config(const EnvConfig& cfg);

struct EnvState {
  RowVector position;
  int step_count = 0;
};

/// Clusters are the nearest-prototype assignment sets of the embeddings.
/// Empty clusters are dropped with a warning; a zero R_max is a degenerate
/// boundary and is rejected.
std::pair<ClusterStats, GlobalBoundary> compute_cluster_stats(
    const Matrix& embeddings, const PrototypeSet& protos);

/// Safety margin of a cluster; zero-radius clusters fall back to the mean
/// radius so the penalty region stays non-empty.
double cluster_delta(const Cluster& c, const ClusterStats& stats,
                     const EnvConfig& cfg);

/// Non-positive repulsion reward; zero iff the state is outside every
/// cluster's margin.
double reward(const RowVector& s, const ClusterStats& stats,
              const EnvConfig& cfg);

/// Projection onto the boundary ball; identity for interior points.
RowVector project(const RowVector& s, const GlobalBoundary& boundary);

/// H_max * exp(-(d_min - r_bar)^2 / (2 r_bar^2)), d_min the distance to the
/// nearest cluster centroid.
double target_entropy(const RowVector& s, const ClusterStats& stats,
                      const EnvConfig& cfg);

/// Start state: midpoint of two distinct uniformly drawn prototypes,
/// projected into the boundary.
EnvState reset(const PrototypeSet& protos, const GlobalBoundary& boundary,
               RngStream& rng);

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
};

/// s' = project(s + a) with the displacement norm clipped to action_scale;
/// reward is evaluated at s'; done only by the step limit.
StepResult step(const EnvState& state, const RowVector& action,
                const ClusterStats& stats, const GlobalBoundary& boundary,
                const EnvConfig& cfg);

std::string stats_to_json(const ClusterStats& stats,
                          const GlobalBoundary& boundary,
                          const std::string& config_hash);
void stats_from_json(const std::string& text, ClusterStats& stats,
                     GlobalBoundary& boundary, std::string* config_hash);

}  // namespace pgos
