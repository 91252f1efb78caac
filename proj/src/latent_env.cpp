#include "pgos/latent_env.hpp"

#include <cmath>

#include <json.hpp>

namespace pgos {

using nlohmann::json;

void validate_env_config(const EnvConfig& cfg) {
  if (cfg.delta_multiplier <= 0.0)
    throw ValidationError("env: delta_multiplier must be > 0");
  if (cfg.max_steps < 1) throw ValidationError("env: max_steps must be >= 1");
  if (cfg.action_scale <= 0.0)
    throw ValidationError("env: action_scale must be > 0");
  if (cfg.h_max <= 0.0) throw ValidationError("env: h_max must be > 0");
}

std::pair<ClusterStats, GlobalBoundary> compute_cluster_stats(
    const Matrix& embeddings, const PrototypeSet& protos) {
  if (embeddings.rows() == 0)
    throw ValidationError("compute_cluster_stats: no embeddings");

  const Eigen::Index n = embeddings.rows();
  std::vector<int> assign(n);
  for (Eigen::Index i = 0; i < n; ++i)
    assign[i] = nearest_prototype(embeddings.row(i), protos);

  ClusterStats stats;
  for (int k = 0; k < protos.count(); ++k) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i)
      if (assign[i] == k) members.push_back(i);
    if (members.empty()) {
      log_warn("cluster " + std::to_string(k) +
               " has no members and is dropped from stats");
      continue;
    }
    Cluster c;
    c.prototype = k;
    c.count = static_cast<int>(members.size());
    c.centroid = RowVector::Zero(embeddings.cols());
    for (Eigen::Index i : members) c.centroid += embeddings.row(i);
    c.centroid /= static_cast<double>(members.size());
    for (Eigen::Index i : members)
      c.radius = std::max(c.radius, (embeddings.row(i) - c.centroid).norm());
    stats.clusters.push_back(std::move(c));
  }

  GlobalBoundary boundary;
  boundary.mu_g = embeddings.colwise().mean();
  for (Eigen::Index i = 0; i < n; ++i)
    boundary.r_max =
        std::max(boundary.r_max, (embeddings.row(i) - boundary.mu_g).norm());
  if (boundary.r_max <= 0.0)
    throw ValidationError(
        "compute_cluster_stats: degenerate boundary (R_max = 0)");

  for (const Cluster& c : stats.clusters) stats.r_bar += c.radius;
  stats.r_bar /= static_cast<double>(stats.clusters.size());
  stats.r_bar_eff = stats.r_bar;
  if (stats.r_bar_eff <= 0.0) {
    stats.r_bar_eff = boundary.r_max / 10.0;
    log_warn("all cluster radii are zero; falling back to r_bar = R_max/10");
  }
  return {std::move(stats), std::move(boundary)};
}

double cluster_delta(const Cluster& c, const ClusterStats& stats,
                     const EnvConfig& cfg) {
  double base = c.radius > 0.0 ? c.radius : stats.r_bar_eff;
  return cfg.delta_multiplier * base;
}

double reward(const RowVector& s, const ClusterStats& stats,
              const EnvConfig& cfg) {
  if (stats.clusters.empty())
    throw ValidationError("reward: empty cluster stats");
  double total = 0.0;
  for (const Cluster& c : stats.clusters) {
    double d = (s - c.centroid).norm();
    double delta = cluster_delta(c, stats, cfg);
    if (d < c.radius + delta) {
      double t = 1.0 - (d - c.radius) / delta;
      total -= t * t;
    }
  }
  return total;
}

RowVector project(const RowVector& s, const GlobalBoundary& boundary) {
  RowVector diff = s - boundary.mu_g;
  double dist = diff.norm();
  // the relative slack keeps re-projection an exact fixed point despite
  // rounding in the rescale
  if (dist <= boundary.r_max * (1.0 + 1e-12)) return s;
  return boundary.mu_g + boundary.r_max * diff / dist;
}

double target_entropy(const RowVector& s, const ClusterStats& stats,
                      const EnvConfig& cfg) {
  if (stats.clusters.empty())
    throw ValidationError("target_entropy: empty cluster stats");
  double d_min = std::numeric_limits<double>::infinity();
  for (const Cluster& c : stats.clusters)
    d_min = std::min(d_min, (s - c.centroid).norm());
  double rb = stats.r_bar_eff;
  double t = (d_min - rb) / rb;
  return cfg.h_max * std::exp(-0.5 * t * t);
}

EnvState reset(const PrototypeSet& protos, const GlobalBoundary& boundary,
               RngStream& rng) {
  const int k = protos.count();
  if (k < 2) throw ValidationError("reset: need at least 2 prototypes");
  int a = rng.uniform_int(0, k - 1);
  int b = rng.uniform_int(0, k - 2);
  if (b >= a) ++b;
  EnvState st;
  st.position = project(0.5 * (protos.c.row(a) + protos.c.row(b)), boundary);
  st.step_count = 0;
  return st;
}

StepResult step(const EnvState& state, const RowVector& action,
                const ClusterStats& stats, const GlobalBoundary& boundary,
                const EnvConfig& cfg) {
  if (!action.allFinite()) throw NumericError("step: non-finite action");
  RowVector a = action;
  double norm = a.norm();
  if (norm > cfg.action_scale) a *= cfg.action_scale / norm;
  StepResult out;
  out.state.position = project(state.position + a, boundary);
  out.state.step_count = state.step_count + 1;
  out.reward = reward(out.state.position, stats, cfg);
  out.done = out.state.step_count >= cfg.max_steps;
  return out;
}

std::string stats_to_json(const ClusterStats& stats,
                          const GlobalBoundary& boundary,
                          const std::string& config_hash) {
  json out;
  out["format_version"] = 1;
  out["config_hash"] = config_hash;
  json clusters = json::array();
  for (const Cluster& c : stats.clusters) {
    json jc;
    jc["index"] = c.prototype;
    jc["centroid"] = std::vector<double>(c.centroid.data(),
                                         c.centroid.data() + c.centroid.size());
    jc["radius"] = c.radius;
    jc["count"] = c.count;
    clusters.push_back(jc);
  }
  out["clusters"] = clusters;
  out["mu_g"] = std::vector<double>(boundary.mu_g.data(),
                                    boundary.mu_g.data() + boundary.mu_g.size());
  out["r_max"] = boundary.r_max;
  out["r_bar"] = stats.r_bar;
  out["r_bar_eff"] = stats.r_bar_eff;
  return out.dump(2);
}

void stats_from_json(const std::string& text, ClusterStats& stats,
                     GlobalBoundary& boundary, std::string* config_hash) {
  json in;
  try {
    in = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("stats json: ") + e.what());
  }
  if (in.at("format_version").get<int>() != 1)
    throw ValidationError("stats json: unsupported format_version");
  if (config_hash) *config_hash = in.at("config_hash").get<std::string>();
  stats.clusters.clear();
  for (const auto& jc : in.at("clusters")) {
    Cluster c;
    c.prototype = jc.at("index").get<int>();
    std::vector<double> cen = jc.at("centroid").get<std::vector<double>>();
    c.centroid = Eigen::Map<RowVector>(cen.data(), cen.size());
    c.radius = jc.at("radius").get<double>();
    c.count = jc.at("count").get<int>();
    stats.clusters.push_back(std::move(c));
  }
  std::vector<double> mu = in.at("mu_g").get<std::vector<double>>();
  boundary.mu_g = Eigen::Map<RowVector>(mu.data(), mu.size());
  boundary.r_max = in.at("r_max").get<double>();
  stats.r_bar = in.at("r_bar").get<double>();
  stats.r_bar_eff = in.at("r_bar_eff").get<double>();
}

}  // namespace pgos
