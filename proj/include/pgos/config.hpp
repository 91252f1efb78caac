#pragma once

#include <string>
#include <vector>

#include "pgos/detector.hpp"
#include "pgos/embedder.hpp"
#include "pgos/sac.hpp"
#include "pgos/synthesis.hpp"
#include "pgos/synthetic.hpp"

namespace pgos {

struct TuDatasetConfig {
  std::string id_dir;
  std::string ood_dir;
  double test_fraction = 0.33;  // ID graphs held out for testing
};

struct DatasetConfig {
  std::string kind = "synthetic";  // "synthetic" | "tu"
  SyntheticSpec synthetic;
  int train_per_family = 100;
  int test_per_family = 50;
  int test_ood_count = 100;
  TuDatasetConfig tu;
};

/// Env block; action_scale and h_max are resolved against the trained
/// latent space (action_scale = factor * R_max, h_max = latent dim when 0).
struct EnvBlock {
  double delta_multiplier = 0.5;
  int max_steps = 32;
  double action_scale_factor = 0.1;
  double h_max = 0.0;
};

/// Every knob of a pipeline run. Serialized as JSON with unknown keys
/// rejected; the config hash excludes the seed so a seed sweep shares one
/// run-directory prefix.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  DatasetConfig dataset;
  EmbedderConfig embedder;
  EnvBlock env;
  SacConfig sac;
  SynthConfig synth;
  int episode_cap_factor = 50;
  DetectorConfig detector;
  std::string sampler = "pgos";  // pgos | gaussian | uniform | none

  EnvConfig resolve_env(double r_max) const;
};

ExperimentConfig default_config();

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

/// Applies a dotted-path patch ("embedder.num_prototypes=8") on the JSON
/// form; the value is parsed as JSON when possible, else taken as a string.
std::string apply_override(const std::string& config_json,
                           const std::string& key_eq_value);

/// FNV-1a over the canonical JSON dump with the seed field removed;
/// 16 hex characters.
std::string config_hash(const ExperimentConfig& cfg);

void validate_config(const ExperimentConfig& cfg);

}  // namespace pgos
