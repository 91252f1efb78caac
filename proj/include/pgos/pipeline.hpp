#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pgos/checkpoint.hpp"
#include "pgos/config.hpp"

namespace pgos {

/// Artifact locations of one run: runs/<confighash>-<seed>/...
struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path config;
  std::filesystem::path train_data, test_id_data, test_ood_data;
  std::filesystem::path embedder_ckpt, stats, policy_ckpt, outliers,
      detector_ckpt, scores_csv, metrics;
  std::filesystem::path logs_dir;
};

RunPaths run_paths(const std::string& out_root, const ExperimentConfig& cfg);

// Pipeline stages. Each writes its artifacts into the run directory and
// refuses upstream artifacts whose recorded config hash mismatches.
void stage_gen_data(const ExperimentConfig& cfg, const RunPaths& paths);
void stage_train_embed(const ExperimentConfig& cfg, const RunPaths& paths);
void stage_train_policy(const ExperimentConfig& cfg, const RunPaths& paths);
void stage_synthesize(const ExperimentConfig& cfg, const RunPaths& paths);
void stage_train_detector(const ExperimentConfig& cfg, const RunPaths& paths);

struct Metrics {
  double auc = 0.0;
  int n_id = 0;
  int n_ood = 0;
};

Metrics stage_evaluate(const ExperimentConfig& cfg, const RunPaths& paths);

/// All stages in order; any stage failure is rethrown with the stage name.
Metrics run_pipeline(const ExperimentConfig& cfg, const std::string& out_root);

struct SuiteCell {
  std::string sampler;
  int k = 0;
  std::uint64_t seed = 0;
  double auc = 0.0;
};

struct SuiteResult {
  std::vector<SuiteCell> cells;
  std::filesystem::path summary_csv;
};

/// Cross product of seeds x samplers (x prototype counts when k_sweep is
/// non-empty); cells run independently, `jobs` at a time.
SuiteResult run_suite(const ExperimentConfig& base,
                      const std::vector<std::uint64_t>& seeds,
                      const std::vector<std::string>& samplers,
                      const std::vector<int>& k_sweep,
                      const std::string& out_root, int jobs = 1);

/// Top-2 principal components (deterministic sign convention). Optionally
/// returns the component directions and all eigenvalues.
Matrix pca_top2(const Matrix& points, Matrix* components = nullptr,
                Vector* eigenvalues = nullptr);

/// Writes projection.csv (x, y, label) for the run's training embeddings
/// (labelled by nearest prototype) and collected outlier latents
/// (labelled by sampler origin).
std::filesystem::path export_projection(const ExperimentConfig& cfg,
                                        const RunPaths& paths);

// Model <-> checkpoint bridges (shapes come from the config).
Checkpoint to_checkpoint(EmbedderModel& model, const std::string& hash,
                         std::uint64_t seed);
EmbedderModel embedder_from_checkpoint(const Checkpoint& ckpt,
                                       const ExperimentConfig& cfg);
Checkpoint to_checkpoint(SacAgent& agent, const std::string& hash,
                         std::uint64_t seed);
SacAgent agent_from_checkpoint(const Checkpoint& ckpt,
                               const ExperimentConfig& cfg);
Checkpoint to_checkpoint(DetectorParams& det, const std::string& hash,
                         std::uint64_t seed);
DetectorParams detector_from_checkpoint(const Checkpoint& ckpt,
                                        const ExperimentConfig& cfg);

std::string format_double(double v);  // shortest round-trip, CSV/JSON safe

}  // namespace pgos
