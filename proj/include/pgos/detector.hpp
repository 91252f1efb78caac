#pragma once

#include "pgos/embedder.hpp"

namespace pgos {

/// Distance-to-nearest-prototype scorer fine-tuned on ID graphs and
/// (optionally) synthesized pseudo-outliers. The encoder is warm-started
/// from the embedder; prototypes are frozen so the score geometry stays
/// anchored while the encoder moves.
struct DetectorParams {
  GcnParams encoder;
  PrototypeSet prototypes;
  double margin = 0.0;     // m: score calibration midpoint
  double scale = 1.0;      // s_cal > 0
  double beta = 0.5;

  std::vector<std::pair<std::string, Matrix*>> named_tensors();
};

struct DetectorConfig {
  double beta = 0.5;
  int epochs = 40;
  int batch_size = 32;
  double lr = 1e-4;
  double contrastive_weight = 0.1;
  AugmentationConfig augmentation;
};

/// h(G) = min_k || z_G - c_k ||; higher means more OOD.
double score(const Graph& g, const DetectorParams& det);
std::vector<double> score_all(const GraphDataset& ds, const DetectorParams& det);

/// -log sigmoid((h(G') - m) / s_cal): large when a pseudo-outlier scores
/// ID-like, vanishing as h grows.
double reg_loss(const Graph& g_ood, const DetectorParams& det);

struct DetectorEpochLog {
  int epoch = 0;
  double id_loss = 0.0;
  double reg_loss = 0.0;
  double total = 0.0;
  double margin = 0.0;
  double scale = 0.0;
};

struct TrainedDetector {
  DetectorParams params;
  std::vector<DetectorEpochLog> log;
};

/// Minimizes mean_ID[h] + w_con * (L_DC + L_PC) + beta * mean_OOD[L_reg].
/// (m, s_cal) are recalibrated each epoch to (mean + std, std) of the ID
/// scores. With beta == 0 the pseudo-outlier set is never consulted, so
/// results match training without it bit for bit.
TrainedDetector train_detector(const GraphDataset& id_set,
                               const GraphDataset& pseudo_ood_set,
                               const EmbedderModel& warm_start,
                               const DetectorConfig& cfg, std::uint64_t seed);

/// Mann-Whitney AUC with ties counted 0.5, computed by average ranks.
double evaluate_auc(const std::vector<double>& scores_id,
                    const std::vector<double>& scores_ood);

}  // namespace pgos
