#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pgos/augment.hpp"
#include "pgos/graph.hpp"
#include "pgos/nn.hpp"

namespace pgos {

/// Graph convolution stack: symmetric-normalized propagation with
/// self-loops, ReLU on hidden layers, linear output, mean pooling.
struct GcnParams {
  std::vector<Matrix> weights;  // layer l: d_l x d_{l+1}
  std::vector<Matrix> biases;   // 1 x d_{l+1}

  int input_dim() const { return static_cast<int>(weights.front().rows()); }
  int output_dim() const { return static_cast<int>(weights.back().cols()); }
};

/// Latent-to-graph decoder: a noise-expansion MLP produces per-node
/// embeddings from [graph latent ; per-node noise]; structure comes from an
/// inner product of those embeddings, features from a second MLP.
struct DecoderParams {
  nn::Mlp expansion;
  nn::Mlp feature_head;
  int noise_dim = 0;
};

struct PrototypeSet {
  Matrix c;            // K x D, rows unit-norm
  double tau = 0.2;

  int count() const { return static_cast<int>(c.rows()); }
  int dim() const { return static_cast<int>(c.cols()); }
};

struct EmbedderConfig {
  int latent_dim = 16;
  int hidden_dim = 32;
  int num_layers = 2;
  int num_prototypes = 4;
  double tau = 0.2;
  double lambda_struct = 0.5;  // adjacency BCE weight inside L_recon
  double gamma_recon = 2e-4;   // L_recon weight inside the total objective
  int epochs = 60;
  int batch_size = 32;
  double lr = 2e-3;
  int noise_dim = 16;
  int decoder_hidden = 32;
  AugmentationConfig augmentation;
};

struct EmbedderModel {
  GcnParams encoder;
  DecoderParams decoder;
  PrototypeSet prototypes;
  EmbedderConfig config;

  std::vector<Matrix*> trainable_params();
  std::vector<std::pair<std::string, Matrix*>> named_tensors();
};

EmbedderModel make_embedder(int feature_dim, const EmbedderConfig& cfg,
                            RngStream& rng);

/// S = D^{-1/2} (A + I) D^{-1/2}
Matrix normalized_propagation(const Matrix& adjacency);

/// Unit-normalize with the zero-norm guard (fixed epsilon vector added to
/// rows with norm below 1e-12).
RowVector normalize_embedding(const RowVector& v);

struct EncodeResult {
  Matrix node_embeddings;     // n x D
  RowVector graph_embedding;  // 1 x D, unit norm
};

EncodeResult encode(const Graph& g, const GcnParams& enc);

/// Row i = embedding of graph i.
Matrix embed_dataset(const GraphDataset& ds, const GcnParams& enc);

/// softmax over z . c_k / tau; strictly positive, sums to 1.
Vector assignment_probs(const RowVector& z, const PrototypeSet& protos);

/// argmax of z . c_k, ties broken by lowest index.
int nearest_prototype(const RowVector& z, const PrototypeSet& protos);
std::vector<int> assign_all(const Matrix& embeddings, const PrototypeSet& protos);

struct DecodeResult {
  Matrix adj_probs;  // n x n, symmetric, zero diagonal
  Matrix features;   // n x d
};

DecodeResult decode(const RowVector& graph_latent, int n,
                    const DecoderParams& dec, std::uint64_t seed);

// --- losses (scalar views over the tape builders; the tape forms live in
// embedder.cpp and are shared with training and the gradient checks) ---
double loss_dc(const Matrix& z_view1, const Matrix& z_view2,
               const PrototypeSet& protos);
double loss_pc(const Matrix& z_view1, const Matrix& z_view2,
               const PrototypeSet& protos);
double loss_ips(const PrototypeSet& protos);
double loss_recon(const std::vector<Graph>& batch, const GcnParams& enc,
                  const DecoderParams& dec, double lambda, std::uint64_t seed);

// --- tape builders ---
struct EmbedderVars {
  std::vector<ad::Var> enc_weights, enc_biases;
  nn::MlpVars expansion, feature_head;
  ad::Var protos;
};

EmbedderVars lift(ad::Tape& tape, EmbedderModel& model, bool trainable);

struct EncodeVars {
  ad::Var node_embeddings;
  ad::Var graph_embedding;
};

EncodeVars encode(ad::Tape& tape, const EmbedderVars& vars, const Matrix& prop,
                  const Matrix& features);

ad::Var loss_dc(ad::Tape& tape, ad::Var z1, ad::Var z2, const Matrix& protos,
                double tau);
ad::Var loss_pc(ad::Tape& tape, ad::Var z1, ad::Var z2, ad::Var protos,
                double tau);
ad::Var loss_ips(ad::Tape& tape, ad::Var protos);

/// One graph of a training batch with augmentation and decoder noise frozen,
/// so the loss is a pure function of the parameters.
struct PreparedGraph {
  Matrix prop_orig, feat_orig, adj_orig;
  Matrix prop_v1, feat_v1;
  Matrix prop_v2, feat_v2;
  Matrix noise;  // n x noise_dim
};

PreparedGraph prepare_graph(const Graph& g, const AugmentationConfig& aug,
                            int noise_dim, RngStream& view_rng,
                            RngStream& noise_rng);

struct LossParts {
  double dc = 0, pc = 0, ips = 0, recon = 0, total = 0;
};

/// L_DC + L_PC + L_IPS + gamma * L_recon over a prepared batch. When
/// gamma == 0 the reconstruction subgraph is not built, so decoder
/// parameters receive exactly zero gradient.
ad::Var embedder_loss(ad::Tape& tape, const EmbedderVars& vars,
                      const std::vector<PreparedGraph>& batch,
                      const EmbedderConfig& cfg, LossParts* parts);

struct EpochLog {
  int epoch = 0;
  double dc = 0, pc = 0, ips = 0, recon = 0, total = 0;
};

struct TrainedEmbedder {
  EmbedderModel model;
  std::vector<EpochLog> log;
};

TrainedEmbedder train_embedder(const GraphDataset& train,
                               const EmbedderConfig& cfg, std::uint64_t seed);

/// Fraction of embeddings whose nearest prototype matches the majority
/// assignment of their generator family (used by tests and the suite).
double cluster_purity(const std::vector<int>& assignments,
                      const std::vector<int>& families);

}  // namespace pgos
