#include "pgos/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace pgos {

using ad::Tape;
using ad::Var;

std::vector<Matrix*> EmbedderModel::trainable_params() {
  std::vector<Matrix*> out;
  for (std::size_t l = 0; l < encoder.weights.size(); ++l) {
    out.push_back(&encoder.weights[l]);
    out.push_back(&encoder.biases[l]);
  }
  for (Matrix* p : nn::collect(decoder.expansion)) out.push_back(p);
  for (Matrix* p : nn::collect(decoder.feature_head)) out.push_back(p);
  out.push_back(&prototypes.c);
  return out;
}

std::vector<std::pair<std::string, Matrix*>> EmbedderModel::named_tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (std::size_t l = 0; l < encoder.weights.size(); ++l) {
    out.emplace_back("enc.w" + std::to_string(l), &encoder.weights[l]);
    out.emplace_back("enc.b" + std::to_string(l), &encoder.biases[l]);
  }
  for (std::size_t l = 0; l < decoder.expansion.weights.size(); ++l) {
    out.emplace_back("dec.exp.w" + std::to_string(l),
                     &decoder.expansion.weights[l]);
    out.emplace_back("dec.exp.b" + std::to_string(l),
                     &decoder.expansion.biases[l]);
  }
  for (std::size_t l = 0; l < decoder.feature_head.weights.size(); ++l) {
    out.emplace_back("dec.feat.w" + std::to_string(l),
                     &decoder.feature_head.weights[l]);
    out.emplace_back("dec.feat.b" + std::to_string(l),
                     &decoder.feature_head.biases[l]);
  }
  out.emplace_back("protos", &prototypes.c);
  return out;
}

EmbedderModel make_embedder(int feature_dim, const EmbedderConfig& cfg,
                            RngStream& rng) {
  if (cfg.num_prototypes < 2)
    throw ValidationError("embedder: num_prototypes must be >= 2");
  if (cfg.tau <= 0.0) throw ValidationError("embedder: tau must be > 0");
  if (cfg.num_layers < 1)
    throw ValidationError("embedder: num_layers must be >= 1");
  validate_augmentation(cfg.augmentation);

  EmbedderModel m;
  m.config = cfg;
  RngStream enc_rng = rng.derive("encoder");
  std::vector<int> dims;
  dims.push_back(feature_dim);
  for (int l = 0; l + 1 < cfg.num_layers; ++l) dims.push_back(cfg.hidden_dim);
  dims.push_back(cfg.latent_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    int in = dims[l], out = dims[l + 1];
    double bound = std::sqrt(6.0 / (in + out));
    Matrix w(in, out);
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j) w(i, j) = enc_rng.uniform(-bound, bound);
    m.encoder.weights.push_back(std::move(w));
    m.encoder.biases.push_back(Matrix::Zero(1, out));
  }

  RngStream dec_rng = rng.derive("decoder");
  m.decoder.noise_dim = cfg.noise_dim;
  m.decoder.expansion =
      nn::make_mlp({cfg.latent_dim + cfg.noise_dim, cfg.decoder_hidden,
                    cfg.latent_dim},
                   nn::Activation::Relu, dec_rng);
  m.decoder.feature_head = nn::make_mlp(
      {cfg.latent_dim, cfg.decoder_hidden, feature_dim}, nn::Activation::Relu,
      dec_rng);

  RngStream proto_rng = rng.derive("prototypes");
  m.prototypes.tau = cfg.tau;
  m.prototypes.c = Matrix(cfg.num_prototypes, cfg.latent_dim);
  for (int k = 0; k < cfg.num_prototypes; ++k) {
    RowVector row(cfg.latent_dim);
    for (int j = 0; j < cfg.latent_dim; ++j) row(j) = proto_rng.normal();
    m.prototypes.c.row(k) = normalize_embedding(row);
  }
  return m;
}

Matrix normalized_propagation(const Matrix& adjacency) {
  const Eigen::Index n = adjacency.rows();
  Matrix a_tilde = adjacency + Matrix::Identity(n, n);
  Vector deg = a_tilde.rowwise().sum();
  Vector dinv = deg.array().rsqrt();
  return dinv.asDiagonal() * a_tilde * dinv.asDiagonal();
}

RowVector normalize_embedding(const RowVector& v) {
  RowVector out = v;
  if (out.norm() < 1e-12) out.array() += 1e-6;
  return out / out.norm();
}

EncodeResult encode(const Graph& g, const GcnParams& enc) {
  if (g.feature_dim() != enc.input_dim())
    throw ValidationError(
        "encode: feature dim " + std::to_string(g.feature_dim()) +
        " does not match encoder input dim " + std::to_string(enc.input_dim()));
  Matrix prop = normalized_propagation(g.adjacency);
  Matrix h = g.features;
  for (std::size_t l = 0; l < enc.weights.size(); ++l) {
    h = (prop * h * enc.weights[l]).rowwise() + enc.biases[l].row(0);
    if (l + 1 < enc.weights.size()) h = h.cwiseMax(0.0);
  }
  EncodeResult out;
  out.node_embeddings = h;
  out.graph_embedding = normalize_embedding(h.colwise().mean());
  return out;
}

Matrix embed_dataset(const GraphDataset& ds, const GcnParams& enc) {
  Matrix out(static_cast<Eigen::Index>(ds.size()), enc.output_dim());
  for (std::size_t i = 0; i < ds.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = encode(ds.graphs[i], enc).graph_embedding;
  return out;
}

Vector assignment_probs(const RowVector& z, const PrototypeSet& protos) {
  Vector logits = protos.c * z.transpose() / protos.tau;
  logits.array() -= logits.maxCoeff();
  Vector p = logits.array().exp();
  return p / p.sum();
}

int nearest_prototype(const RowVector& z, const PrototypeSet& protos) {
  Vector dots = protos.c * z.transpose();
  int best = 0;
  for (int k = 1; k < dots.size(); ++k)
    if (dots(k) > dots(best)) best = k;
  return best;
}

std::vector<int> assign_all(const Matrix& embeddings,
                            const PrototypeSet& protos) {
  std::vector<int> out(embeddings.rows());
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i)
    out[i] = nearest_prototype(embeddings.row(i), protos);
  return out;
}

DecodeResult decode(const RowVector& graph_latent, int n,
                    const DecoderParams& dec, std::uint64_t seed) {
  if (n < 1) throw ValidationError("decode: node count must be >= 1");
  RngStream noise_rng(seed);
  Matrix input(n, graph_latent.size() + dec.noise_dim);
  for (int i = 0; i < n; ++i) {
    input.row(i).segment(0, graph_latent.size()) = graph_latent;
    for (int j = 0; j < dec.noise_dim; ++j)
      input(i, graph_latent.size() + j) = noise_rng.normal();
  }
  Matrix h = nn::mlp_forward(dec.expansion, input);
  DecodeResult out;
  out.adj_probs = (1.0 / (1.0 + (-(h * h.transpose()).array()).exp())).matrix();
  out.adj_probs.diagonal().setZero();
  out.features = nn::mlp_forward(dec.feature_head, h);
  return out;
}

// --- tape builders ---

EmbedderVars lift(Tape& tape, EmbedderModel& m, bool trainable) {
  EmbedderVars v;
  for (std::size_t l = 0; l < m.encoder.weights.size(); ++l) {
    v.enc_weights.push_back(tape.leaf(m.encoder.weights[l], trainable));
    v.enc_biases.push_back(tape.leaf(m.encoder.biases[l], trainable));
  }
  v.expansion = nn::lift(tape, m.decoder.expansion, trainable);
  v.feature_head = nn::lift(tape, m.decoder.feature_head, trainable);
  v.protos = tape.leaf(m.prototypes.c, trainable);
  return v;
}

EncodeVars encode(Tape& tape, const EmbedderVars& vars, const Matrix& prop,
                  const Matrix& features) {
  Var s = tape.constant(prop);
  Var h = tape.constant(features);
  for (std::size_t l = 0; l < vars.enc_weights.size(); ++l) {
    h = ad::add_rowvec(ad::matmul(ad::matmul(s, h), vars.enc_weights[l]),
                       vars.enc_biases[l]);
    if (l + 1 < vars.enc_weights.size()) h = ad::relu(h);
  }
  EncodeVars out;
  out.node_embeddings = h;
  Var pooled = ad::scale(ad::colwise_sum(h),
                         1.0 / static_cast<double>(features.rows()));
  out.graph_embedding = ad::l2_normalize_rows(pooled);
  return out;
}

Var loss_dc(Tape& tape, Var z1, Var z2, const Matrix& protos, double tau) {
  const Matrix& v1 = z1.value();
  const Matrix& v2 = z2.value();
  const Eigen::Index n = v1.rows();
  auto assign = [&](const Matrix& z, Eigen::Index i) {
    Vector dots = protos * z.row(i).transpose();
    int best = 0;
    for (int k = 1; k < dots.size(); ++k)
      if (dots(k) > dots(best)) best = k;
    return best;
  };
  Matrix mask = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    int ci = assign(v1, i);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && assign(v2, j) != ci) mask(i, j) = 1.0;
  }
  Var sim = ad::exp_of(ad::scale(ad::matmul(z1, ad::transpose(z2)), 1.0 / tau));
  Var pos = ad::diagonal(sim);
  Var neg = ad::rowwise_sum(ad::cmul(sim, tape.constant(mask)));
  Var per_anchor = ad::sub(ad::log_of(ad::add(pos, neg)), ad::log_of(pos));
  return ad::mean_all(per_anchor);
}

Var loss_pc(Tape& tape, Var z1, Var z2, Var protos, double tau) {
  const double n = static_cast<double>(z1.value().rows());
  Var p1 = ad::softmax_rows(
      ad::scale(ad::matmul(z1, ad::transpose(protos)), 1.0 / tau));
  Var p2 = ad::softmax_rows(
      ad::scale(ad::matmul(z2, ad::transpose(protos)), 1.0 / tau));
  Var ce12 = ad::neg(ad::sum_all(ad::cmul(p2, ad::log_of(p1))));
  Var ce21 = ad::neg(ad::sum_all(ad::cmul(p1, ad::log_of(p2))));
  return ad::scale(ad::add(ce12, ce21), 1.0 / (2.0 * n));
}

Var loss_ips(Tape& tape, Var protos) {
  const double k = static_cast<double>(protos.value().rows());
  Var gram = ad::matmul(protos, ad::transpose(protos));
  Var tr = ad::sum_all(ad::diagonal(gram));
  Var total = ad::sum_all(gram);
  // sum over ordered pairs of ||c_i - c_j||^2 = 2K tr(G) - 2 sum(G)
  Var pair_sum = ad::sub(ad::scale(tr, 2.0 * k), ad::scale(total, 2.0));
  return ad::scale(pair_sum, -1.0 / (k * (k - 1.0)));
}

namespace {

constexpr double kBceEps = 1e-7;

Var recon_one(Tape& tape, const EmbedderVars& vars, Var graph_latent,
              const PreparedGraph& pg, double lambda) {
  const int n = static_cast<int>(pg.adj_orig.rows());
  Var rep = ad::repeat_row(graph_latent, n);
  Var input = ad::hcat(rep, tape.constant(pg.noise));
  Var h = nn::mlp_forward(tape, vars.expansion, input);
  Var xhat = nn::mlp_forward(tape, vars.feature_head, h);
  Var ferr = ad::sum_all(ad::square(ad::sub(xhat, tape.constant(pg.feat_orig))));
  if (lambda == 0.0 || n == 1) return ferr;

  Var probs = ad::clamp(ad::sigmoid(ad::matmul(h, ad::transpose(h))), kBceEps,
                        1.0 - kBceEps);
  Matrix off_diag = Matrix::Ones(n, n) - Matrix::Identity(n, n);
  Matrix pos_mask = pg.adj_orig;  // diag is already zero
  Matrix neg_mask = off_diag - pg.adj_orig;
  Var bce = ad::neg(ad::sum_all(ad::add(
      ad::cmul(tape.constant(pos_mask), ad::log_of(probs)),
      ad::cmul(tape.constant(neg_mask),
               ad::log_of(ad::sub(tape.constant(Matrix::Ones(n, n)), probs))))));
  return ad::add(ferr, ad::scale(bce, lambda));
}

}  // namespace

PreparedGraph prepare_graph(const Graph& g, const AugmentationConfig& aug,
                            int noise_dim, RngStream& view_rng,
                            RngStream& noise_rng) {
  PreparedGraph pg;
  pg.prop_orig = normalized_propagation(g.adjacency);
  pg.feat_orig = g.features;
  pg.adj_orig = g.adjacency;
  Graph v1 = augment(g, aug, view_rng);
  Graph v2 = augment(g, aug, view_rng);
  pg.prop_v1 = normalized_propagation(v1.adjacency);
  pg.feat_v1 = v1.features;
  pg.prop_v2 = normalized_propagation(v2.adjacency);
  pg.feat_v2 = v2.features;
  pg.noise = Matrix(g.num_nodes(), noise_dim);
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int j = 0; j < noise_dim; ++j) pg.noise(i, j) = noise_rng.normal();
  return pg;
}

Var embedder_loss(Tape& tape, const EmbedderVars& vars,
                  const std::vector<PreparedGraph>& batch,
                  const EmbedderConfig& cfg, LossParts* parts) {
  std::vector<Var> z1_rows, z2_rows, z0_rows;
  for (const PreparedGraph& pg : batch) {
    z1_rows.push_back(encode(tape, vars, pg.prop_v1, pg.feat_v1).graph_embedding);
    z2_rows.push_back(encode(tape, vars, pg.prop_v2, pg.feat_v2).graph_embedding);
    if (cfg.gamma_recon != 0.0)
      z0_rows.push_back(
          encode(tape, vars, pg.prop_orig, pg.feat_orig).graph_embedding);
  }
  Var z1 = ad::vcat(z1_rows);
  Var z2 = ad::vcat(z2_rows);

  Var dc = loss_dc(tape, z1, z2, vars.protos.value(), cfg.tau);
  Var pc = loss_pc(tape, z1, z2, vars.protos, cfg.tau);
  Var ips = loss_ips(tape, vars.protos);
  Var total = ad::add(ad::add(dc, pc), ips);

  double recon_val = 0.0;
  if (cfg.gamma_recon != 0.0) {
    Var recon = tape.constant_scalar(0.0);
    for (std::size_t i = 0; i < batch.size(); ++i)
      recon = ad::add(recon, recon_one(tape, vars, z0_rows[i], batch[i],
                                       cfg.lambda_struct));
    recon_val = ad::scalar(recon);
    total = ad::add(total, ad::scale(recon, cfg.gamma_recon));
  }

  if (parts) {
    parts->dc = ad::scalar(dc);
    parts->pc = ad::scalar(pc);
    parts->ips = ad::scalar(ips);
    parts->recon = recon_val;
    parts->total = ad::scalar(total);
  }
  return total;
}

// --- scalar wrappers ---

double loss_dc(const Matrix& z1, const Matrix& z2, const PrototypeSet& protos) {
  Tape tape;
  return ad::scalar(loss_dc(tape, tape.constant(z1), tape.constant(z2),
                            protos.c, protos.tau));
}

double loss_pc(const Matrix& z1, const Matrix& z2, const PrototypeSet& protos) {
  Tape tape;
  return ad::scalar(loss_pc(tape, tape.constant(z1), tape.constant(z2),
                            tape.constant(protos.c), protos.tau));
}

double loss_ips(const PrototypeSet& protos) {
  Tape tape;
  return ad::scalar(loss_ips(tape, tape.constant(protos.c)));
}

double loss_recon(const std::vector<Graph>& batch, const GcnParams& enc,
                  const DecoderParams& dec, double lambda, std::uint64_t seed) {
  RngStream root(seed);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Graph& g = batch[i];
    EncodeResult er = encode(g, enc);
    RngStream noise_rng = root.derive("noise", i);
    std::uint64_t noise_seed = noise_rng.seed();
    DecodeResult dr = decode(er.graph_embedding, g.num_nodes(), dec, noise_seed);
    total += (dr.features - g.features).squaredNorm();
    if (lambda != 0.0 && g.num_nodes() > 1) {
      double bce = 0.0;
      for (int a = 0; a < g.num_nodes(); ++a)
        for (int b = 0; b < g.num_nodes(); ++b) {
          if (a == b) continue;
          double p = std::clamp(dr.adj_probs(a, b), kBceEps, 1.0 - kBceEps);
          bce -= g.adjacency(a, b) != 0.0 ? std::log(p) : std::log(1.0 - p);
        }
      total += lambda * bce;
    }
  }
  return total;
}

// --- training ---

namespace {

void renormalize_prototypes(Matrix& c) {
  for (Eigen::Index k = 0; k < c.rows(); ++k)
    c.row(k) = normalize_embedding(c.row(k));
}

/// Farthest-point selection over an initial encoding pass; keeps prototypes
/// distinct so L_IPS has usable gradients from the start.
void init_prototypes(EmbedderModel& m, const GraphDataset& train,
                     RngStream& rng) {
  Matrix emb = embed_dataset(train, m.encoder);
  const int k = m.prototypes.count();
  const Eigen::Index n = emb.rows();
  if (n == 0) return;
  std::vector<Eigen::Index> chosen;
  chosen.push_back(static_cast<Eigen::Index>(rng.uniform_u64(0, n - 1)));
  while (static_cast<int>(chosen.size()) < k &&
         static_cast<Eigen::Index>(chosen.size()) < n) {
    Eigen::Index best = -1;
    double best_dist = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double dmin = std::numeric_limits<double>::infinity();
      for (Eigen::Index c : chosen)
        dmin = std::min(dmin, (emb.row(i) - emb.row(c)).norm());
      if (dmin > best_dist) {
        best_dist = dmin;
        best = i;
      }
    }
    chosen.push_back(best);
  }
  for (std::size_t i = 0; i < chosen.size(); ++i)
    m.prototypes.c.row(static_cast<Eigen::Index>(i)) = emb.row(chosen[i]);
  // remaining rows (dataset smaller than K) keep their random init
  renormalize_prototypes(m.prototypes.c);
}

void check_finite(const LossParts& parts, int epoch) {
  auto bad = [&](double v, const char* name) {
    if (!std::isfinite(v))
      throw NumericError(std::string(name) + " is non-finite at epoch " +
                         std::to_string(epoch));
  };
  bad(parts.dc, "L_DC");
  bad(parts.pc, "L_PC");
  bad(parts.ips, "L_IPS");
  bad(parts.recon, "L_recon");
  bad(parts.total, "L_total");
}

}  // namespace

TrainedEmbedder train_embedder(const GraphDataset& train,
                               const EmbedderConfig& cfg, std::uint64_t seed) {
  validate_dataset(train, true);
  if (train.size() == 0) throw ValidationError("train_embedder: empty dataset");

  RngStream root(seed);
  RngStream init_rng = root.derive("init");
  TrainedEmbedder out;
  out.model = make_embedder(train.graphs.front().feature_dim(), cfg, init_rng);
  RngStream fps_rng = root.derive("proto_init");
  init_prototypes(out.model, train, fps_rng);

  std::vector<Matrix*> params = out.model.trainable_params();
  nn::Adam opt(cfg.lr);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    RngStream shuffle_rng = root.derive("shuffle", epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    EpochLog log;
    log.epoch = epoch;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<PreparedGraph> batch;
      for (std::size_t b = start; b < end; ++b) {
        std::size_t gi = order[b];
        RngStream view_rng = root.derive("views", epoch, gi);
        RngStream noise_rng = root.derive("noise", epoch, gi);
        batch.push_back(prepare_graph(train.graphs[gi], cfg.augmentation,
                                      cfg.noise_dim, view_rng, noise_rng));
      }
      Tape tape;
      EmbedderVars vars = lift(tape, out.model, true);
      LossParts parts;
      Var loss = embedder_loss(tape, vars, batch, cfg, &parts);
      check_finite(parts, epoch);
      tape.backward(loss);

      std::vector<Matrix> grads;
      for (std::size_t l = 0; l < vars.enc_weights.size(); ++l) {
        grads.push_back(vars.enc_weights[l].grad());
        grads.push_back(vars.enc_biases[l].grad());
      }
      for (std::size_t l = 0; l < vars.expansion.weights.size(); ++l) {
        grads.push_back(vars.expansion.weights[l].grad());
        grads.push_back(vars.expansion.biases[l].grad());
      }
      for (std::size_t l = 0; l < vars.feature_head.weights.size(); ++l) {
        grads.push_back(vars.feature_head.weights[l].grad());
        grads.push_back(vars.feature_head.biases[l].grad());
      }
      grads.push_back(vars.protos.grad());
      opt.step(params, grads);
      renormalize_prototypes(out.model.prototypes.c);

      log.dc += parts.dc;
      log.pc += parts.pc;
      log.ips += parts.ips;
      log.recon += parts.recon;
      log.total += parts.total;
      ++batches;
    }
    log.dc /= batches;
    log.pc /= batches;
    log.ips /= batches;
    log.recon /= batches;
    log.total /= batches;
    out.log.push_back(log);
  }
  return out;
}

double cluster_purity(const std::vector<int>& assignments,
                      const std::vector<int>& families) {
  std::map<int, std::map<int, int>> counts;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    counts[assignments[i]][families[i]]++;
  int correct = 0;
  for (const auto& [cluster, fam_counts] : counts) {
    int best = 0;
    for (const auto& [fam, cnt] : fam_counts) best = std::max(best, cnt);
    correct += best;
  }
  return static_cast<double>(correct) / static_cast<double>(assignments.size());
}

}  // namespace pgos
