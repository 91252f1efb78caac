#include "pgos/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pgos {

using ad::Tape;
using ad::Var;

std::vector<std::pair<std::string, Matrix*>> DetectorParams::named_tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (std::size_t l = 0; l < encoder.weights.size(); ++l) {
    out.emplace_back("enc.w" + std::to_string(l), &encoder.weights[l]);
    out.emplace_back("enc.b" + std::to_string(l), &encoder.biases[l]);
  }
  out.emplace_back("protos", &prototypes.c);
  return out;
}

double score(const Graph& g, const DetectorParams& det) {
  RowVector z = encode(g, det.encoder).graph_embedding;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < det.prototypes.count(); ++k)
    best = std::min(best, (z - det.prototypes.c.row(k)).norm());
  return best;
}

std::vector<double> score_all(const GraphDataset& ds,
                              const DetectorParams& det) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (const Graph& g : ds.graphs) out.push_back(score(g, det));
  return out;
}

double reg_loss(const Graph& g_ood, const DetectorParams& det) {
  double h = score(g_ood, det);
  double x = -(h - det.margin) / det.scale;
  // -log sigmoid((h-m)/s) == softplus(-(h-m)/s)
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

namespace {

/// h(G) on the tape: sqrt of the min squared distance to a prototype.
Var score_var(Tape& tape, Var z, Var protos_const) {
  const int k = static_cast<int>(protos_const.value().rows());
  Var diff = ad::sub(ad::repeat_row(z, k), protos_const);
  Var d2 = ad::rowwise_sum(ad::square(diff));
  return ad::sqrt_of(ad::reduce_min(d2));
}

struct EncOnlyVars {
  std::vector<Var> weights, biases;
};

EncOnlyVars lift_encoder(Tape& tape, GcnParams& enc, bool trainable) {
  EncOnlyVars v;
  for (std::size_t l = 0; l < enc.weights.size(); ++l) {
    v.weights.push_back(tape.leaf(enc.weights[l], trainable));
    v.biases.push_back(tape.leaf(enc.biases[l], trainable));
  }
  return v;
}

Var encode_graph(Tape& tape, const EncOnlyVars& vars, const Matrix& prop,
                 const Matrix& feats) {
  Var s = tape.constant(prop);
  Var h = tape.constant(feats);
  for (std::size_t l = 0; l < vars.weights.size(); ++l) {
    h = ad::add_rowvec(ad::matmul(ad::matmul(s, h), vars.weights[l]),
                       vars.biases[l]);
    if (l + 1 < vars.weights.size()) h = ad::relu(h);
  }
  Var pooled =
      ad::scale(ad::colwise_sum(h), 1.0 / static_cast<double>(feats.rows()));
  return ad::l2_normalize_rows(pooled);
}

void calibrate(DetectorParams& det, const GraphDataset& id_set) {
  std::vector<double> scores = score_all(id_set, det);
  double mean = std::accumulate(scores.begin(), scores.end(), 0.0) /
                static_cast<double>(scores.size());
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  double sd = std::sqrt(var / static_cast<double>(scores.size()));
  det.margin = mean + sd;
  det.scale = std::max(sd, 1e-6);
}

}  // namespace

TrainedDetector train_detector(const GraphDataset& id_set,
                               const GraphDataset& pseudo_ood_set,
                               const EmbedderModel& warm_start,
                               const DetectorConfig& cfg, std::uint64_t seed) {
  if (id_set.size() == 0) throw ValidationError("train_detector: empty ID set");
  validate_dataset(id_set, true);
  if (cfg.beta < 0.0) throw ValidationError("train_detector: beta must be >= 0");

  TrainedDetector out;
  out.params.encoder = warm_start.encoder;
  out.params.prototypes = warm_start.prototypes;
  out.params.beta = cfg.beta;

  const bool use_ood = cfg.beta != 0.0 && pseudo_ood_set.size() > 0;
  const double tau = out.params.prototypes.tau;

  std::vector<Matrix*> params;
  for (std::size_t l = 0; l < out.params.encoder.weights.size(); ++l) {
    params.push_back(&out.params.encoder.weights[l]);
    params.push_back(&out.params.encoder.biases[l]);
  }
  nn::Adam opt(cfg.lr);
  RngStream root(seed);

  std::vector<std::size_t> id_order(id_set.size());
  std::iota(id_order.begin(), id_order.end(), 0);
  std::vector<std::size_t> ood_order;
  if (use_ood) {
    ood_order.resize(pseudo_ood_set.size());
    std::iota(ood_order.begin(), ood_order.end(), 0);
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    calibrate(out.params, id_set);

    RngStream shuffle_rng = root.derive("shuffle", epoch);
    std::shuffle(id_order.begin(), id_order.end(), shuffle_rng.engine());
    std::size_t ood_cursor = 0;
    if (use_ood) {
      RngStream ood_rng = root.derive("ood_shuffle", epoch);
      std::shuffle(ood_order.begin(), ood_order.end(), ood_rng.engine());
    }

    DetectorEpochLog log;
    log.epoch = epoch;
    log.margin = out.params.margin;
    log.scale = out.params.scale;
    int batches = 0;

    for (std::size_t start = 0; start < id_order.size();
         start += cfg.batch_size) {
      std::size_t end = std::min(id_order.size(), start + cfg.batch_size);
      Tape tape;
      EncOnlyVars enc = lift_encoder(tape, out.params.encoder, true);
      Var protos = tape.constant(out.params.prototypes.c);

      std::vector<Var> h_list, z1_rows, z2_rows;
      for (std::size_t b = start; b < end; ++b) {
        std::size_t gi = id_order[b];
        const Graph& g = id_set.graphs[gi];
        Matrix prop = normalized_propagation(g.adjacency);
        Var z = encode_graph(tape, enc, prop, g.features);
        h_list.push_back(score_var(tape, z, protos));
        RngStream view_rng = root.derive("views", epoch, gi);
        Graph v1 = augment(g, cfg.augmentation, view_rng);
        Graph v2 = augment(g, cfg.augmentation, view_rng);
        z1_rows.push_back(encode_graph(tape, enc,
                                       normalized_propagation(v1.adjacency),
                                       v1.features));
        z2_rows.push_back(encode_graph(tape, enc,
                                       normalized_propagation(v2.adjacency),
                                       v2.features));
      }
      Var id_term = ad::mean_all(ad::vcat(h_list));
      Var z1 = ad::vcat(z1_rows), z2 = ad::vcat(z2_rows);
      Var con = ad::add(loss_dc(tape, z1, z2, out.params.prototypes.c, tau),
                        loss_pc(tape, z1, z2, protos, tau));
      Var total = ad::add(id_term, ad::scale(con, cfg.contrastive_weight));

      double reg_val = 0.0;
      if (use_ood) {
        std::size_t ood_batch =
            std::min<std::size_t>(cfg.batch_size, pseudo_ood_set.size());
        std::vector<Var> reg_list;
        for (std::size_t k = 0; k < ood_batch; ++k) {
          const Graph& g =
              pseudo_ood_set.graphs[ood_order[ood_cursor % ood_order.size()]];
          ++ood_cursor;
          Matrix prop = normalized_propagation(g.adjacency);
          Var z = encode_graph(tape, enc, prop, g.features);
          Var h = score_var(tape, z, protos);
          Var x = ad::scale(ad::add_scalar(h, -out.params.margin),
                            1.0 / out.params.scale);
          reg_list.push_back(ad::softplus(ad::neg(x)));
        }
        Var reg = ad::mean_all(ad::vcat(reg_list));
        reg_val = ad::scalar(reg);
        total = ad::add(total, ad::scale(reg, cfg.beta));
      }

      double total_val = ad::scalar(total);
      if (!std::isfinite(total_val))
        throw NumericError("detector loss is non-finite at epoch " +
                           std::to_string(epoch));
      tape.backward(total);

      std::vector<Matrix> grads;
      for (std::size_t l = 0; l < enc.weights.size(); ++l) {
        grads.push_back(enc.weights[l].grad());
        grads.push_back(enc.biases[l].grad());
      }
      opt.step(params, grads);

      log.id_loss += ad::scalar(id_term);
      log.reg_loss += reg_val;
      log.total += total_val;
      ++batches;
    }
    log.id_loss /= batches;
    log.reg_loss /= batches;
    log.total /= batches;
    out.log.push_back(log);
  }
  calibrate(out.params, id_set);
  return out;
}

double evaluate_auc(const std::vector<double>& scores_id,
                    const std::vector<double>& scores_ood) {
  if (scores_id.empty() || scores_ood.empty())
    throw ValidationError("evaluate_auc: empty score collection");
  struct Item {
    double s;
    bool ood;
  };
  std::vector<Item> items;
  items.reserve(scores_id.size() + scores_ood.size());
  for (double s : scores_id) {
    if (!std::isfinite(s)) throw NumericError("evaluate_auc: non-finite score");
    items.push_back({s, false});
  }
  for (double s : scores_ood) {
    if (!std::isfinite(s)) throw NumericError("evaluate_auc: non-finite score");
    items.push_back({s, true});
  }
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.s < b.s; });

  // average ranks over tie groups; U statistic from the OOD rank sum
  double rank_sum_ood = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j + 1 < items.size() && items[j + 1].s == items[i].s) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i + 1) +
                             static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (items[k].ood) rank_sum_ood += avg_rank;
    i = j + 1;
  }
  const double n_o = static_cast<double>(scores_ood.size());
  const double n_i = static_cast<double>(scores_id.size());
  double u = rank_sum_ood - n_o * (n_o + 1.0) / 2.0;
  return u / (n_i * n_o);
}

}  // namespace pgos
