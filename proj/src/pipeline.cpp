#include "pgos/pipeline.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace pgos {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

RunPaths run_paths(const std::string& out_root, const ExperimentConfig& cfg) {
  RunPaths p;
  p.dir = fs::path(out_root) /
          (config_hash(cfg) + "-" + std::to_string(cfg.seed));
  p.config = p.dir / "config.json";
  p.train_data = p.dir / "train.json";
  p.test_id_data = p.dir / "test_id.json";
  p.test_ood_data = p.dir / "test_ood.json";
  p.embedder_ckpt = p.dir / "embedder.ckpt";
  p.stats = p.dir / "stats.json";
  p.policy_ckpt = p.dir / "policy.ckpt";
  p.outliers = p.dir / "outliers.json";
  p.detector_ckpt = p.dir / "detector.ckpt";
  p.scores_csv = p.dir / "scores.csv";
  p.metrics = p.dir / "metrics.json";
  p.logs_dir = p.dir / "logs";
  fs::create_directories(p.logs_dir);
  save_config(cfg, p.config.string());
  return p;
}

namespace {

void require_hash(const std::string& found, const ExperimentConfig& cfg,
                  const std::string& artifact) {
  std::string expect = config_hash(cfg);
  if (found != expect)
    throw ValidationError(artifact + " was produced under config hash " +
                          (found.empty() ? "<none>" : found) +
                          " but the current config hashes to " + expect);
}

GraphDataset load_stage_dataset(const fs::path& path,
                                const ExperimentConfig& cfg) {
  std::string hash;
  GraphDataset ds = load_dataset(path.string(), &hash);
  require_hash(hash, cfg, path.filename().string());
  return ds;
}

struct TuSplits {
  GraphDataset train, test_id, test_ood;
};

TuSplits split_tu(const ExperimentConfig& cfg) {
  GraphDataset id_all = load_tudataset(cfg.dataset.tu.id_dir);
  if (cfg.dataset.tu.ood_dir.empty())
    throw ValidationError("dataset.tu.ood_dir is required for a full run");
  GraphDataset ood_all = load_tudataset(cfg.dataset.tu.ood_dir);
  if (!id_all.graphs.empty() && !ood_all.graphs.empty() &&
      id_all.graphs.front().feature_dim() !=
          ood_all.graphs.front().feature_dim())
    throw ValidationError(
        "TU ID and OOD datasets have different feature dimensions");

  RngStream rng(cfg.seed);
  RngStream split_rng = rng.derive("tu_split");
  std::vector<std::size_t> order(id_all.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), split_rng.engine());
  std::size_t n_test = static_cast<std::size_t>(
      cfg.dataset.tu.test_fraction * static_cast<double>(id_all.size()));
  n_test = std::max<std::size_t>(1, std::min(n_test, id_all.size() - 1));

  TuSplits out;
  out.train.name = id_all.name + "_train";
  out.test_id.name = id_all.name + "_test";
  for (std::size_t i = 0; i < order.size(); ++i) {
    GraphDataset& dst = i < n_test ? out.test_id : out.train;
    dst.graphs.push_back(id_all.graphs[order[i]]);
    dst.labels.push_back(GraphLabel::ID);
  }
  out.test_ood = std::move(ood_all);
  out.test_ood.labels.assign(out.test_ood.graphs.size(), GraphLabel::OOD);
  return out;
}

void write_csv(const fs::path& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path.string());
  f << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      f << row[i] << (i + 1 < row.size() ? "," : "");
    f << "\n";
  }
}

}  // namespace

void stage_gen_data(const ExperimentConfig& cfg, const RunPaths& paths) {
  std::string hash = config_hash(cfg);
  if (cfg.dataset.kind == "synthetic") {
    BenchmarkSplits splits = generate_benchmark(
        cfg.dataset.synthetic, cfg.dataset.train_per_family,
        cfg.dataset.test_per_family, cfg.dataset.test_ood_count,
        RngStream(cfg.seed).derive("data").seed());
    save_dataset(splits.train, paths.train_data.string(), "", hash);
    save_dataset(splits.test_id, paths.test_id_data.string(), "", hash);
    save_dataset(splits.test_ood, paths.test_ood_data.string(), "", hash);
  } else {
    TuSplits splits = split_tu(cfg);
    save_dataset(splits.train, paths.train_data.string(), "", hash);
    save_dataset(splits.test_id, paths.test_id_data.string(), "", hash);
    save_dataset(splits.test_ood, paths.test_ood_data.string(), "", hash);
  }
}

Checkpoint to_checkpoint(EmbedderModel& model, const std::string& hash,
                         std::uint64_t seed) {
  Checkpoint ckpt;
  ckpt.kind = "embedder";
  ckpt.config_hash = hash;
  ckpt.seed = seed;
  ckpt.meta["feature_dim"] = model.encoder.input_dim();
  ckpt.meta["tau"] = model.prototypes.tau;
  store_tensors(ckpt, model.named_tensors());
  return ckpt;
}

EmbedderModel embedder_from_checkpoint(const Checkpoint& ckpt,
                                       const ExperimentConfig& cfg) {
  if (ckpt.kind != "embedder")
    throw ValidationError("expected an embedder checkpoint, found '" +
                          ckpt.kind + "'");
  int feature_dim = static_cast<int>(ckpt.meta.at("feature_dim"));
  RngStream dummy(0);
  EmbedderModel model = make_embedder(feature_dim, cfg.embedder, dummy);
  restore_tensors(ckpt, model.named_tensors());
  return model;
}

Checkpoint to_checkpoint(SacAgent& agent, const std::string& hash,
                         std::uint64_t seed) {
  Checkpoint ckpt;
  ckpt.kind = "policy";
  ckpt.config_hash = hash;
  ckpt.seed = seed;
  ckpt.meta["state_dim"] = agent.actor.trunk.input_dim();
  ckpt.meta["action_scale"] = agent.actor.action_scale;
  ckpt.meta["log_alpha"] = agent.temperature.log_alpha;
  store_tensors(ckpt, agent.named_tensors());
  return ckpt;
}

SacAgent agent_from_checkpoint(const Checkpoint& ckpt,
                               const ExperimentConfig& cfg) {
  if (ckpt.kind != "policy")
    throw ValidationError("expected a policy checkpoint, found '" + ckpt.kind +
                          "'");
  int dim = static_cast<int>(ckpt.meta.at("state_dim"));
  RngStream dummy(0);
  SacAgent agent =
      make_agent(dim, dim, ckpt.meta.at("action_scale"), cfg.sac, dummy);
  restore_tensors(ckpt, agent.named_tensors());
  agent.temperature.log_alpha = ckpt.meta.at("log_alpha");
  return agent;
}

Checkpoint to_checkpoint(DetectorParams& det, const std::string& hash,
                         std::uint64_t seed) {
  Checkpoint ckpt;
  ckpt.kind = "detector";
  ckpt.config_hash = hash;
  ckpt.seed = seed;
  ckpt.meta["feature_dim"] = det.encoder.input_dim();
  ckpt.meta["margin"] = det.margin;
  ckpt.meta["scale"] = det.scale;
  ckpt.meta["beta"] = det.beta;
  ckpt.meta["tau"] = det.prototypes.tau;
  store_tensors(ckpt, det.named_tensors());
  return ckpt;
}

DetectorParams detector_from_checkpoint(const Checkpoint& ckpt,
                                        const ExperimentConfig& cfg) {
  if (ckpt.kind != "detector")
    throw ValidationError("expected a detector checkpoint, found '" +
                          ckpt.kind + "'");
  int feature_dim = static_cast<int>(ckpt.meta.at("feature_dim"));
  RngStream dummy(0);
  EmbedderModel shape = make_embedder(feature_dim, cfg.embedder, dummy);
  DetectorParams det;
  det.encoder = shape.encoder;
  det.prototypes = shape.prototypes;
  det.margin = ckpt.meta.at("margin");
  det.scale = ckpt.meta.at("scale");
  det.beta = ckpt.meta.at("beta");
  det.prototypes.tau = ckpt.meta.at("tau");
  restore_tensors(ckpt, det.named_tensors());
  return det;
}

void stage_train_embed(const ExperimentConfig& cfg, const RunPaths& paths) {
  GraphDataset train = load_stage_dataset(paths.train_data, cfg);
  std::string hash = config_hash(cfg);
  TrainedEmbedder trained = train_embedder(
      train, cfg.embedder, RngStream(cfg.seed).derive("embedder").seed());

  Checkpoint ckpt = to_checkpoint(trained.model, hash, cfg.seed);
  save_checkpoint(ckpt, paths.embedder_ckpt.string());

  std::vector<std::vector<std::string>> rows;
  for (const EpochLog& l : trained.log)
    rows.push_back({std::to_string(l.epoch), format_double(l.dc),
                    format_double(l.pc), format_double(l.ips),
                    format_double(l.recon), format_double(l.total)});
  write_csv(paths.logs_dir / "embedder_loss.csv",
            "epoch,L_DC,L_PC,L_IPS,L_recon,L_total", rows);

  Matrix emb = embed_dataset(train, trained.model.encoder);
  auto [stats, boundary] = compute_cluster_stats(emb, trained.model.prototypes);
  std::ofstream f(paths.stats, std::ios::binary);
  f << stats_to_json(stats, boundary, hash) << "\n";
}

namespace {

struct EnvBundle {
  ClusterStats stats;
  GlobalBoundary boundary;
  EnvConfig env_cfg;
  EmbedderModel model;
};

EnvBundle load_env_bundle(const ExperimentConfig& cfg, const RunPaths& paths) {
  EnvBundle b;
  Checkpoint ckpt = load_checkpoint(paths.embedder_ckpt.string());
  require_hash(ckpt.config_hash, cfg, "embedder.ckpt");
  b.model = embedder_from_checkpoint(ckpt, cfg);
  std::ifstream f(paths.stats);
  if (!f) throw ValidationError("missing stats.json; run train-embed first");
  std::stringstream ss;
  ss << f.rdbuf();
  std::string stats_hash;
  stats_from_json(ss.str(), b.stats, b.boundary, &stats_hash);
  require_hash(stats_hash, cfg, "stats.json");
  b.env_cfg = cfg.resolve_env(b.boundary.r_max);
  return b;
}

}  // namespace

void stage_train_policy(const ExperimentConfig& cfg, const RunPaths& paths) {
  if (cfg.sampler != "pgos") return;  // only the learned sampler needs a policy
  EnvBundle b = load_env_bundle(cfg, paths);
  TrainedPolicy trained =
      train_policy(b.stats, b.boundary, b.model.prototypes, b.env_cfg, cfg.sac,
                   RngStream(cfg.seed).derive("policy").seed());
  Checkpoint ckpt =
      to_checkpoint(trained.agent, config_hash(cfg), cfg.seed);
  save_checkpoint(ckpt, paths.policy_ckpt.string());

  std::vector<std::vector<std::string>> rows;
  for (const PolicyLogRow& r : trained.log)
    rows.push_back({std::to_string(r.step),
                    format_double(r.episode_reward_mean),
                    format_double(r.entropy_mean), format_double(r.alpha),
                    format_double(r.critic_loss), format_double(r.actor_loss)});
  write_csv(paths.logs_dir / "policy_log.csv",
            "step,episode_reward_mean,entropy_mean,alpha,critic_loss,actor_loss",
            rows);
}

void stage_synthesize(const ExperimentConfig& cfg, const RunPaths& paths) {
  std::string hash = config_hash(cfg);
  if (cfg.sampler == "none") {
    json out;
    out["format_version"] = 1;
    out["config_hash"] = hash;
    out["origin"] = "none";
    out["latents"] = json::array();
    std::ofstream f(paths.outliers, std::ios::binary);
    f << out.dump(2) << "\n";
    return;
  }

  EnvBundle b = load_env_bundle(cfg, paths);
  GraphDataset train = load_stage_dataset(paths.train_data, cfg);
  const int count = static_cast<int>(train.size());
  std::uint64_t synth_seed = RngStream(cfg.seed).derive("synthesis").seed();

  Matrix latents;
  bool complete = true;
  int episodes_used = 0;
  if (cfg.sampler == "pgos") {
    Checkpoint pc = load_checkpoint(paths.policy_ckpt.string());
    require_hash(pc.config_hash, cfg, "policy.ckpt");
    SacAgent agent = agent_from_checkpoint(pc, cfg);
    CollectConfig cc;
    cc.count = count;
    cc.burn_in_fraction = cfg.synth.burn_in_fraction;
    cc.eps_keep = cfg.synth.eps_keep;
    cc.episode_cap =
        std::max(1, cfg.episode_cap_factor * count / b.env_cfg.max_steps);
    CollectedLatents col =
        collect_outlier_latents(agent.actor, b.stats, b.boundary,
                                b.model.prototypes, b.env_cfg, cc, synth_seed);
    latents = col.latents;
    complete = col.complete;
    episodes_used = col.episodes_used;
  } else if (cfg.sampler == "gaussian") {
    double sigma = cfg.synth.sigma_factor * b.boundary.r_max;
    latents = gaussian_midpoint_sampler(b.model.prototypes, b.boundary, count,
                                        sigma, synth_seed);
  } else {  // uniform
    latents = uniform_boundary_sampler(b.boundary, count, synth_seed);
  }

  if (latents.rows() == 0)
    throw ValidationError("synthesize: no latents were collected");

  std::vector<int> hist = node_count_histogram(train.graphs);
  GraphDataset pseudo =
      synthesize_graphs(latents, b.model.decoder, hist, cfg.synth,
                        RngStream(cfg.seed).derive("decode").seed());

  json out;
  out["format_version"] = 1;
  out["config_hash"] = hash;
  out["origin"] = cfg.sampler;
  out["complete"] = complete;
  out["episodes_used"] = episodes_used;
  json jl = json::array();
  for (Eigen::Index i = 0; i < latents.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < latents.cols(); ++j)
      row.push_back(latents(i, j));
    jl.push_back(row);
  }
  out["latents"] = jl;
  out["graphs"] = json::parse(dataset_to_json(pseudo, cfg.sampler, hash));
  std::ofstream f(paths.outliers, std::ios::binary);
  f << out.dump(2) << "\n";
}

namespace {

GraphDataset load_pseudo_ood(const ExperimentConfig& cfg,
                             const RunPaths& paths, std::string* origin) {
  std::ifstream f(paths.outliers);
  if (!f)
    throw ValidationError("missing outliers.json; run synthesize first");
  std::stringstream ss;
  ss << f.rdbuf();
  json in;
  try {
    in = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ParseError(std::string("outliers.json: ") + e.what());
  }
  require_hash(in.at("config_hash").get<std::string>(), cfg, "outliers.json");
  if (origin) *origin = in.at("origin").get<std::string>();
  if (!in.contains("graphs")) return GraphDataset{};
  return dataset_from_json(in["graphs"].dump());
}

}  // namespace

void stage_train_detector(const ExperimentConfig& cfg, const RunPaths& paths) {
  GraphDataset train = load_stage_dataset(paths.train_data, cfg);
  Checkpoint eckpt = load_checkpoint(paths.embedder_ckpt.string());
  require_hash(eckpt.config_hash, cfg, "embedder.ckpt");
  EmbedderModel warm = embedder_from_checkpoint(eckpt, cfg);

  std::string origin;
  GraphDataset pseudo = load_pseudo_ood(cfg, paths, &origin);

  DetectorConfig dc = cfg.detector;
  dc.augmentation = cfg.embedder.augmentation;
  TrainedDetector trained =
      train_detector(train, pseudo, warm, dc,
                     RngStream(cfg.seed).derive("detector").seed());

  Checkpoint ckpt = to_checkpoint(trained.params, config_hash(cfg), cfg.seed);
  save_checkpoint(ckpt, paths.detector_ckpt.string());

  std::vector<std::vector<std::string>> rows;
  for (const DetectorEpochLog& l : trained.log)
    rows.push_back({std::to_string(l.epoch), format_double(l.id_loss),
                    format_double(l.reg_loss), format_double(l.total),
                    format_double(l.margin), format_double(l.scale)});
  write_csv(paths.logs_dir / "detector_loss.csv",
            "epoch,id_loss,reg_loss,total,margin,scale", rows);
}

Metrics stage_evaluate(const ExperimentConfig& cfg, const RunPaths& paths) {
  Checkpoint ckpt = load_checkpoint(paths.detector_ckpt.string());
  require_hash(ckpt.config_hash, cfg, "detector.ckpt");
  DetectorParams det = detector_from_checkpoint(ckpt, cfg);

  GraphDataset test_id = load_stage_dataset(paths.test_id_data, cfg);
  GraphDataset test_ood = load_stage_dataset(paths.test_ood_data, cfg);
  std::vector<double> s_id = score_all(test_id, det);
  std::vector<double> s_ood = score_all(test_ood, det);

  std::vector<std::vector<std::string>> rows;
  int gid = 0;
  for (double s : s_id)
    rows.push_back({std::to_string(gid++), "test_id", "ID", format_double(s)});
  for (double s : s_ood)
    rows.push_back({std::to_string(gid++), "test_ood", "OOD", format_double(s)});
  write_csv(paths.scores_csv, "graph_id,split,label,score", rows);

  Metrics m;
  m.auc = evaluate_auc(s_id, s_ood);
  m.n_id = static_cast<int>(s_id.size());
  m.n_ood = static_cast<int>(s_ood.size());

  json out;
  out["format_version"] = 1;
  out["auc"] = m.auc;
  out["n_id"] = m.n_id;
  out["n_ood"] = m.n_ood;
  out["seed"] = cfg.seed;
  out["config_hash"] = config_hash(cfg);
  std::ofstream f(paths.metrics, std::ios::binary);
  f << out.dump(2) << "\n";
  return m;
}

namespace {

template <typename F>
void run_stage(const char* name, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("[stage ") + name + "] " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string("[stage ") + name + "] " + e.what());
  }
}

}  // namespace

Metrics run_pipeline(const ExperimentConfig& cfg, const std::string& out_root) {
  validate_config(cfg);
  RunPaths paths = run_paths(out_root, cfg);
  Metrics m;
  run_stage("gen-data", [&] { stage_gen_data(cfg, paths); });
  run_stage("train-embed", [&] { stage_train_embed(cfg, paths); });
  run_stage("train-policy", [&] { stage_train_policy(cfg, paths); });
  run_stage("synthesize", [&] { stage_synthesize(cfg, paths); });
  run_stage("train-detector", [&] { stage_train_detector(cfg, paths); });
  run_stage("evaluate", [&] { m = stage_evaluate(cfg, paths); });
  return m;
}

SuiteResult run_suite(const ExperimentConfig& base,
                      const std::vector<std::uint64_t>& seeds,
                      const std::vector<std::string>& samplers,
                      const std::vector<int>& k_sweep,
                      const std::string& out_root, int jobs) {
  if (seeds.empty() || samplers.empty())
    throw ValidationError("suite: need at least one seed and one sampler");
  std::vector<int> ks = k_sweep;
  if (ks.empty()) ks.push_back(base.embedder.num_prototypes);

  std::vector<SuiteCell> cells;
  for (const std::string& s : samplers)
    for (int k : ks)
      for (std::uint64_t seed : seeds) {
        SuiteCell c;
        c.sampler = s;
        c.k = k;
        c.seed = seed;
        cells.push_back(c);
      }

  jobs = std::max(1, jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      ExperimentConfig cfg = base;
      cfg.sampler = cells[i].sampler;
      cfg.embedder.num_prototypes = cells[i].k;
      cfg.seed = cells[i].seed;
      cells[i].auc = run_pipeline(cfg, out_root).auc;
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::vector<std::vector<std::string>> rows;
  for (const SuiteCell& c : cells)
    rows.push_back({"cell", c.sampler, std::to_string(c.k),
                    std::to_string(c.seed), format_double(c.auc), ""});
  for (const std::string& s : samplers)
    for (int k : ks) {
      std::vector<double> aucs;
      for (const SuiteCell& c : cells)
        if (c.sampler == s && c.k == k) aucs.push_back(c.auc);
      double mean = std::accumulate(aucs.begin(), aucs.end(), 0.0) /
                    static_cast<double>(aucs.size());
      double var = 0.0;
      for (double a : aucs) var += (a - mean) * (a - mean);
      double sd = std::sqrt(var / static_cast<double>(aucs.size()));
      rows.push_back({"aggregate", s, std::to_string(k), "",
                      format_double(mean), format_double(sd)});
    }

  SuiteResult out;
  out.cells = std::move(cells);
  fs::create_directories(out_root);
  out.summary_csv = fs::path(out_root) / "suite_summary.csv";
  write_csv(out.summary_csv, "kind,sampler,k,seed,auc,auc_std", rows);
  return out;
}

Matrix pca_top2(const Matrix& points, Matrix* components,
                Vector* eigenvalues) {
  if (points.rows() < 2)
    throw ValidationError("pca_top2: need at least 2 points");
  if (points.cols() < 2)
    throw ValidationError("pca_top2: need dimension >= 2");
  RowVector mean = points.colwise().mean();
  Matrix centered = points.rowwise() - mean;
  Matrix cov = centered.transpose() * centered /
               static_cast<double>(points.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericError("pca_top2: eigensolver failed");
  // eigenvalues ascend; take the last two columns as the top components
  const Eigen::Index d = cov.rows();
  Matrix comp(d, 2);
  comp.col(0) = solver.eigenvectors().col(d - 1);
  comp.col(1) = solver.eigenvectors().col(d - 2);
  for (int c = 0; c < 2; ++c) {
    Eigen::Index imax;
    comp.col(c).cwiseAbs().maxCoeff(&imax);
    if (comp(imax, c) < 0.0) comp.col(c) = -comp.col(c);
  }
  if (components) *components = comp;
  if (eigenvalues) {
    *eigenvalues = solver.eigenvalues().reverse();
  }
  return centered * comp;
}

std::filesystem::path export_projection(const ExperimentConfig& cfg,
                                        const RunPaths& paths) {
  Checkpoint ckpt = load_checkpoint(paths.embedder_ckpt.string());
  require_hash(ckpt.config_hash, cfg, "embedder.ckpt");
  EmbedderModel model = embedder_from_checkpoint(ckpt, cfg);
  GraphDataset train = load_stage_dataset(paths.train_data, cfg);

  Matrix emb = embed_dataset(train, model.encoder);
  std::vector<int> assign = assign_all(emb, model.prototypes);
  std::vector<std::string> labels;
  for (int a : assign) labels.push_back("cluster" + std::to_string(a));

  Matrix points = emb;
  std::ifstream f(paths.outliers);
  if (f) {
    std::stringstream ss;
    ss << f.rdbuf();
    json in = json::parse(ss.str());
    std::string origin = in.at("origin").get<std::string>();
    if (origin != "none") {
      const json& jl = in.at("latents");
      Matrix lat(jl.size(), emb.cols());
      for (std::size_t i = 0; i < jl.size(); ++i)
        for (Eigen::Index j = 0; j < emb.cols(); ++j)
          lat(static_cast<Eigen::Index>(i), j) = jl[i][j].get<double>();
      Matrix stacked(points.rows() + lat.rows(), points.cols());
      stacked << points, lat;
      points = stacked;
      for (Eigen::Index i = 0; i < lat.rows(); ++i) labels.push_back(origin);
    }
  }

  Matrix proj = pca_top2(points);
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < proj.rows(); ++i)
    rows.push_back({format_double(proj(i, 0)), format_double(proj(i, 1)),
                    labels[static_cast<std::size_t>(i)]});
  fs::path out = paths.dir / "projection.csv";
  write_csv(out, "x,y,label", rows);
  return out;
}

}  // namespace pgos
