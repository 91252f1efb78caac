#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pgos/pipeline.hpp"
#include "test_support.hpp"

using namespace pgos;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Tiny but complete config: every stage runs in well under a second.
ExperimentConfig smoke_config() {
  ExperimentConfig cfg = default_config();
  cfg.seed = 5;
  cfg.dataset.train_per_family = 10;
  cfg.dataset.test_per_family = 5;
  cfg.dataset.test_ood_count = 10;
  cfg.dataset.synthetic.n_min = 8;
  cfg.dataset.synthetic.n_max = 12;
  cfg.embedder.latent_dim = 6;
  cfg.embedder.hidden_dim = 8;
  cfg.embedder.num_prototypes = 2;
  cfg.embedder.epochs = 2;
  cfg.embedder.batch_size = 8;
  cfg.embedder.noise_dim = 4;
  cfg.embedder.decoder_hidden = 8;
  cfg.sac.hidden_dim = 8;
  cfg.sac.total_steps = 300;
  cfg.sac.warmup_steps = 100;
  cfg.sac.batch_size = 16;
  cfg.sac.buffer_capacity = 1000;
  cfg.sac.log_window = 100;
  cfg.detector.epochs = 2;
  cfg.detector.batch_size = 8;
  cfg.episode_cap_factor = 200;
  // the barely-trained smoke policy rarely reaches reward-zero voids;
  // a loose filter keeps collection fast and non-empty
  cfg.synth.eps_keep = 5.0;
  return cfg;
}

fs::path temp_out(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("pgos_run_" + tag);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config: round-trip, defaults, unknown keys rejected") {
  ExperimentConfig cfg = default_config();
  std::string text = config_to_json(cfg);
  ExperimentConfig back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(config_hash(back) == config_hash(cfg));

  CHECK_THROWS_WITH_AS(config_from_json("{\"sampelr\":\"pgos\"}"),
                       doctest::Contains("unknown key"), ValidationError);
  CHECK_THROWS_WITH_AS(
      config_from_json("{\"embedder\":{\"tau\":-0.5}}"),
      doctest::Contains("tau"), ValidationError);
  CHECK_THROWS_AS(config_from_json("{\"sampler\":\"magic\"}"),
                  ValidationError);
  CHECK_THROWS_AS(config_from_json("not json"), ParseError);
}

TEST_CASE("config: seed excluded from the hash, sampler included") {
  ExperimentConfig a = default_config();
  ExperimentConfig b = a;
  b.seed = a.seed + 100;
  CHECK(config_hash(a) == config_hash(b));
  b.sampler = "gaussian";
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("config overrides: dotted paths, type inference, bad paths") {
  std::string base = config_to_json(default_config());
  std::string patched = apply_override(base, "embedder.num_prototypes=8");
  patched = apply_override(patched, "sampler=gaussian");
  patched = apply_override(patched, "sac.discount=0.5");
  ExperimentConfig cfg = config_from_json(patched);
  CHECK(cfg.embedder.num_prototypes == 8);
  CHECK(cfg.sampler == "gaussian");
  CHECK(cfg.sac.discount == 0.5);

  CHECK_THROWS_WITH_AS(apply_override(base, "embedder.nope=3"),
                       doctest::Contains("unknown key"), ValidationError);
  CHECK_THROWS_AS(apply_override(base, "no_equals_sign"), ValidationError);
  CHECK_THROWS_AS(apply_override(base, "embedder.typo.deep=1"),
                  ValidationError);
}

TEST_CASE("checkpoint: tensors round-trip exactly, shape mismatches rejected") {
  EmbedderModel m = testsup::tiny_embedder(3, 501);
  Checkpoint ckpt = to_checkpoint(m, "feedc0de00000000", 9);
  std::string text = checkpoint_to_json(ckpt);
  Checkpoint back = checkpoint_from_json(text);
  CHECK(back.kind == "embedder");
  CHECK(back.config_hash == "feedc0de00000000");
  CHECK(back.seed == 9);
  for (const auto& [name, mat] : ckpt.tensors) {
    REQUIRE(back.tensors.count(name) == 1);
    CHECK(back.tensors.at(name) == mat);  // bit-exact through JSON
  }

  Checkpoint bad = back;
  bad.tensors["protos"] = Matrix::Zero(1, 1);
  EmbedderModel shape = testsup::tiny_embedder(3, 502);
  CHECK_THROWS_WITH_AS(restore_tensors(bad, shape.named_tensors()),
                       doctest::Contains("shape"), ValidationError);
  bad.tensors.erase("protos");
  CHECK_THROWS_WITH_AS(restore_tensors(bad, shape.named_tensors()),
                       doctest::Contains("missing tensor"), ValidationError);
}

TEST_CASE("pca: 2-D input is a rigid rotation, row count preserved") {
  RngStream rng(503);
  Matrix pts(40, 2);
  for (int i = 0; i < 40; ++i) {
    pts(i, 0) = rng.normal() * 3.0;
    pts(i, 1) = pts(i, 0) * 0.5 + rng.normal();
  }
  Matrix proj = pca_top2(pts);
  REQUIRE(proj.rows() == 40);
  REQUIRE(proj.cols() == 2);
  for (int i = 0; i < 40; ++i)
    for (int j = i + 1; j < 40; ++j) {
      double before = (pts.row(i) - pts.row(j)).norm();
      double after = (proj.row(i) - proj.row(j)).norm();
      CHECK(std::abs(before - after) < 1e-9);
    }
}

TEST_CASE("pca subspace matches a Jacobi eigensolver oracle") {
  RngStream rng(504);
  Matrix pts(60, 5);
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 5; ++j) pts(i, j) = rng.normal() * (j + 1);
  Matrix components;
  Vector eigenvalues;
  Matrix proj = pca_top2(pts, &components, &eigenvalues);

  RowVector mean = pts.colwise().mean();
  Matrix centered = pts.rowwise() - mean;
  Matrix cov = centered.transpose() * centered / 60.0;
  Vector jvals;
  Matrix jvecs;
  testsup::jacobi_eigen(cov, jvals, jvecs);
  // order by descending eigenvalue
  std::vector<int> order(5);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return jvals(a) > jvals(b); });

  CHECK(eigenvalues(0) == doctest::Approx(jvals(order[0])).epsilon(1e-8));
  CHECK(eigenvalues(1) == doctest::Approx(jvals(order[1])).epsilon(1e-8));
  // same subspace: components agree up to sign
  for (int c = 0; c < 2; ++c) {
    double dot = std::abs(components.col(c).dot(jvecs.col(order[c])));
    CHECK(dot == doctest::Approx(1.0).epsilon(1e-8));
  }
  // reconstruction error from the top-2 subspace matches the oracle's
  double impl_err = (centered - proj * components.transpose()).squaredNorm();
  Matrix jproj = centered * jvecs.col(order[0]);
  Matrix jproj2 = centered * jvecs.col(order[1]);
  double oracle_err = centered.squaredNorm() - jproj.squaredNorm() -
                      jproj2.squaredNorm();
  CHECK(impl_err == doctest::Approx(oracle_err).epsilon(1e-8));
}

TEST_CASE("pipeline smoke run: all stages, artifacts, determinism [slow]") {
  ExperimentConfig cfg = smoke_config();
  fs::path out = temp_out("smoke");

  Metrics m = run_pipeline(cfg, out.string());
  CHECK(m.n_id == 10);
  CHECK(m.n_ood == 10);
  CHECK(m.auc >= 0.0);
  CHECK(m.auc <= 1.0);

  RunPaths paths = run_paths(out.string(), cfg);
  for (const fs::path* p :
       {&paths.config, &paths.train_data, &paths.test_id_data,
        &paths.test_ood_data, &paths.embedder_ckpt, &paths.stats,
        &paths.policy_ckpt, &paths.outliers, &paths.detector_ckpt,
        &paths.scores_csv, &paths.metrics})
    CHECK(fs::exists(*p));

  // byte-identical metrics on a re-run with the same config and seed
  std::string metrics_a = slurp(paths.metrics);
  run_pipeline(cfg, out.string());
  CHECK(slurp(paths.metrics) == metrics_a);

  // projection export over train embeddings + latents
  fs::path proj = export_projection(cfg, paths);
  std::string text = slurp(proj);
  CHECK(text.rfind("x,y,label", 0) == 0);
  // one header + train rows + outlier rows
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 20 + 20);
}

TEST_CASE("stage isolation: sampler choice only affects synthesis onward [slow]") {
  ExperimentConfig pg = smoke_config();
  pg.sampler = "pgos";
  ExperimentConfig ga = smoke_config();
  ga.sampler = "gaussian";

  fs::path out = temp_out("isolation");
  run_pipeline(pg, out.string());
  run_pipeline(ga, out.string());
  RunPaths p1 = run_paths(out.string(), pg);
  RunPaths p2 = run_paths(out.string(), ga);
  CHECK(p1.dir != p2.dir);

  // identical data and embedder artifacts except the recorded hash
  Checkpoint e1 = load_checkpoint(p1.embedder_ckpt.string());
  Checkpoint e2 = load_checkpoint(p2.embedder_ckpt.string());
  CHECK(e1.config_hash != e2.config_hash);
  for (const auto& [name, mat] : e1.tensors)
    CHECK(e2.tensors.at(name) == mat);

  // but the outlier latents differ
  CHECK(slurp(p1.outliers) != slurp(p2.outliers));
}

TEST_CASE("downstream stages refuse mismatched config hashes [slow]") {
  ExperimentConfig cfg = smoke_config();
  fs::path out = temp_out("hashcheck");
  RunPaths paths = run_paths(out.string(), cfg);
  stage_gen_data(cfg, paths);
  stage_train_embed(cfg, paths);

  // tamper: run train-policy under a modified config but the same run dir
  ExperimentConfig other = cfg;
  other.detector.beta = 0.75;  // any config change shifts the hash
  CHECK_THROWS_WITH_AS(stage_train_policy(other, paths),
                       doctest::Contains("hash"), ValidationError);
}

TEST_CASE("sampler=none trains the baseline detector [slow]") {
  ExperimentConfig none_cfg = smoke_config();
  none_cfg.sampler = "none";
  fs::path out = temp_out("none");
  Metrics m = run_pipeline(none_cfg, out.string());
  CHECK(m.auc >= 0.0);
  RunPaths paths = run_paths(out.string(), none_cfg);
  CHECK(!fs::exists(paths.policy_ckpt));  // no policy stage for none

  // matches a beta=0 run with outliers ignored (same seed, same detector)
  ExperimentConfig beta0 = smoke_config();
  beta0.sampler = "uniform";
  beta0.detector.beta = 0.0;
  fs::path out2 = temp_out("beta0");
  run_pipeline(beta0, out2.string());
  RunPaths p2 = run_paths(out2.string(), beta0);
  Checkpoint d1 = load_checkpoint(paths.detector_ckpt.string());
  Checkpoint d2 = load_checkpoint(p2.detector_ckpt.string());
  for (const auto& [name, mat] : d1.tensors)
    CHECK(d2.tensors.at(name) == mat);
}

TEST_CASE("suite emits per-cell rows plus aggregates [slow]") {
  ExperimentConfig cfg = smoke_config();
  fs::path out = temp_out("suite");
  SuiteResult res = run_suite(cfg, {1, 2}, {"gaussian", "none"}, {}, out.string(), 2);
  CHECK(res.cells.size() == 4);
  std::string text = slurp(res.summary_csv);
  // 1 header + 4 cells + 2 aggregates
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);

  SuiteResult again =
      run_suite(cfg, {1, 2}, {"gaussian", "none"}, {}, out.string(), 1);
  CHECK(slurp(again.summary_csv) == text);
}
