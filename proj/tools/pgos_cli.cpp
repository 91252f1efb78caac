// pgos: policy-guided outlier synthesis for graph OOD detection.
//
// Subcommands mirror the pipeline stages; `run` executes all of them and
// `suite` fans a config out over seeds, samplers and prototype counts.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pgos/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "runs";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Path to a config JSON file");
  cmd->add_option("--out", args.out_dir, "Output directory for run artifacts");
  cmd->add_option("--seed", args.seed, "Seed override")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--override", args.overrides,
                  "Dotted-path config patch, e.g. embedder.tau=0.1");
}

pgos::ExperimentConfig resolve_config(const CommonArgs& args) {
  std::string text;
  if (args.config_path.empty()) {
    text = pgos::config_to_json(pgos::default_config());
  } else {
    std::ifstream f(args.config_path, std::ios::binary);
    if (!f)
      throw pgos::ValidationError("cannot read config " + args.config_path);
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  for (const std::string& ov : args.overrides)
    text = pgos::apply_override(text, ov);
  pgos::ExperimentConfig cfg = pgos::config_from_json(text);
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
  return out;
}

std::vector<std::string> parse_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

std::vector<int> parse_ints(const std::string& csv) {
  std::vector<int> out;
  if (csv.empty()) return out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-guided outlier synthesis for graph OOD detection"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string stage_names[] = {"gen-data",   "train-embed",    "train-policy",
                               "synthesize", "train-detector", "evaluate",
                               "run",        "project"};
  std::string stage_help[] = {
      "Generate or ingest the dataset splits",
      "Train the prototypical graph autoencoder",
      "Train the SAC exploration policy",
      "Sample latents and decode pseudo-outlier graphs",
      "Fine-tune the outlier-regularized detector",
      "Score the test splits and write metrics.json",
      "Run the full pipeline end to end",
      "Export a 2-D PCA projection of embeddings and latents"};
  for (int i = 0; i < 8; ++i)
    add_common(app.add_subcommand(stage_names[i], stage_help[i]), args);

  CLI::App* suite = app.add_subcommand(
      "suite", "Cross product of seeds x samplers (x K sweep)");
  add_common(suite, args);
  std::string seeds_csv = "1,2,3,4,5";
  std::string samplers_csv = "pgos,gaussian,none";
  std::string ksweep_csv;
  int jobs = 1;
  suite->add_option("--seeds", seeds_csv, "Comma-separated seed list");
  suite->add_option("--samplers", samplers_csv, "Comma-separated sampler list");
  suite->add_option("--k-sweep", ksweep_csv,
                    "Optional comma-separated prototype counts");
  suite->add_option("--jobs", jobs, "Parallel suite cells");

  CLI11_PARSE(app, argc, argv);

  try {
    pgos::ExperimentConfig cfg = resolve_config(args);
    std::string sub = app.get_subcommands().front()->get_name();

    if (sub == "suite") {
      pgos::SuiteResult res =
          pgos::run_suite(cfg, parse_seeds(seeds_csv), parse_list(samplers_csv),
                          parse_ints(ksweep_csv), args.out_dir, jobs);
      std::cout << "suite summary: " << res.summary_csv.string() << "\n";
      return 0;
    }

    if (sub == "run") {
      pgos::Metrics m = pgos::run_pipeline(cfg, args.out_dir);
      pgos::RunPaths paths = pgos::run_paths(args.out_dir, cfg);
      std::cout << "auc=" << pgos::format_double(m.auc)
                << " metrics=" << paths.metrics.string() << "\n";
      return 0;
    }

    pgos::RunPaths paths = pgos::run_paths(args.out_dir, cfg);
    if (sub == "gen-data") {
      pgos::stage_gen_data(cfg, paths);
      std::cout << "datasets written under " << paths.dir.string() << "\n";
    } else if (sub == "train-embed") {
      pgos::stage_train_embed(cfg, paths);
      std::cout << "embedder checkpoint: " << paths.embedder_ckpt.string()
                << "\n";
    } else if (sub == "train-policy") {
      pgos::stage_train_policy(cfg, paths);
      std::cout << "policy checkpoint: " << paths.policy_ckpt.string() << "\n";
    } else if (sub == "synthesize") {
      pgos::stage_synthesize(cfg, paths);
      std::cout << "outliers: " << paths.outliers.string() << "\n";
    } else if (sub == "train-detector") {
      pgos::stage_train_detector(cfg, paths);
      std::cout << "detector checkpoint: " << paths.detector_ckpt.string()
                << "\n";
    } else if (sub == "evaluate") {
      pgos::Metrics m = pgos::stage_evaluate(cfg, paths);
      std::cout << "auc=" << pgos::format_double(m.auc)
                << " metrics=" << paths.metrics.string() << "\n";
    } else if (sub == "project") {
      auto out = pgos::export_projection(cfg, paths);
      std::cout << "projection: " << out.string() << "\n";
    }
    return 0;
  } catch (const pgos::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const pgos::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
