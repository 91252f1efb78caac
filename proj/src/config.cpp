#include "pgos/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pgos/rng.hpp"

namespace pgos {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw ValidationError("config: unknown key '" + key + "' in " + ctx);
  }
}

json family_to_json(const FamilySpec& f) {
  json j;
  j["kind"] = f.kind;
  if (f.kind == "erdos_renyi") j["p"] = f.p;
  if (f.kind == "barabasi_albert") j["m"] = f.m;
  if (f.kind == "two_community") {
    j["p_in"] = f.p_in;
    j["p_out"] = f.p_out;
  }
  return j;
}

FamilySpec family_from_json(const json& j) {
  check_keys(j, {"kind", "p", "m", "p_in", "p_out"}, "family");
  FamilySpec f;
  f.kind = j.at("kind").get<std::string>();
  f.p = j.value("p", 0.0);
  f.m = j.value("m", 0);
  f.p_in = j.value("p_in", 0.0);
  f.p_out = j.value("p_out", 0.0);
  return f;
}

}  // namespace

EnvConfig ExperimentConfig::resolve_env(double r_max) const {
  EnvConfig out;
  out.delta_multiplier = env.delta_multiplier;
  out.max_steps = env.max_steps;
  out.action_scale = env.action_scale_factor * r_max;
  out.h_max = env.h_max > 0.0 ? env.h_max
                              : static_cast<double>(embedder.latent_dim);
  return out;
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.dataset.synthetic.id_families = {
      {"erdos_renyi", 0.1, 0, 0.0, 0.0},
      {"erdos_renyi", 0.3, 0, 0.0, 0.0},
  };
  cfg.dataset.synthetic.ood_families = {
      {"two_community", 0.0, 0, 0.35, 0.05},
  };
  cfg.dataset.synthetic.n_min = 20;
  cfg.dataset.synthetic.n_max = 40;
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json out;
  out["seed"] = cfg.seed;
  out["sampler"] = cfg.sampler;

  json ds;
  ds["kind"] = cfg.dataset.kind;
  json syn;
  json idf = json::array(), oodf = json::array();
  for (const FamilySpec& f : cfg.dataset.synthetic.id_families)
    idf.push_back(family_to_json(f));
  for (const FamilySpec& f : cfg.dataset.synthetic.ood_families)
    oodf.push_back(family_to_json(f));
  syn["id_families"] = idf;
  syn["ood_families"] = oodf;
  syn["n_min"] = cfg.dataset.synthetic.n_min;
  syn["n_max"] = cfg.dataset.synthetic.n_max;
  ds["synthetic"] = syn;
  ds["train_per_family"] = cfg.dataset.train_per_family;
  ds["test_per_family"] = cfg.dataset.test_per_family;
  ds["test_ood_count"] = cfg.dataset.test_ood_count;
  json tu;
  tu["id_dir"] = cfg.dataset.tu.id_dir;
  tu["ood_dir"] = cfg.dataset.tu.ood_dir;
  tu["test_fraction"] = cfg.dataset.tu.test_fraction;
  ds["tu"] = tu;
  out["dataset"] = ds;

  json emb;
  emb["latent_dim"] = cfg.embedder.latent_dim;
  emb["hidden_dim"] = cfg.embedder.hidden_dim;
  emb["num_layers"] = cfg.embedder.num_layers;
  emb["num_prototypes"] = cfg.embedder.num_prototypes;
  emb["tau"] = cfg.embedder.tau;
  emb["lambda_struct"] = cfg.embedder.lambda_struct;
  emb["gamma_recon"] = cfg.embedder.gamma_recon;
  emb["epochs"] = cfg.embedder.epochs;
  emb["batch_size"] = cfg.embedder.batch_size;
  emb["lr"] = cfg.embedder.lr;
  emb["noise_dim"] = cfg.embedder.noise_dim;
  emb["decoder_hidden"] = cfg.embedder.decoder_hidden;
  emb["edge_drop_p"] = cfg.embedder.augmentation.edge_drop_p;
  emb["feat_mask_p"] = cfg.embedder.augmentation.feat_mask_p;
  out["embedder"] = emb;

  json env;
  env["delta_multiplier"] = cfg.env.delta_multiplier;
  env["max_steps"] = cfg.env.max_steps;
  env["action_scale_factor"] = cfg.env.action_scale_factor;
  env["h_max"] = cfg.env.h_max;
  out["env"] = env;

  json sac;
  sac["discount"] = cfg.sac.discount;
  sac["polyak"] = cfg.sac.polyak;
  sac["buffer_capacity"] = cfg.sac.buffer_capacity;
  sac["batch_size"] = cfg.sac.batch_size;
  sac["total_steps"] = cfg.sac.total_steps;
  sac["warmup_steps"] = cfg.sac.warmup_steps;
  sac["actor_lr"] = cfg.sac.actor_lr;
  sac["critic_lr"] = cfg.sac.critic_lr;
  sac["alpha_lr"] = cfg.sac.alpha_lr;
  sac["hidden_dim"] = cfg.sac.hidden_dim;
  sac["init_alpha"] = cfg.sac.init_alpha;
  sac["init_log_std"] = cfg.sac.init_log_std;
  sac["update_every"] = cfg.sac.update_every;
  sac["alpha_min"] = cfg.sac.alpha_min;
  sac["alpha_max"] = cfg.sac.alpha_max;
  sac["log_window"] = cfg.sac.log_window;
  out["sac"] = sac;

  json synth;
  synth["edge_threshold"] = cfg.synth.edge_threshold;
  synth["eps_keep"] = cfg.synth.eps_keep;
  synth["burn_in_fraction"] = cfg.synth.burn_in_fraction;
  synth["sigma_factor"] = cfg.synth.sigma_factor;
  synth["episode_cap_factor"] = cfg.episode_cap_factor;
  out["synth"] = synth;

  json det;
  det["beta"] = cfg.detector.beta;
  det["epochs"] = cfg.detector.epochs;
  det["batch_size"] = cfg.detector.batch_size;
  det["lr"] = cfg.detector.lr;
  det["contrastive_weight"] = cfg.detector.contrastive_weight;
  out["detector"] = det;

  return out.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  json in;
  try {
    in = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  check_keys(in,
             {"seed", "sampler", "dataset", "embedder", "env", "sac", "synth",
              "detector"},
             "top level");
  ExperimentConfig cfg = default_config();
  cfg.seed = in.value("seed", cfg.seed);
  cfg.sampler = in.value("sampler", cfg.sampler);

  if (in.contains("dataset")) {
    const json& ds = in["dataset"];
    check_keys(ds,
               {"kind", "synthetic", "train_per_family", "test_per_family",
                "test_ood_count", "tu"},
               "dataset");
    cfg.dataset.kind = ds.value("kind", cfg.dataset.kind);
    cfg.dataset.train_per_family =
        ds.value("train_per_family", cfg.dataset.train_per_family);
    cfg.dataset.test_per_family =
        ds.value("test_per_family", cfg.dataset.test_per_family);
    cfg.dataset.test_ood_count =
        ds.value("test_ood_count", cfg.dataset.test_ood_count);
    if (ds.contains("synthetic")) {
      const json& syn = ds["synthetic"];
      check_keys(syn, {"id_families", "ood_families", "n_min", "n_max"},
                 "dataset.synthetic");
      if (syn.contains("id_families")) {
        cfg.dataset.synthetic.id_families.clear();
        for (const auto& jf : syn["id_families"])
          cfg.dataset.synthetic.id_families.push_back(family_from_json(jf));
      }
      if (syn.contains("ood_families")) {
        cfg.dataset.synthetic.ood_families.clear();
        for (const auto& jf : syn["ood_families"])
          cfg.dataset.synthetic.ood_families.push_back(family_from_json(jf));
      }
      cfg.dataset.synthetic.n_min = syn.value("n_min", cfg.dataset.synthetic.n_min);
      cfg.dataset.synthetic.n_max = syn.value("n_max", cfg.dataset.synthetic.n_max);
    }
    if (ds.contains("tu")) {
      const json& tu = ds["tu"];
      check_keys(tu, {"id_dir", "ood_dir", "test_fraction"}, "dataset.tu");
      cfg.dataset.tu.id_dir = tu.value("id_dir", cfg.dataset.tu.id_dir);
      cfg.dataset.tu.ood_dir = tu.value("ood_dir", cfg.dataset.tu.ood_dir);
      cfg.dataset.tu.test_fraction =
          tu.value("test_fraction", cfg.dataset.tu.test_fraction);
    }
  }

  if (in.contains("embedder")) {
    const json& emb = in["embedder"];
    check_keys(emb,
               {"latent_dim", "hidden_dim", "num_layers", "num_prototypes",
                "tau", "lambda_struct", "gamma_recon", "epochs", "batch_size",
                "lr", "noise_dim", "decoder_hidden", "edge_drop_p",
                "feat_mask_p"},
               "embedder");
    EmbedderConfig& e = cfg.embedder;
    e.latent_dim = emb.value("latent_dim", e.latent_dim);
    e.hidden_dim = emb.value("hidden_dim", e.hidden_dim);
    e.num_layers = emb.value("num_layers", e.num_layers);
    e.num_prototypes = emb.value("num_prototypes", e.num_prototypes);
    e.tau = emb.value("tau", e.tau);
    e.lambda_struct = emb.value("lambda_struct", e.lambda_struct);
    e.gamma_recon = emb.value("gamma_recon", e.gamma_recon);
    e.epochs = emb.value("epochs", e.epochs);
    e.batch_size = emb.value("batch_size", e.batch_size);
    e.lr = emb.value("lr", e.lr);
    e.noise_dim = emb.value("noise_dim", e.noise_dim);
    e.decoder_hidden = emb.value("decoder_hidden", e.decoder_hidden);
    e.augmentation.edge_drop_p =
        emb.value("edge_drop_p", e.augmentation.edge_drop_p);
    e.augmentation.feat_mask_p =
        emb.value("feat_mask_p", e.augmentation.feat_mask_p);
  }

  if (in.contains("env")) {
    const json& env = in["env"];
    check_keys(env,
               {"delta_multiplier", "max_steps", "action_scale_factor",
                "h_max"},
               "env");
    cfg.env.delta_multiplier =
        env.value("delta_multiplier", cfg.env.delta_multiplier);
    cfg.env.max_steps = env.value("max_steps", cfg.env.max_steps);
    cfg.env.action_scale_factor =
        env.value("action_scale_factor", cfg.env.action_scale_factor);
    cfg.env.h_max = env.value("h_max", cfg.env.h_max);
  }

  if (in.contains("sac")) {
    const json& sac = in["sac"];
    check_keys(sac,
               {"discount", "polyak", "buffer_capacity", "batch_size",
                "total_steps", "warmup_steps", "actor_lr", "critic_lr",
                "alpha_lr", "hidden_dim", "init_alpha", "alpha_min",
                "alpha_max", "init_log_std", "update_every", "log_window"},
               "sac");
    SacConfig& s = cfg.sac;
    s.discount = sac.value("discount", s.discount);
    s.polyak = sac.value("polyak", s.polyak);
    s.buffer_capacity = sac.value("buffer_capacity", s.buffer_capacity);
    s.batch_size = sac.value("batch_size", s.batch_size);
    s.total_steps = sac.value("total_steps", s.total_steps);
    s.warmup_steps = sac.value("warmup_steps", s.warmup_steps);
    s.actor_lr = sac.value("actor_lr", s.actor_lr);
    s.critic_lr = sac.value("critic_lr", s.critic_lr);
    s.alpha_lr = sac.value("alpha_lr", s.alpha_lr);
    s.hidden_dim = sac.value("hidden_dim", s.hidden_dim);
    s.init_alpha = sac.value("init_alpha", s.init_alpha);
    s.init_log_std = sac.value("init_log_std", s.init_log_std);
    s.update_every = sac.value("update_every", s.update_every);
    s.alpha_min = sac.value("alpha_min", s.alpha_min);
    s.alpha_max = sac.value("alpha_max", s.alpha_max);
    s.log_window = sac.value("log_window", s.log_window);
  }

  if (in.contains("synth")) {
    const json& synth = in["synth"];
    check_keys(synth,
               {"edge_threshold", "eps_keep", "burn_in_fraction",
                "sigma_factor", "episode_cap_factor"},
               "synth");
    cfg.synth.edge_threshold =
        synth.value("edge_threshold", cfg.synth.edge_threshold);
    cfg.synth.eps_keep = synth.value("eps_keep", cfg.synth.eps_keep);
    cfg.synth.burn_in_fraction =
        synth.value("burn_in_fraction", cfg.synth.burn_in_fraction);
    cfg.synth.sigma_factor = synth.value("sigma_factor", cfg.synth.sigma_factor);
    cfg.episode_cap_factor =
        synth.value("episode_cap_factor", cfg.episode_cap_factor);
  }

  if (in.contains("detector")) {
    const json& det = in["detector"];
    check_keys(det, {"beta", "epochs", "batch_size", "lr", "contrastive_weight"},
               "detector");
    cfg.detector.beta = det.value("beta", cfg.detector.beta);
    cfg.detector.epochs = det.value("epochs", cfg.detector.epochs);
    cfg.detector.batch_size = det.value("batch_size", cfg.detector.batch_size);
    cfg.detector.lr = det.value("lr", cfg.detector.lr);
    cfg.detector.contrastive_weight =
        det.value("contrastive_weight", cfg.detector.contrastive_weight);
  }

  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write config " + path);
  f << config_to_json(cfg) << "\n";
}

std::string apply_override(const std::string& config_json,
                           const std::string& key_eq_value) {
  auto eq = key_eq_value.find('=');
  if (eq == std::string::npos)
    throw ValidationError("override must look like key.path=value, got '" +
                          key_eq_value + "'");
  std::string path = key_eq_value.substr(0, eq);
  std::string value = key_eq_value.substr(eq + 1);

  json root;
  try {
    root = json::parse(config_json);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ValidationError("override: empty key path");

  json* node = &root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i]))
      throw ValidationError("override: unknown path component '" + parts[i] +
                            "' in '" + path + "'");
    node = &(*node)[parts[i]];
  }
  if (!node->contains(parts.back()))
    throw ValidationError("config: unknown key '" + parts.back() +
                          "' in override '" + path + "'");
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // plain string
  }
  (*node)[parts.back()] = parsed;
  return root.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = json::parse(config_to_json(cfg));
  j.erase("seed");
  std::string canonical = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : canonical) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.sampler != "pgos" && cfg.sampler != "gaussian" &&
      cfg.sampler != "uniform" && cfg.sampler != "none")
    throw ValidationError("config: sampler must be one of pgos|gaussian|uniform|none");
  if (cfg.dataset.kind != "synthetic" && cfg.dataset.kind != "tu")
    throw ValidationError("config: dataset.kind must be synthetic|tu");
  if (cfg.dataset.kind == "synthetic") {
    SyntheticSpec s = cfg.dataset.synthetic;
    s.graphs_per_family = std::max(1, cfg.dataset.train_per_family);
    s.ood_count = cfg.dataset.test_ood_count;
    validate_spec(s);
    if (cfg.dataset.train_per_family < 1 || cfg.dataset.test_per_family < 1 ||
        cfg.dataset.test_ood_count < 1)
      throw ValidationError("config: dataset split sizes must be >= 1");
  } else {
    if (cfg.dataset.tu.id_dir.empty())
      throw ValidationError("config: dataset.tu.id_dir is required");
    if (cfg.dataset.tu.test_fraction <= 0.0 ||
        cfg.dataset.tu.test_fraction >= 1.0)
      throw ValidationError("config: dataset.tu.test_fraction must lie in (0,1)");
  }

  const EmbedderConfig& e = cfg.embedder;
  if (e.latent_dim < 2 || e.hidden_dim < 1 || e.num_layers < 1)
    throw ValidationError("config: embedder dims invalid");
  if (e.num_prototypes < 2)
    throw ValidationError("config: embedder.num_prototypes must be >= 2");
  if (e.tau <= 0.0) throw ValidationError("config: embedder.tau must be > 0");
  if (e.lambda_struct < 0.0 || e.gamma_recon < 0.0)
    throw ValidationError("config: embedder loss weights must be >= 0");
  if (e.epochs < 1 || e.batch_size < 2 || e.lr <= 0.0)
    throw ValidationError("config: embedder training block invalid");
  if (e.noise_dim < 1 || e.decoder_hidden < 1)
    throw ValidationError("config: embedder decoder block invalid");
  validate_augmentation(e.augmentation);

  if (cfg.env.delta_multiplier <= 0.0 || cfg.env.max_steps < 1 ||
      cfg.env.action_scale_factor <= 0.0 || cfg.env.h_max < 0.0)
    throw ValidationError("config: env block invalid");

  validate_sac_config(cfg.sac);
  validate_synth_config(cfg.synth);
  if (cfg.episode_cap_factor < 1)
    throw ValidationError("config: synth.episode_cap_factor must be >= 1");

  const DetectorConfig& d = cfg.detector;
  if (d.beta < 0.0 || d.epochs < 1 || d.batch_size < 2 || d.lr <= 0.0 ||
      d.contrastive_weight < 0.0)
    throw ValidationError("config: detector block invalid");
}

}  // namespace pgos
