#pragma once

#include <optional>
#include <vector>

#include "pgos/latent_env.hpp"
#include "pgos/nn.hpp"

namespace pgos {

/// Squashed-Gaussian policy: relu trunk, linear mean and log-std heads,
/// tanh squashing scaled to the action bound. Log-std is clamped to [-5, 2].
struct ActorParams {
  nn::Mlp trunk;
  nn::Mlp mean_head;
  nn::Mlp logstd_head;
  double action_scale = 1.0;

  int action_dim() const { return mean_head.output_dim(); }
  std::vector<Matrix*> trainable_params();
};

struct CriticPair {
  nn::Mlp q1;
  nn::Mlp q2;
};

struct TemperatureState {
  double log_alpha = 0.0;
  double lr = 3e-4;
  double log_alpha_min = 0.0;
  double log_alpha_max = 0.0;

  double alpha() const { return std::exp(log_alpha); }
};

struct Transition {
  RowVector state;
  RowVector action;
  double reward = 0.0;
  RowVector next_state;
  bool done = false;
  double h_target = 0.0;  // Eq.-10 style target entropy cached at state
};

/// Bounded FIFO ring with uniform without-replacement batch sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::vector<const Transition*> sample(std::size_t batch, RngStream& rng) const;

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_pushed() const { return pushed_; }
  const Transition& at(std::size_t i) const { return data_[i]; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::uint64_t pushed_ = 0;
  std::vector<Transition> data_;
};

struct SacConfig {
  double discount = 0.99;
  double polyak = 0.005;
  int buffer_capacity = 50000;
  int batch_size = 128;
  int total_steps = 30000;
  int warmup_steps = 1000;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  int hidden_dim = 64;
  double init_alpha = 0.1;
  double alpha_min = 1e-6;
  double alpha_max = 0.5;
  double init_log_std = -1.0;  // log-std head bias at initialization
  int update_every = 2;        // environment steps per gradient update
  int log_window = 1000;
};

void validate_sac_config(const SacConfig& cfg);

struct SacAgent {
  ActorParams actor;
  CriticPair critics;
  CriticPair targets;
  TemperatureState temperature;
  // targets change only in polyak_update; the revision counter backs the
  // "targets untouched elsewhere" test
  std::uint64_t target_revision = 0;

  std::vector<std::pair<std::string, Matrix*>> named_tensors();
};

SacAgent make_agent(int state_dim, int action_dim, double action_scale,
                    const SacConfig& cfg, RngStream& rng);

struct ActionSample {
  RowVector action;
  std::optional<double> log_prob;  // empty in deterministic mode
};

enum class SampleMode { Stochastic, Deterministic };

ActionSample sample_action(const RowVector& state, const ActorParams& actor,
                           SampleMode mode, RngStream& rng);

/// Mean and clamped log-std of the policy's pre-squash Gaussian.
void actor_gaussian(const ActorParams& actor, const Matrix& states,
                    Matrix& mean, Matrix& log_std);

/// Log-density of the squashed action with the tanh change of variables,
/// evaluated from the pre-squash draw u.
double squashed_log_prob(const RowVector& u, const RowVector& mean,
                         const RowVector& log_std, double action_scale);

double q_value(const nn::Mlp& critic, const RowVector& s, const RowVector& a);
double q_min(const RowVector& s, const RowVector& a, const CriticPair& critics);

/// Batched stochastic draws with log-probs (one normal per coordinate, row
/// by row).
void sample_batch_actions(const ActorParams& actor, const Matrix& states,
                          RngStream& rng, Matrix& actions, Vector& log_probs);

/// y = r + gamma (1-done) (min target-Q(s',a') - alpha log pi(a'|s')) with
/// a' freshly sampled from the live actor.
Vector bellman_targets(const std::vector<const Transition*>& batch,
                       const SacAgent& agent, double discount, RngStream& rng);

/// Reparameterized actor loss graph with the noise fixed by the caller:
/// mean[ alpha log pi(a|s) - Qmin(s,a) ]. Critic parameters enter as
/// constants. Used by the update step, the tests and the gradient checks.
ad::Var actor_loss_graph(ad::Tape& tape, const ActorParams& actor,
                         const CriticPair& critics, const Matrix& states,
                         const Matrix& eps, double alpha,
                         std::vector<ad::Var>* actor_param_vars,
                         ad::Var* log_probs_out);

struct UpdateResult {
  double critic_loss = 0.0;  // mean of the two critic losses
  double actor_loss = 0.0;
  double entropy = 0.0;  // mean of -log pi over the actor batch
};

/// Soft Bellman regression of both critics against
/// r + gamma (1-done) (min target-Q(s',a') - alpha log pi(a'|s')).
std::pair<double, double> critic_update(
    const std::vector<const Transition*>& batch, SacAgent& agent,
    double discount, nn::Adam& opt1, nn::Adam& opt2, RngStream& rng);

/// Reparameterized policy-gradient step on
/// mean[ alpha log pi(a|s) - Qmin(s, a) ]; critics are constants here.
UpdateResult actor_update(const std::vector<const Transition*>& batch,
                          SacAgent& agent, nn::Adam& opt, RngStream& rng);

/// log_alpha <- log_alpha - lr * mean(-log pi(a|s) - h_target), clamped to
/// the configured range.
TemperatureState alpha_update(const std::vector<const Transition*>& batch,
                              const ActorParams& actor,
                              const TemperatureState& temp, RngStream& rng);

void polyak_update(SacAgent& agent, double tau);

struct PolicyLogRow {
  int step = 0;
  double episode_reward_mean = 0.0;
  double entropy_mean = 0.0;
  double alpha = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

struct TrainedPolicy {
  SacAgent agent;
  std::vector<PolicyLogRow> log;
};

TrainedPolicy train_policy(const ClusterStats& stats,
                           const GlobalBoundary& boundary,
                           const PrototypeSet& protos, const EnvConfig& env_cfg,
                           const SacConfig& cfg, std::uint64_t seed);

struct CollectConfig {
  int count = 0;
  double burn_in_fraction = 0.25;
  double eps_keep = 0.05;
  int episode_cap = 0;  // 0: derived as 50 * count / max_steps
};

struct CollectedLatents {
  Matrix latents;  // rows are kept states
  bool complete = true;
  int episodes_used = 0;
};

/// Runs episodes under the stochastic policy, keeping post-burn-in states
/// with reward >= -eps_keep. Returns a partial set with a warning when the
/// episode cap is reached first.
CollectedLatents collect_outlier_latents(const ActorParams& actor,
                                         const ClusterStats& stats,
                                         const GlobalBoundary& boundary,
                                         const PrototypeSet& protos,
                                         const EnvConfig& env_cfg,
                                         const CollectConfig& cfg,
                                         std::uint64_t seed);

}  // namespace pgos
