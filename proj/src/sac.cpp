#include "pgos/sac.hpp"

#include <cmath>
#include <unordered_set>

namespace pgos {

using ad::Tape;
using ad::Var;

namespace {
constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)

double log1m_tanh_sq(double u) {
  // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
  double sp = -2.0 * u;
  double softplus = std::max(sp, 0.0) + std::log1p(std::exp(-std::abs(sp)));
  return 2.0 * (std::log(2.0) - u - softplus);
}
}  // namespace

std::vector<Matrix*> ActorParams::trainable_params() {
  std::vector<Matrix*> out;
  for (Matrix* p : nn::collect(trunk)) out.push_back(p);
  for (Matrix* p : nn::collect(mean_head)) out.push_back(p);
  for (Matrix* p : nn::collect(logstd_head)) out.push_back(p);
  return out;
}

std::vector<std::pair<std::string, Matrix*>> SacAgent::named_tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  auto add_mlp = [&](const std::string& prefix, nn::Mlp& net) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      out.emplace_back(prefix + ".w" + std::to_string(l), &net.weights[l]);
      out.emplace_back(prefix + ".b" + std::to_string(l), &net.biases[l]);
    }
  };
  add_mlp("actor.trunk", actor.trunk);
  add_mlp("actor.mean", actor.mean_head);
  add_mlp("actor.logstd", actor.logstd_head);
  add_mlp("q1", critics.q1);
  add_mlp("q2", critics.q2);
  add_mlp("target_q1", targets.q1);
  add_mlp("target_q2", targets.q2);
  return out;
}

void validate_sac_config(const SacConfig& cfg) {
  if (cfg.discount < 0.0 || cfg.discount >= 1.0)
    throw ValidationError("sac: discount must lie in [0,1)");
  if (cfg.polyak <= 0.0 || cfg.polyak > 1.0)
    throw ValidationError("sac: polyak must lie in (0,1]");
  if (cfg.batch_size < 1 || cfg.buffer_capacity < cfg.batch_size)
    throw ValidationError("sac: need buffer_capacity >= batch_size >= 1");
  if (cfg.warmup_steps < cfg.batch_size)
    throw ValidationError("sac: warmup must cover at least one batch");
  if (cfg.total_steps < 1) throw ValidationError("sac: total_steps must be >= 1");
  if (cfg.init_alpha <= 0.0 || cfg.alpha_min <= 0.0 ||
      cfg.alpha_max < cfg.alpha_min)
    throw ValidationError("sac: alpha range invalid");
  if (cfg.init_log_std < -5.0 || cfg.init_log_std > 2.0)
    throw ValidationError("sac: init_log_std outside the clamp range [-5,2]");
  if (cfg.update_every < 1)
    throw ValidationError("sac: update_every must be >= 1");
}

SacAgent make_agent(int state_dim, int action_dim, double action_scale,
                    const SacConfig& cfg, RngStream& rng) {
  SacAgent agent;
  RngStream a_rng = rng.derive("actor");
  agent.actor.trunk = nn::make_mlp({state_dim, cfg.hidden_dim, cfg.hidden_dim},
                                   nn::Activation::Relu, a_rng);
  agent.actor.mean_head =
      nn::make_mlp({cfg.hidden_dim, action_dim}, nn::Activation::Relu, a_rng);
  agent.actor.logstd_head =
      nn::make_mlp({cfg.hidden_dim, action_dim}, nn::Activation::Relu, a_rng);
  // start with a moderate, below-target entropy so tuning acts upward
  agent.actor.logstd_head.biases[0].array() = cfg.init_log_std;
  agent.actor.action_scale = action_scale;

  RngStream c_rng = rng.derive("critics");
  std::vector<int> qdims = {state_dim + action_dim, cfg.hidden_dim,
                            cfg.hidden_dim, 1};
  agent.critics.q1 = nn::make_mlp(qdims, nn::Activation::Relu, c_rng);
  agent.critics.q2 = nn::make_mlp(qdims, nn::Activation::Relu, c_rng);
  agent.targets = agent.critics;  // exact copies at start

  agent.temperature.log_alpha = std::log(cfg.init_alpha);
  agent.temperature.lr = cfg.alpha_lr;
  agent.temperature.log_alpha_min = std::log(cfg.alpha_min);
  agent.temperature.log_alpha_max = std::log(cfg.alpha_max);
  return agent;
}

void actor_gaussian(const ActorParams& actor, const Matrix& states,
                    Matrix& mean, Matrix& log_std) {
  Matrix h = nn::mlp_forward(actor.trunk, states).cwiseMax(0.0);
  mean = nn::mlp_forward(actor.mean_head, h);
  log_std = nn::mlp_forward(actor.logstd_head, h)
                .cwiseMax(kLogStdMin)
                .cwiseMin(kLogStdMax);
}

double squashed_log_prob(const RowVector& u, const RowVector& mean,
                         const RowVector& log_std, double action_scale) {
  double lp = 0.0;
  for (Eigen::Index d = 0; d < u.size(); ++d) {
    double sd = std::exp(log_std(d));
    double zn = (u(d) - mean(d)) / sd;
    lp += -kHalfLog2Pi - log_std(d) - 0.5 * zn * zn;
    lp -= std::log(action_scale) + log1m_tanh_sq(u(d));
  }
  return lp;
}

ActionSample sample_action(const RowVector& state, const ActorParams& actor,
                           SampleMode mode, RngStream& rng) {
  Matrix mean, log_std;
  actor_gaussian(actor, state, mean, log_std);
  if (!mean.allFinite() || !log_std.allFinite())
    throw NumericError("sample_action: non-finite actor output");
  ActionSample out;
  if (mode == SampleMode::Deterministic) {
    out.action = actor.action_scale * mean.row(0).array().tanh();
    return out;
  }
  RowVector u(mean.cols());
  for (Eigen::Index d = 0; d < u.size(); ++d)
    u(d) = mean(0, d) + std::exp(log_std(0, d)) * rng.normal();
  out.action = actor.action_scale * u.array().tanh();
  out.log_prob =
      squashed_log_prob(u, mean.row(0), log_std.row(0), actor.action_scale);
  return out;
}

double q_value(const nn::Mlp& critic, const RowVector& s, const RowVector& a) {
  Matrix x(1, s.size() + a.size());
  x << s, a;
  return nn::mlp_forward(critic, x)(0, 0);
}

double q_min(const RowVector& s, const RowVector& a, const CriticPair& critics) {
  return std::min(q_value(critics.q1, s, a), q_value(critics.q2, s, a));
}

// --- replay buffer ---

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ValidationError("replay buffer capacity must be > 0");
  data_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[head_] = std::move(t);  // overwrite oldest
  }
  head_ = (head_ + 1) % capacity_;
  ++pushed_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch,
                                                    RngStream& rng) const {
  if (batch > data_.size())
    throw ValidationError("replay sample: batch larger than buffer contents");
  std::vector<std::size_t> picked;
  picked.reserve(batch);
  if (batch * 2 >= data_.size()) {
    // dense case: partial Fisher-Yates
    std::vector<std::size_t> idx(data_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < batch; ++i) {
      std::size_t j = static_cast<std::size_t>(
          rng.uniform_u64(i, idx.size() - 1));
      std::swap(idx[i], idx[j]);
      picked.push_back(idx[i]);
    }
  } else {
    std::unordered_set<std::size_t> seen;
    while (picked.size() < batch) {
      std::size_t j =
          static_cast<std::size_t>(rng.uniform_u64(0, data_.size() - 1));
      if (seen.insert(j).second) picked.push_back(j);
    }
  }
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t j : picked) out.push_back(&data_[j]);
  return out;
}

// --- updates ---

namespace {

struct BatchMatrices {
  Matrix states, actions, next_states;
  Vector rewards, dones, h_targets;
};

BatchMatrices stack(const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw ValidationError("update: empty batch");
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index sd = batch.front()->state.size();
  const Eigen::Index adim = batch.front()->action.size();
  BatchMatrices m;
  m.states.resize(b, sd);
  m.actions.resize(b, adim);
  m.next_states.resize(b, sd);
  m.rewards.resize(b);
  m.dones.resize(b);
  m.h_targets.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Transition& t = *batch[i];
    m.states.row(i) = t.state;
    m.actions.row(i) = t.action;
    m.next_states.row(i) = t.next_state;
    m.rewards(i) = t.reward;
    m.dones(i) = t.done ? 1.0 : 0.0;
    m.h_targets(i) = t.h_target;
  }
  return m;
}

Matrix critic_input(const Matrix& states, const Matrix& actions) {
  Matrix x(states.rows(), states.cols() + actions.cols());
  x << states, actions;
  return x;
}

}  // namespace

void sample_batch_actions(const ActorParams& actor, const Matrix& states,
                          RngStream& rng, Matrix& actions, Vector& log_probs) {
  Matrix mean, log_std;
  actor_gaussian(actor, states, mean, log_std);
  const Eigen::Index b = states.rows(), adim = mean.cols();
  actions.resize(b, adim);
  log_probs.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    RowVector u(adim);
    for (Eigen::Index d = 0; d < adim; ++d)
      u(d) = mean(i, d) + std::exp(log_std(i, d)) * rng.normal();
    actions.row(i) = actor.action_scale * u.array().tanh();
    log_probs(i) =
        squashed_log_prob(u, mean.row(i), log_std.row(i), actor.action_scale);
  }
}

Vector bellman_targets(const std::vector<const Transition*>& batch,
                       const SacAgent& agent, double discount, RngStream& rng) {
  BatchMatrices m = stack(batch);
  const double alpha = agent.temperature.alpha();
  Matrix next_actions;
  Vector next_logp;
  sample_batch_actions(agent.actor, m.next_states, rng, next_actions,
                       next_logp);
  Matrix xnext = critic_input(m.next_states, next_actions);
  Vector q1n = nn::mlp_forward(agent.targets.q1, xnext).col(0);
  Vector q2n = nn::mlp_forward(agent.targets.q2, xnext).col(0);
  Vector soft_v = q1n.cwiseMin(q2n) - alpha * next_logp;
  return m.rewards.array() +
         discount * (1.0 - m.dones.array()) * soft_v.array();
}

std::pair<double, double> critic_update(
    const std::vector<const Transition*>& batch, SacAgent& agent,
    double discount, nn::Adam& opt1, nn::Adam& opt2, RngStream& rng) {
  BatchMatrices m = stack(batch);
  Vector y = bellman_targets(batch, agent, discount, rng);

  Tape tape;
  nn::MlpVars q1v = nn::lift(tape, agent.critics.q1, true);
  nn::MlpVars q2v = nn::lift(tape, agent.critics.q2, true);
  Var x = tape.constant(critic_input(m.states, m.actions));
  Var target = tape.constant(y);
  Var l1 = ad::mean_all(ad::square(ad::sub(nn::mlp_forward(tape, q1v, x), target)));
  Var l2 = ad::mean_all(ad::square(ad::sub(nn::mlp_forward(tape, q2v, x), target)));
  Var loss = ad::add(l1, l2);
  double loss1 = ad::scalar(l1), loss2 = ad::scalar(l2);
  if (!std::isfinite(loss1) || !std::isfinite(loss2))
    throw NumericError("critic loss is non-finite");
  tape.backward(loss);

  auto grads_of = [](const nn::MlpVars& v) {
    std::vector<Matrix> g;
    for (std::size_t l = 0; l < v.weights.size(); ++l) {
      g.push_back(v.weights[l].grad());
      g.push_back(v.biases[l].grad());
    }
    return g;
  };
  opt1.step(nn::collect(agent.critics.q1), grads_of(q1v));
  opt2.step(nn::collect(agent.critics.q2), grads_of(q2v));
  return {loss1, loss2};
}

Var actor_loss_graph(Tape& tape, const ActorParams& actor,
                     const CriticPair& critics, const Matrix& states,
                     const Matrix& eps, double alpha,
                     std::vector<Var>* actor_param_vars, Var* log_probs_out) {
  nn::MlpVars trunk = nn::lift(tape, actor.trunk, true);
  nn::MlpVars mean_head = nn::lift(tape, actor.mean_head, true);
  nn::MlpVars logstd_head = nn::lift(tape, actor.logstd_head, true);
  nn::MlpVars q1v = nn::lift(tape, critics.q1, false);
  nn::MlpVars q2v = nn::lift(tape, critics.q2, false);
  if (actor_param_vars) {
    for (const nn::MlpVars* net : {&trunk, &mean_head, &logstd_head})
      for (std::size_t l = 0; l < net->weights.size(); ++l) {
        actor_param_vars->push_back(net->weights[l]);
        actor_param_vars->push_back(net->biases[l]);
      }
  }

  Var s = tape.constant(states);
  Var h = ad::relu(nn::mlp_forward(tape, trunk, s));
  Var mean = nn::mlp_forward(tape, mean_head, h);
  Var log_std =
      ad::clamp(nn::mlp_forward(tape, logstd_head, h), kLogStdMin, kLogStdMax);
  Var sigma = ad::exp_of(log_std);
  Var u = ad::add(mean, ad::cmul(sigma, tape.constant(eps)));
  Var t = ad::tanh_of(u);
  Var action = ad::scale(t, actor.action_scale);

  // log pi = sum_d [ -1/2 log 2pi - log_std - eps^2/2
  //                  - log c - log(1 - tanh(u)^2) ]
  Matrix const_part = (-kHalfLog2Pi - std::log(actor.action_scale) -
                       0.5 * eps.array().square())
                          .matrix();
  Var sp = ad::softplus(ad::scale(u, -2.0));
  Var log1mt2 =
      ad::scale(ad::sub(ad::add_scalar(ad::neg(u), std::log(2.0)), sp), 2.0);
  Var terms = ad::sub(ad::sub(tape.constant(const_part), log_std), log1mt2);
  Var logp = ad::rowwise_sum(terms);
  if (log_probs_out) *log_probs_out = logp;

  Var x = ad::hcat(s, action);
  Var qmin =
      ad::cmin(nn::mlp_forward(tape, q1v, x), nn::mlp_forward(tape, q2v, x));
  return ad::mean_all(ad::sub(ad::scale(logp, alpha), qmin));
}

UpdateResult actor_update(const std::vector<const Transition*>& batch,
                          SacAgent& agent, nn::Adam& opt, RngStream& rng) {
  BatchMatrices m = stack(batch);
  const double alpha = agent.temperature.alpha();
  const Eigen::Index b = m.states.rows();
  const int adim = agent.actor.action_dim();

  Matrix eps(b, adim);
  for (Eigen::Index i = 0; i < b; ++i)
    for (int d = 0; d < adim; ++d) eps(i, d) = rng.normal();

  Tape tape;
  std::vector<Var> param_vars;
  Var logp;
  Var loss = actor_loss_graph(tape, agent.actor, agent.critics, m.states, eps,
                              alpha, &param_vars, &logp);

  UpdateResult out;
  out.actor_loss = ad::scalar(loss);
  out.entropy = -logp.value().mean();
  if (!std::isfinite(out.actor_loss))
    throw NumericError("actor loss is non-finite");
  tape.backward(loss);

  std::vector<Matrix> grads;
  for (const Var& v : param_vars) grads.push_back(v.grad());
  opt.step(agent.actor.trainable_params(), grads);
  return out;
}

TemperatureState alpha_update(const std::vector<const Transition*>& batch,
                              const ActorParams& actor,
                              const TemperatureState& temp, RngStream& rng) {
  BatchMatrices m = stack(batch);
  Matrix actions;
  Vector logp;
  sample_batch_actions(actor, m.states, rng, actions, logp);
  double grad = (-logp.array() - m.h_targets.array()).mean();
  TemperatureState out = temp;
  out.log_alpha -= temp.lr * grad;
  out.log_alpha =
      std::clamp(out.log_alpha, temp.log_alpha_min, temp.log_alpha_max);
  return out;
}

void polyak_update(SacAgent& agent, double tau) {
  auto track = [tau](nn::Mlp& target, const nn::Mlp& live) {
    for (std::size_t l = 0; l < target.weights.size(); ++l) {
      target.weights[l] = (1.0 - tau) * target.weights[l] + tau * live.weights[l];
      target.biases[l] = (1.0 - tau) * target.biases[l] + tau * live.biases[l];
    }
  };
  track(agent.targets.q1, agent.critics.q1);
  track(agent.targets.q2, agent.critics.q2);
  ++agent.target_revision;
}

// --- training loop ---

TrainedPolicy train_policy(const ClusterStats& stats,
                           const GlobalBoundary& boundary,
                           const PrototypeSet& protos, const EnvConfig& env_cfg,
                           const SacConfig& cfg, std::uint64_t seed) {
  validate_env_config(env_cfg);
  validate_sac_config(cfg);
  const int dim = static_cast<int>(boundary.mu_g.size());

  RngStream root(seed);
  RngStream init_rng = root.derive("agent_init");
  RngStream rollout_rng = root.derive("rollout");
  RngStream update_rng = root.derive("updates");

  TrainedPolicy out;
  out.agent = make_agent(dim, dim, env_cfg.action_scale, cfg, init_rng);
  SacAgent& agent = out.agent;

  ReplayBuffer buffer(cfg.buffer_capacity);
  nn::Adam critic_opt1(cfg.critic_lr), critic_opt2(cfg.critic_lr);
  nn::Adam actor_opt(cfg.actor_lr);

  EnvState state = reset(protos, boundary, rollout_rng);
  double episode_reward = 0.0;

  // per-window accumulators
  double win_ep_reward = 0.0;
  int win_episodes = 0;
  double win_entropy = 0.0, win_closs = 0.0, win_aloss = 0.0;
  int win_updates = 0;
  double last_alpha = agent.temperature.alpha();

  for (int t = 1; t <= cfg.total_steps; ++t) {
    RowVector action(dim);
    if (t <= cfg.warmup_steps) {
      for (int d = 0; d < dim; ++d)
        action(d) = rollout_rng.uniform(-env_cfg.action_scale,
                                        env_cfg.action_scale);
    } else {
      action = sample_action(state.position, agent.actor,
                             SampleMode::Stochastic, rollout_rng)
                   .action;
    }

    double h = target_entropy(state.position, stats, env_cfg);
    StepResult sr = step(state, action, stats, boundary, env_cfg);

    Transition tr;
    tr.state = state.position;
    tr.action = action;
    tr.reward = sr.reward;
    tr.next_state = sr.state.position;
    tr.done = sr.done;
    tr.h_target = h;
    buffer.push(std::move(tr));

    episode_reward += sr.reward;
    if (sr.done) {
      win_ep_reward += episode_reward;
      ++win_episodes;
      episode_reward = 0.0;
      state = reset(protos, boundary, rollout_rng);
    } else {
      state = sr.state;
    }

    if (t > cfg.warmup_steps && t % cfg.update_every == 0 &&
        buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      auto batch = buffer.sample(cfg.batch_size, update_rng);
      auto [c1, c2] =
          critic_update(batch, agent, cfg.discount, critic_opt1, critic_opt2,
                        update_rng);
      UpdateResult ar = actor_update(batch, agent, actor_opt, update_rng);
      agent.temperature =
          alpha_update(batch, agent.actor, agent.temperature, update_rng);
      polyak_update(agent, cfg.polyak);

      win_closs += 0.5 * (c1 + c2);
      win_aloss += ar.actor_loss;
      win_entropy += ar.entropy;
      ++win_updates;
      last_alpha = agent.temperature.alpha();
    }

    if (t % cfg.log_window == 0 || t == cfg.total_steps) {
      PolicyLogRow row;
      row.step = t;
      row.episode_reward_mean =
          win_episodes > 0 ? win_ep_reward / win_episodes : 0.0;
      row.entropy_mean = win_updates > 0 ? win_entropy / win_updates : 0.0;
      row.alpha = last_alpha;
      row.critic_loss = win_updates > 0 ? win_closs / win_updates : 0.0;
      row.actor_loss = win_updates > 0 ? win_aloss / win_updates : 0.0;
      out.log.push_back(row);
      win_ep_reward = 0.0;
      win_episodes = 0;
      win_entropy = win_closs = win_aloss = 0.0;
      win_updates = 0;
    }
  }
  return out;
}

CollectedLatents collect_outlier_latents(const ActorParams& actor,
                                         const ClusterStats& stats,
                                         const GlobalBoundary& boundary,
                                         const PrototypeSet& protos,
                                         const EnvConfig& env_cfg,
                                         const CollectConfig& cfg,
                                         std::uint64_t seed) {
  validate_env_config(env_cfg);
  if (cfg.count < 1)
    throw ValidationError("collect_outlier_latents: count must be >= 1");
  int cap = cfg.episode_cap > 0
                ? cfg.episode_cap
                : std::max(1, 50 * cfg.count / env_cfg.max_steps);
  int burn_in = static_cast<int>(cfg.burn_in_fraction * env_cfg.max_steps);

  RngStream rng(seed);
  std::vector<RowVector> kept;
  int episodes = 0;
  while (static_cast<int>(kept.size()) < cfg.count && episodes < cap) {
    ++episodes;
    EnvState state = reset(protos, boundary, rng);
    bool done = false;
    while (!done) {
      RowVector a =
          sample_action(state.position, actor, SampleMode::Stochastic, rng)
              .action;
      StepResult sr = step(state, a, stats, boundary, env_cfg);
      if (sr.state.step_count > burn_in && sr.reward >= -cfg.eps_keep &&
          static_cast<int>(kept.size()) < cfg.count) {
        kept.push_back(sr.state.position);
      }
      done = sr.done;
      state = sr.state;
    }
  }

  CollectedLatents out;
  out.episodes_used = episodes;
  out.complete = static_cast<int>(kept.size()) >= cfg.count;
  if (!out.complete)
    log_warn("outlier collection hit the episode cap with " +
             std::to_string(kept.size()) + "/" + std::to_string(cfg.count) +
             " states kept");
  out.latents.resize(static_cast<Eigen::Index>(kept.size()),
                     boundary.mu_g.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    out.latents.row(static_cast<Eigen::Index>(i)) = kept[i];
  return out;
}

}  // namespace pgos
