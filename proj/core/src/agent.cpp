#include "o2orl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "o2orl/textio.hpp"

namespace o2orl {

void validate(const Hyper& hyper) {
  if (!(hyper.gamma > 0.0 && hyper.gamma < 1.0)) {
    throw std::invalid_argument("gamma must be in (0,1)");
  }
  if (!(hyper.tau > 0.0 && hyper.tau <= 1.0)) {
    throw std::invalid_argument("tau must be in (0,1]");
  }
  if (!(hyper.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (hyper.batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (!(hyper.actor_lr > 0.0) || !(hyper.critic_lr > 0.0)) {
    throw std::invalid_argument("learning rates must be positive");
  }
  if (hyper.policy_delay <= 0) {
    throw std::invalid_argument("policy_delay must be positive");
  }
}

void validate(const ScheduleParams& schedule) {
  if (schedule.n_off < 0) throw std::invalid_argument("n_off must be nonnegative");
  if (schedule.delta_trans < 0) {
    throw std::invalid_argument("delta_trans must be nonnegative");
  }
  if (!(schedule.noise_clip > 0.0)) {
    throw std::invalid_argument("noise_clip must be positive");
  }
  if (schedule.sigma < 0.0 || schedule.eta_std < 0.0) {
    throw std::invalid_argument("noise scales must be nonnegative");
  }
}

double f_weight(long t, const ScheduleParams& schedule) {
  if (t <= schedule.n_off) return 1.0;
  if (t <= schedule.n_off + schedule.delta_trans) {
    return 1.0 - static_cast<double>(t - schedule.n_off) /
                     static_cast<double>(schedule.delta_trans);
  }
  return 0.0;
}

double g_weight(long t, const ScheduleParams& schedule) {
  if (t <= schedule.n_off) return 0.0;
  if (t <= schedule.n_off + schedule.delta_trans) return 1.0 - f_weight(t, schedule);
  return 1.0;
}

namespace {

constexpr double kLambdaFloor = 1e-6;

std::vector<int> actor_layers(int obs_dim, int act_dim,
                              const std::vector<int>& hidden) {
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(act_dim);
  return sizes;
}

std::vector<int> critic_layers(int obs_dim, int act_dim,
                               const std::vector<int>& hidden) {
  std::vector<int> sizes;
  sizes.push_back(obs_dim + act_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

}  // namespace

Td3Agent::Td3Agent(int obs_dim, int act_dim,
                   const std::vector<int>& hidden_sizes, Hyper hyper,
                   ScheduleParams schedule, std::uint64_t seed)
    : obs_dim_(obs_dim), act_dim_(act_dim), hyper_(hyper), schedule_(schedule) {
  if (obs_dim <= 0 || act_dim <= 0) {
    throw std::invalid_argument("observation and action dimensions must be positive");
  }
  validate(hyper_);
  validate(schedule_);
  Rng rng(seed);
  actor_ = make_mlp(actor_layers(obs_dim, act_dim, hidden_sizes),
                    OutputActivation::kTanh, rng);
  q1_ = make_mlp(critic_layers(obs_dim, act_dim, hidden_sizes),
                 OutputActivation::kIdentity, rng);
  q2_ = make_mlp(critic_layers(obs_dim, act_dim, hidden_sizes),
                 OutputActivation::kIdentity, rng);
  actor_target_ = actor_;
  q1_target_ = q1_;
  q2_target_ = q2_;
  actor_opt_ = make_adam_state(actor_);
  q1_opt_ = make_adam_state(q1_);
  q2_opt_ = make_adam_state(q2_);
}

ActionVec Td3Agent::select_action(std::span<const double> obs, Rng& rng,
                                  ActionMode mode) const {
  ActionVec action = forward(actor_, obs);
  if (mode == ActionMode::kExplore) {
    const double g = g_weight(t_, schedule_);
    for (double& a : action) {
      a = std::clamp(a + g * rng.normal(0.0, schedule_.eta_std), -1.0, 1.0);
    }
  }
  return action;
}

double Td3Agent::critic_value(const MlpNet& critic, std::span<const double> obs,
                              std::span<const double> act) const {
  cat_buf_.assign(obs.begin(), obs.end());
  cat_buf_.insert(cat_buf_.end(), act.begin(), act.end());
  forward_trace(critic, cat_buf_, critic_trace_);
  return critic_trace_.act.back()[0];
}

bool Td3Agent::effective_done(const Transition& t) const {
  // Success is the only terminal with positive reward, so the sparse reward
  // identifies timeout terminals when they should keep bootstrapping.
  return hyper_.bootstrap_through_timeout ? t.r > 0.0 : t.done;
}

TargetBatch Td3Agent::compute_target(const std::vector<Transition>& batch,
                                     Rng& rng) const {
  if (batch.empty()) throw std::invalid_argument("compute_target: empty batch");
  TargetBatch out;
  out.y.reserve(batch.size());
  out.smoothed_next_action.reserve(batch.size());
  for (const Transition& tr : batch) {
    ActionVec next_action = forward(actor_target_, tr.s_next);
    for (double& a : next_action) {
      const double eps = std::clamp(rng.normal(0.0, schedule_.sigma),
                                    -schedule_.noise_clip, schedule_.noise_clip);
      a = std::clamp(a + eps, -1.0, 1.0);
    }
    const double q1t = critic_value(q1_target_, tr.s_next, next_action);
    const double q2t = critic_value(q2_target_, tr.s_next, next_action);
    const double bootstrap = effective_done(tr) ? 0.0 : std::min(q1t, q2t);
    out.y.push_back(tr.r + hyper_.gamma * bootstrap);
    out.smoothed_next_action.push_back(std::move(next_action));
  }
  return out;
}

std::pair<double, double> Td3Agent::critic_update(
    const std::vector<Transition>& batch, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("critic_update: empty batch");
  const TargetBatch targets = compute_target(batch, rng);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  double losses[2] = {0.0, 0.0};
  MlpNet* critics[2] = {&q1_, &q2_};
  AdamState* opts[2] = {&q1_opt_, &q2_opt_};
  const double upstream_scale = 2.0 * inv_b;

  for (int k = 0; k < 2; ++k) {
    MlpNet& critic = *critics[k];
    grad_buf_.assign(param_count(critic), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Transition& tr = batch[i];
      const double q = critic_value(critic, tr.s, tr.a);
      const double err = q - targets.y[i];
      loss += err * err;
      const double upstream[1] = {upstream_scale * err};
      backward_trace(critic, critic_trace_, upstream, grad_buf_);
    }
    loss *= inv_b;
    if (!std::isfinite(loss)) {
      throw std::runtime_error("critic_update: non-finite loss in critic " +
                               std::to_string(k + 1) +
                               " (diverged Q estimates)");
    }
    losses[k] = loss;
    adam_step(critic, grad_buf_, *opts[k], hyper_.critic_lr);
  }

  last_stats_.critic_loss_1 = losses[0];
  last_stats_.critic_loss_2 = losses[1];
  return {losses[0], losses[1]};
}

double Td3Agent::actor_update(const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::invalid_argument("actor_update: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  // lambda normalizes the Q term against the BC penalty using the critic's
  // scale on the batch's dataset actions.
  double abs_q_sum = 0.0;
  for (const Transition& tr : batch) {
    abs_q_sum += std::abs(critic_value(q1_, tr.s, tr.a));
  }
  const double lambda =
      hyper_.alpha / std::max(abs_q_sum * inv_b, kLambdaFloor);
  const double fw = f_weight(t_, schedule_);
  const double bc_coeff = fw / lambda;

  grad_buf_.assign(param_count(actor_), 0.0);
  std::vector<double> upstream(act_dim_);
  double objective = 0.0;

  for (const Transition& tr : batch) {
    forward_trace(actor_, tr.s, actor_trace_);
    const std::vector<double>& u = actor_trace_.act.back();

    const double q = critic_value(q1_, tr.s, u);
    const double upstream_q[1] = {1.0};
    backward_input_only(q1_, critic_trace_, upstream_q, input_grad_buf_);

    double bc = 0.0;
    for (int d = 0; d < act_dim_; ++d) {
      const double diff = u[d] - tr.a[d];
      bc += diff * diff;
      // Ascent on q - bc_coeff * |u - a|^2, folded into a descent gradient.
      upstream[d] =
          -inv_b * (input_grad_buf_[obs_dim_ + d] - 2.0 * bc_coeff * diff);
    }
    objective += q - bc_coeff * bc;
    backward_trace(actor_, actor_trace_, upstream, grad_buf_);
  }

  adam_step(actor_, grad_buf_, actor_opt_, hyper_.actor_lr);
  soft_update(actor_target_, actor_, hyper_.tau);
  soft_update(q1_target_, q1_, hyper_.tau);
  soft_update(q2_target_, q2_, hyper_.tau);

  objective *= inv_b;
  last_stats_.actor_objective = objective;
  last_stats_.lambda = lambda;
  return objective;
}

double Td3Agent::bc_update(const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::invalid_argument("bc_update: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  grad_buf_.assign(param_count(actor_), 0.0);
  std::vector<double> upstream(act_dim_);
  double loss = 0.0;

  for (const Transition& tr : batch) {
    forward_trace(actor_, tr.s, actor_trace_);
    const std::vector<double>& u = actor_trace_.act.back();
    for (int d = 0; d < act_dim_; ++d) {
      const double diff = u[d] - tr.a[d];
      loss += diff * diff;
      upstream[d] = 2.0 * inv_b * diff;
    }
    backward_trace(actor_, actor_trace_, upstream, grad_buf_);
  }

  adam_step(actor_, grad_buf_, actor_opt_, hyper_.actor_lr);
  loss *= inv_b;
  last_stats_.actor_objective = -loss;
  return loss;
}

UpdateStats Td3Agent::update_once(const ReplayBuffer& buffer, Rng& rng) {
  const std::vector<Transition> batch =
      buffer.sample(static_cast<std::size_t>(hyper_.batch_size), rng);
  UpdateStats stats;
  const auto [l1, l2] = critic_update(batch, rng);
  stats.critic_loss_1 = l1;
  stats.critic_loss_2 = l2;
  if ((t_ + 1) % hyper_.policy_delay == 0) {
    stats.actor_objective = actor_update(batch);
    stats.actor_stepped = true;
    stats.lambda = last_stats_.lambda;
  }
  t_ += 1;
  return stats;
}

void Td3Agent::train_offline(const ReplayBuffer& buffer, long n_steps, Rng& rng,
                             const StepHook& hook) {
  if (n_steps > 0 && buffer.size() == 0) {
    throw std::runtime_error("train_offline: buffer is empty");
  }
  for (long k = 0; k < n_steps; ++k) {
    update_once(buffer, rng);
    if (hook) hook(t_);
  }
}

void Td3Agent::train_offline_bc(const ReplayBuffer& buffer, long n_steps,
                                Rng& rng, const StepHook& hook) {
  if (n_steps > 0 && buffer.size() == 0) {
    throw std::runtime_error("train_offline_bc: buffer is empty");
  }
  for (long k = 0; k < n_steps; ++k) {
    const std::vector<Transition> batch =
        buffer.sample(static_cast<std::size_t>(hyper_.batch_size), rng);
    bc_update(batch);
    t_ += 1;
    if (hook) hook(t_);
  }
}

void Td3Agent::train_online(GoalTask& env, ReplayBuffer& buffer,
                            long n_env_steps, Rng& rng, Rng& env_seed_rng,
                            const StepHook& hook) {
  if (t_ < schedule_.n_off) {
    throw std::logic_error(
        "train_online: offline phase incomplete (t < n_off)");
  }
  Observation obs = env.reset(env_seed_rng.next_u64());
  for (long k = 0; k < n_env_steps; ++k) {
    ActionVec action = select_action(obs, rng, ActionMode::kExplore);
    StepResult sr = env.step(action);
    buffer.push(Transition{obs, std::move(action), sr.reward, sr.observation,
                           sr.done});
    if (sr.done) {
      obs = env.reset(env_seed_rng.next_u64());
    } else {
      obs = std::move(sr.observation);
    }
    update_once(buffer, rng);
    if (hook) hook(t_);
  }
}

void Td3Agent::sync_targets() {
  actor_target_ = actor_;
  q1_target_ = q1_;
  q2_target_ = q2_;
}

namespace {
constexpr const char* kAgentMagic = "o2orl-agent";

std::string next_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) {
    throw std::runtime_error(std::string("agent checkpoint: unexpected end, expected ") + what);
  }
  return tok;
}

void expect_token(std::istream& in, const char* key) {
  if (next_token(in, key) != key) {
    throw std::runtime_error(std::string("agent checkpoint: expected '") + key + "'");
  }
}
}  // namespace

void Td3Agent::save(std::ostream& out) const {
  out << kAgentMagic << " v1\n";
  out << "dims " << obs_dim_ << ' ' << act_dim_ << "\n";
  out << "t " << t_ << "\n";
  out << "hyper " << fmt_double(hyper_.gamma) << ' ' << fmt_double(hyper_.tau)
      << ' ' << fmt_double(hyper_.alpha) << ' ' << hyper_.batch_size << ' '
      << fmt_double(hyper_.actor_lr) << ' ' << fmt_double(hyper_.critic_lr)
      << ' ' << hyper_.policy_delay << ' '
      << (hyper_.bootstrap_through_timeout ? 1 : 0) << "\n";
  out << "schedule " << schedule_.n_off << ' ' << schedule_.delta_trans << ' '
      << fmt_double(schedule_.sigma) << ' ' << fmt_double(schedule_.noise_clip)
      << ' ' << fmt_double(schedule_.eta_std) << "\n";
  const MlpNet* nets[6] = {&actor_, &q1_, &q2_, &actor_target_, &q1_target_, &q2_target_};
  const char* roles[6] = {"actor", "critic1", "critic2", "actor_target", "critic1_target", "critic2_target"};
  for (int i = 0; i < 6; ++i) {
    out << "net " << roles[i] << "\n";
    save_net(*nets[i], out);
  }
  const AdamState* opts[3] = {&actor_opt_, &q1_opt_, &q2_opt_};
  const char* opt_roles[3] = {"actor", "critic1", "critic2"};
  for (int i = 0; i < 3; ++i) {
    out << "opt " << opt_roles[i] << "\n";
    save_adam(*opts[i], out);
  }
}

Td3Agent Td3Agent::load(std::istream& in) {
  if (next_token(in, "magic") != kAgentMagic || next_token(in, "version") != "v1") {
    throw std::runtime_error("agent checkpoint: not a v1 agent file");
  }
  Td3Agent agent;
  expect_token(in, "dims");
  agent.obs_dim_ = static_cast<int>(parse_long(next_token(in, "obs dim")));
  agent.act_dim_ = static_cast<int>(parse_long(next_token(in, "act dim")));
  expect_token(in, "t");
  agent.t_ = parse_long(next_token(in, "t"));
  expect_token(in, "hyper");
  agent.hyper_.gamma = parse_double(next_token(in, "gamma"));
  agent.hyper_.tau = parse_double(next_token(in, "tau"));
  agent.hyper_.alpha = parse_double(next_token(in, "alpha"));
  agent.hyper_.batch_size = static_cast<int>(parse_long(next_token(in, "batch_size")));
  agent.hyper_.actor_lr = parse_double(next_token(in, "actor_lr"));
  agent.hyper_.critic_lr = parse_double(next_token(in, "critic_lr"));
  agent.hyper_.policy_delay = static_cast<int>(parse_long(next_token(in, "policy_delay")));
  agent.hyper_.bootstrap_through_timeout = parse_long(next_token(in, "timeout flag")) != 0;
  expect_token(in, "schedule");
  agent.schedule_.n_off = parse_long(next_token(in, "n_off"));
  agent.schedule_.delta_trans = parse_long(next_token(in, "delta_trans"));
  agent.schedule_.sigma = parse_double(next_token(in, "sigma"));
  agent.schedule_.noise_clip = parse_double(next_token(in, "noise_clip"));
  agent.schedule_.eta_std = parse_double(next_token(in, "eta_std"));

  MlpNet* nets[6] = {&agent.actor_, &agent.q1_, &agent.q2_,
                     &agent.actor_target_, &agent.q1_target_, &agent.q2_target_};
  const char* roles[6] = {"actor", "critic1", "critic2", "actor_target",
                          "critic1_target", "critic2_target"};
  for (int i = 0; i < 6; ++i) {
    expect_token(in, "net");
    const std::string role = next_token(in, "net role");
    if (role != roles[i]) {
      throw std::runtime_error("agent checkpoint: unexpected net '" + role + "'");
    }
    *nets[i] = load_net(in);
  }
  AdamState* opts[3] = {&agent.actor_opt_, &agent.q1_opt_, &agent.q2_opt_};
  for (int i = 0; i < 3; ++i) {
    expect_token(in, "opt");
    next_token(in, "opt role");
    *opts[i] = load_adam(in);
  }
  validate(agent.hyper_);
  validate(agent.schedule_);
  return agent;
}

}  // namespace o2orl
