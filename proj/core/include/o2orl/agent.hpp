#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "o2orl/env.hpp"
#include "o2orl/net.hpp"
#include "o2orl/replay.hpp"
#include "o2orl/rng.hpp"

namespace o2orl {

struct Hyper {
  double gamma = 0.98;          // discount, in (0,1)
  double tau = 0.005;           // target soft-update rate
  double alpha = 2.5;           // behavior-cloning balance coefficient
  int batch_size = 256;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  int policy_delay = 2;         // actor updates once per this many critic updates
  bool bootstrap_through_timeout = false;  // treat horizon timeouts as non-terminal
};

// Offline/online schedule: n_off offline updates, then a delta_trans-step
// transition window. sigma and noise_clip shape the target policy smoothing
// noise; eta_std is the online exploration noise.
struct ScheduleParams {
  long n_off = 10000;
  long delta_trans = 5000;
  double sigma = 0.2;
  double noise_clip = 0.5;
  double eta_std = 0.1;
};

void validate(const Hyper& hyper);
void validate(const ScheduleParams& schedule);

// Behavior-cloning weight: 1 through the offline phase, then linear from 1
// to 0 across the transition window, 0 afterwards. delta_trans == 0 gives
// the step schedule that switches at n_off.
double f_weight(long t, const ScheduleParams& schedule);

// Exploration ramp: 0 through the offline phase, the complement of f during
// the transition, 1 afterwards.
double g_weight(long t, const ScheduleParams& schedule);

enum class ActionMode { kExploit, kExplore };

struct TargetBatch {
  std::vector<double> y;
  std::vector<std::vector<double>> smoothed_next_action;
};

// Loss/objective fields are NaN until the corresponding update has run.
struct UpdateStats {
  double critic_loss_1 = std::numeric_limits<double>::quiet_NaN();
  double critic_loss_2 = std::numeric_limits<double>::quiet_NaN();
  bool actor_stepped = false;
  double actor_objective = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
};

// Deterministic-policy actor-critic with two critics, target networks and a
// scheduled behavior-cloning penalty on the actor. One step counter t spans
// the offline and online phases; every update iteration advances it by one.
class Td3Agent {
 public:
  Td3Agent(int obs_dim, int act_dim, const std::vector<int>& hidden_sizes,
           Hyper hyper, ScheduleParams schedule, std::uint64_t seed);

  // kExploit: the deterministic policy output. kExplore: adds clipped
  // exploration noise scaled by g_weight(t), then clips to the action box.
  ActionVec select_action(std::span<const double> obs, Rng& rng,
                          ActionMode mode) const;

  // Per element: noise clip(N(0, sigma), +-noise_clip) smooths the target
  // policy action (clipped back into the box); y = r + gamma * (1 - done) *
  // min(Q1', Q2') under the target networks.
  TargetBatch compute_target(const std::vector<Transition>& batch,
                             Rng& rng) const;

  // One squared-error step per critic toward the shared targets. Returns the
  // two pre-step losses. Target networks are untouched here.
  std::pair<double, double> critic_update(const std::vector<Transition>& batch,
                                          Rng& rng);

  // Ascent step on mean[ Q1(s, pi(s)) - f(t)/lambda * |pi(s) - a|^2 ], with
  // lambda = alpha / mean|Q1(s, a)| over the batch's dataset actions
  // (epsilon-floored). All three targets are soft-updated afterwards.
  // Returns the pre-step objective value.
  double actor_update(const std::vector<Transition>& batch);

  // Plain behavior cloning: one descent step on mean |pi(s) - a|^2, no
  // critic involvement, no target sync. Returns the pre-step loss.
  double bc_update(const std::vector<Transition>& batch);

  // One training iteration: sample, critic update, actor update every
  // policy_delay iterations, advance t.
  UpdateStats update_once(const ReplayBuffer& buffer, Rng& rng);

  using StepHook = std::function<void(long t)>;

  // n_steps update iterations sampling from the (demonstration) buffer.
  void train_offline(const ReplayBuffer& buffer, long n_steps, Rng& rng,
                     const StepHook& hook = {});

  // Offline variant that only regresses the actor onto the data actions.
  void train_offline_bc(const ReplayBuffer& buffer, long n_steps, Rng& rng,
                        const StepHook& hook = {});

  // Standard off-policy loop: act with exploration, store, update once per
  // environment step. Episode reseeds are drawn from env_seed_rng.
  void train_online(GoalTask& env, ReplayBuffer& buffer, long n_env_steps,
                    Rng& rng, Rng& env_seed_rng, const StepHook& hook = {});

  // Hard-copies every online network onto its target.
  void sync_targets();

  long t() const { return t_; }
  void set_t(long t) { t_ = t; }
  const Hyper& hyper() const { return hyper_; }
  const ScheduleParams& schedule() const { return schedule_; }
  const UpdateStats& last_stats() const { return last_stats_; }

  const MlpNet& actor() const { return actor_; }
  const MlpNet& critic1() const { return q1_; }
  const MlpNet& critic2() const { return q2_; }
  const MlpNet& actor_target() const { return actor_target_; }
  const MlpNet& critic1_target() const { return q1_target_; }
  const MlpNet& critic2_target() const { return q2_target_; }

  MlpNet& mutable_actor() { return actor_; }
  MlpNet& mutable_critic1() { return q1_; }
  MlpNet& mutable_critic2() { return q2_; }

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

  // Versioned container: the six networks, three optimizer states, t, the
  // schedule and the hyperparameters.
  void save(std::ostream& out) const;
  static Td3Agent load(std::istream& in);

 private:
  Td3Agent() = default;

  double critic_value(const MlpNet& critic, std::span<const double> obs,
                      std::span<const double> act) const;
  bool effective_done(const Transition& t) const;

  int obs_dim_ = 0;
  int act_dim_ = 0;
  Hyper hyper_;
  ScheduleParams schedule_;
  long t_ = 0;

  MlpNet actor_, q1_, q2_;
  MlpNet actor_target_, q1_target_, q2_target_;
  AdamState actor_opt_, q1_opt_, q2_opt_;

  UpdateStats last_stats_;

  // Scratch reused across updates.
  mutable MlpTrace actor_trace_, critic_trace_;
  mutable std::vector<double> cat_buf_;
  std::vector<double> grad_buf_;
  std::vector<double> input_grad_buf_;
};

}  // namespace o2orl
