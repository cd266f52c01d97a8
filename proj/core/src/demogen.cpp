#include "o2orl/demogen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "o2orl/textio.hpp"

namespace o2orl {

namespace {

Vec2 sub(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }

Vec2 scale(const Vec2& v, double k) { return {v.x * k, v.y * k}; }

double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

Vec2 unit(const Vec2& v) {
  const double n = norm(v);
  return n > 0.0 ? Vec2{v.x / n, v.y / n} : Vec2{0.0, 0.0};
}

double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

// Proportional move toward `target`, saturating at full speed.
void drive_toward(const Vec2& from, const Vec2& target, double step_scale,
                  ActionVec& action) {
  action[0] = std::clamp((target.x - from.x) / step_scale, -1.0, 1.0);
  action[1] = std::clamp((target.y - from.y) / step_scale, -1.0, 1.0);
}

void reach_expert(const GoalTaskState& s, const GeometryConfig& geom,
                  ActionVec& action) {
  drive_toward(s.agent_pos, s.goal_pos, geom.step_scale, action);
}

void pickplace_expert(const GoalTaskState& s, const GeometryConfig& geom,
                      ActionVec& action) {
  if (s.grip_closed) {
    drive_toward(s.agent_pos, s.goal_pos, geom.step_scale, action);
    action[2] = 1.0;
    return;
  }
  drive_toward(s.agent_pos, s.object_pos, geom.step_scale, action);
  // Close once inside gripping range; moving at the object only shrinks the
  // distance, so the grip lands this step.
  action[2] = dist(s.agent_pos, s.object_pos) <= geom.grip_radius ? 1.0 : -1.0;
}

// The object is shoved along the agent-to-object normal whenever the agent
// ends a step inside the contact radius. The controller lines up behind the
// object (relative to the goal) before closing in; whenever the object sits
// close by or blocks the straight path to the staging point, it orbits
// sideways around it instead of bulldozing through.
void push_expert(const GoalTaskState& s, const GeometryConfig& geom,
                 ActionVec& action) {
  const double contact = geom.grip_radius;
  const Vec2 push_dir = unit(sub(s.goal_pos, s.object_pos));
  const Vec2 to_object = sub(s.object_pos, s.agent_pos);
  const double r = norm(to_object);
  const Vec2 n_ao = r > 0.0 ? scale(to_object, 1.0 / r) : push_dir;
  const double aligned = r > 0.0 ? dot(n_ao, push_dir) : 1.0;

  if (aligned >= 0.95) {
    // Behind the object: track a point just short of its center so the
    // contact normal stays collinear with the goal line.
    const Vec2 target = sub(s.object_pos, scale(push_dir, 0.3 * contact));
    drive_toward(s.agent_pos, target, geom.step_scale, action);
    return;
  }

  const Vec2 stage = sub(s.object_pos, scale(push_dir, 2.0 * contact));
  const Vec2 to_stage = sub(stage, s.agent_pos);
  const double stage_dist = norm(to_stage);
  const Vec2 dir_stage = stage_dist > 0.0 ? scale(to_stage, 1.0 / stage_dist) : n_ao;
  const double ahead = dot(to_object, dir_stage);
  const double lateral =
      std::abs(dir_stage.x * to_object.y - dir_stage.y * to_object.x);
  const bool path_blocked =
      ahead > 0.0 && ahead < stage_dist + contact && lateral < 1.4 * contact;

  if (r < 2.2 * contact || path_blocked) {
    // Orbit around the object toward its far side, holding about 1.7
    // contact radii of clearance so the bumper never grazes it.
    const Vec2 t1{-n_ao.y, n_ao.x};
    const Vec2 t2{n_ao.y, -n_ao.x};
    const Vec2 want = unit(to_stage);
    const Vec2 tangent = dot(t1, want) >= dot(t2, want) ? t1 : t2;
    const double radial = std::clamp((r - 1.7 * contact) / contact, -0.6, 0.6);
    const Vec2 dir = unit({tangent.x + radial * n_ao.x, tangent.y + radial * n_ao.y});
    action[0] = dir.x;
    action[1] = dir.y;
    return;
  }
  drive_toward(s.agent_pos, stage, geom.step_scale, action);
}

}  // namespace

ActionVec expert_action(const ScriptedPolicy& policy, const GoalTaskState& state,
                        const GeometryConfig& geom) {
  if (state.task_kind != policy.task) {
    throw std::invalid_argument("expert_action: policy/task mismatch");
  }
  ActionVec action(action_dim(state.task_kind), 0.0);
  switch (state.task_kind) {
    case TaskKind::kReach: reach_expert(state, geom, action); break;
    case TaskKind::kPickPlace: pickplace_expert(state, geom, action); break;
    case TaskKind::kPush: push_expert(state, geom, action); break;
  }
  return action;
}

ActionVec policy_action(const ScriptedPolicy& policy, const GoalTaskState& state,
                        const GeometryConfig& geom, Rng& rng) {
  if (policy.corruption_prob > 0.0 && rng.uniform() < policy.corruption_prob) {
    ActionVec action(action_dim(state.task_kind));
    for (double& a : action) a = rng.uniform(-1.0, 1.0);
    return action;
  }
  return expert_action(policy, state, geom);
}

namespace {

struct Rollout {
  std::vector<Transition> transitions;
  bool success = false;
};

Rollout roll_episode(const ScriptedPolicy& policy, GoalTask& env,
                     std::uint64_t env_seed, std::uint64_t policy_seed,
                     bool record) {
  Rollout rollout;
  Rng policy_rng(policy_seed);
  Observation obs = env.reset(env_seed);
  while (!env.done()) {
    ActionVec action = policy_action(policy, env.state(), env.geometry(), policy_rng);
    for (double& a : action) a = std::clamp(a, -1.0, 1.0);
    StepResult sr = env.step(action);
    if (record) {
      rollout.transitions.push_back(
          Transition{obs, action, sr.reward, sr.observation, sr.done});
    }
    rollout.success = sr.success;
    obs = std::move(sr.observation);
  }
  return rollout;
}

}  // namespace

double measure_success_rate(const ScriptedPolicy& policy, TaskKind task,
                            const GeometryConfig& geom, int n_episodes,
                            std::uint64_t seed) {
  if (n_episodes <= 0) throw std::invalid_argument("n_episodes must be positive");
  GoalTask env(task, /*gsi_enabled=*/false, geom);
  int successes = 0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    const Rollout r = roll_episode(policy, env, mix_seed(seed, 2 * ep),
                                   mix_seed(seed, 2 * ep + 1), /*record=*/false);
    if (r.success) ++successes;
  }
  return static_cast<double>(successes) / n_episodes;
}

DemoDataset generate_demos(const ScriptedPolicy& policy, TaskKind task,
                           bool gsi_enabled, const GeometryConfig& geom,
                           int n_episodes, bool require_success,
                           std::uint64_t seed, const std::string& policy_id) {
  if (n_episodes <= 0) throw std::invalid_argument("n_episodes must be positive");
  if (task != policy.task) throw std::invalid_argument("generate_demos: policy/task mismatch");

  GoalTask env(task, gsi_enabled, geom);
  DemoDataset dataset;
  dataset.meta.task = std::string(task_name(task));
  dataset.meta.gsi = gsi_enabled;
  dataset.meta.policy_id =
      !policy_id.empty()
          ? policy_id
          : (policy.corruption_prob == 0.0
                 ? std::string("scripted-expert")
                 : "scripted-corrupt-p" + fmt_double(policy.corruption_prob));
  dataset.meta.obs_dim = env.observation_dim();
  dataset.meta.act_dim = env.action_dim();

  const long attempt_budget = std::max<long>(1000, 200L * n_episodes);
  long attempts = 0;
  long successes = 0;
  while (static_cast<int>(dataset.episodes.size()) < n_episodes) {
    if (attempts >= attempt_budget) {
      throw std::runtime_error(
          "generate_demos: could not collect " + std::to_string(n_episodes) +
          " successful episodes in " + std::to_string(attempts) +
          " attempts (measured success rate " +
          fmt_double(static_cast<double>(successes) / attempts) + ")");
    }
    Rollout r = roll_episode(policy, env, mix_seed(seed, 2 * attempts),
                             mix_seed(seed, 2 * attempts + 1), /*record=*/true);
    ++attempts;
    if (r.success) ++successes;
    if (require_success && !r.success) continue;
    dataset.episodes.push_back(std::move(r.transitions));
  }
  dataset.meta.success_rate = static_cast<double>(successes) / attempts;
  validate(dataset);
  return dataset;
}

double calibrate_corruption(TaskKind task, const GeometryConfig& geom,
                            double target_rate, double tolerance,
                            std::uint64_t seed, int rollouts_per_eval) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!(target_rate > 0.0 && target_rate <= 1.0)) {
    throw std::invalid_argument("target rate must be in (0,1]");
  }
  if (rollouts_per_eval < 1) {
    throw std::invalid_argument("rollouts_per_eval must be positive");
  }

  // Common random numbers across candidates keep the measured rate a stable
  // monotone function of p.
  auto measure = [&](double p) {
    return measure_success_rate(ScriptedPolicy{task, p}, task, geom,
                                rollouts_per_eval, seed);
  };

  const double rate_at_zero = measure(0.0);
  if (std::abs(rate_at_zero - target_rate) <= tolerance) return 0.0;
  const double rate_at_one = measure(1.0);
  if (target_rate > rate_at_zero || target_rate < rate_at_one) {
    throw std::runtime_error(
        "calibrate_corruption: target " + fmt_double(target_rate) +
        " is outside the reachable band [" + fmt_double(rate_at_one) + ", " +
        fmt_double(rate_at_zero) + "]");
  }

  double lo = 0.0;  // rate(lo) >= target
  double hi = 1.0;  // rate(hi) <= target
  double best_p = 0.5;
  double best_err = 2.0;
  for (int iter = 0; iter < 40; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double rate = measure(mid);
    const double err = std::abs(rate - target_rate);
    if (err < best_err) {
      best_err = err;
      best_p = mid;
    }
    if (err <= tolerance) return mid;
    if (rate > target_rate) lo = mid;
    else hi = mid;
  }
  throw std::runtime_error("calibrate_corruption: did not land within tolerance (best rate error " +
                           fmt_double(best_err) + " at p=" + fmt_double(best_p) + ")");
}

}  // namespace o2orl
