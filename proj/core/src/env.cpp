#include "o2orl/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace o2orl {

TaskKind task_from_name(std::string_view name) {
  if (name == "reach") return TaskKind::kReach;
  if (name == "pickplace") return TaskKind::kPickPlace;
  if (name == "push") return TaskKind::kPush;
  throw std::invalid_argument("unknown task '" + std::string(name) +
                              "' (expected reach, pickplace or push)");
}

std::string_view task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kReach: return "reach";
    case TaskKind::kPickPlace: return "pickplace";
    case TaskKind::kPush: return "push";
  }
  return "?";
}

double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

bool has_object(TaskKind kind) { return kind != TaskKind::kReach; }

// Arrival stage used for the GSI one-hot on tasks without a gripper.
Stage arrival_stage(const GoalTaskState& s, const GeometryConfig& geom) {
  const Vec2& carried = s.task_kind == TaskKind::kReach ? s.agent_pos : s.object_pos;
  return dist(carried, s.goal_pos) <= geom.success_radius ? Stage::kS2 : Stage::kS0;
}

Stage gsi_stage(const GoalTaskState& s, const GeometryConfig& geom) {
  if (s.task_kind == TaskKind::kPickPlace) return stage_of(s, geom);
  return arrival_stage(s, geom);
}

}  // namespace

Stage stage_of(const GoalTaskState& state, const GeometryConfig& geom) {
  if (state.task_kind != TaskKind::kPickPlace) {
    throw std::invalid_argument("stage_of: defined for pickplace only");
  }
  if (!state.grip_closed) return Stage::kS0;
  return dist(state.object_pos, state.goal_pos) <= geom.success_radius
             ? Stage::kS2
             : Stage::kS1;
}

Observation observe(const GoalTaskState& s, bool gsi_enabled,
                    const GeometryConfig& geom) {
  Observation obs;
  obs.reserve(observation_dim(s.task_kind, gsi_enabled));
  obs.push_back(s.agent_pos.x);
  obs.push_back(s.agent_pos.y);
  if (has_object(s.task_kind)) {
    obs.push_back(s.object_pos.x);
    obs.push_back(s.object_pos.y);
  }
  obs.push_back(s.goal_pos.x);
  obs.push_back(s.goal_pos.y);
  if (s.task_kind == TaskKind::kPickPlace) {
    obs.push_back(s.grip_closed ? 1.0 : 0.0);
  }
  if (gsi_enabled) {
    const Vec2& carried =
        s.task_kind == TaskKind::kReach ? s.agent_pos : s.object_pos;
    obs.push_back(s.goal_pos.x - carried.x);
    obs.push_back(s.goal_pos.y - carried.y);
    const Stage stage = gsi_stage(s, geom);
    obs.push_back(stage == Stage::kS0 ? 1.0 : 0.0);
    obs.push_back(stage == Stage::kS1 ? 1.0 : 0.0);
    obs.push_back(stage == Stage::kS2 ? 1.0 : 0.0);
  }
  return obs;
}

int observation_dim(TaskKind kind, bool gsi_enabled) {
  int base = 4;
  if (kind == TaskKind::kPickPlace) base = 7;
  if (kind == TaskKind::kPush) base = 6;
  return base + (gsi_enabled ? 5 : 0);
}

int action_dim(TaskKind kind) {
  return kind == TaskKind::kPickPlace ? 3 : 2;
}

GoalTask::GoalTask(TaskKind kind, bool gsi_enabled, GeometryConfig geometry)
    : kind_(kind), gsi_(gsi_enabled), geom_(geometry) {
  if (geom_.horizon <= 0) throw std::invalid_argument("horizon must be positive");
  if (geom_.min_separation <= geom_.success_radius) {
    throw std::invalid_argument(
        "min_separation must exceed success_radius or episodes can start solved");
  }
  state_.task_kind = kind_;
}

Observation GoalTask::reset(std::uint64_t seed) {
  Rng rng(seed);
  const double lo = geom_.spawn_margin;
  const double hi = 1.0 - geom_.spawn_margin;
  auto draw = [&]() -> Vec2 { return {rng.uniform(lo, hi), rng.uniform(lo, hi)}; };

  state_ = GoalTaskState{};
  state_.task_kind = kind_;
  state_.agent_pos = draw();
  do {
    state_.goal_pos = draw();
  } while (dist(state_.agent_pos, state_.goal_pos) < geom_.min_separation);
  if (has_object(kind_)) {
    do {
      state_.object_pos = draw();
    } while (dist(state_.object_pos, state_.goal_pos) < geom_.min_separation);
  }
  done_latch_ = false;
  return observe();
}

bool GoalTask::success() const {
  switch (kind_) {
    case TaskKind::kReach:
      return dist(state_.agent_pos, state_.goal_pos) <= geom_.success_radius;
    case TaskKind::kPickPlace:
      return state_.grip_closed &&
             dist(state_.object_pos, state_.goal_pos) <= geom_.success_radius;
    case TaskKind::kPush:
      return dist(state_.object_pos, state_.goal_pos) <= geom_.success_radius;
  }
  return false;
}

StepResult GoalTask::step(std::span<const double> action) {
  const int want = action_dim();
  if (static_cast<int>(action.size()) != want) {
    throw std::invalid_argument("step: action size " +
                                std::to_string(action.size()) + ", expected " +
                                std::to_string(want));
  }
  for (std::size_t i = 0; i < action.size(); ++i) {
    if (!std::isfinite(action[i])) {
      throw std::invalid_argument("step: non-finite action component " +
                                  std::to_string(i));
    }
  }

  const double ax = std::clamp(action[0], -1.0, 1.0);
  const double ay = std::clamp(action[1], -1.0, 1.0);
  const Vec2 before = state_.agent_pos;
  state_.agent_pos.x = clamp01(before.x + geom_.step_scale * ax);
  state_.agent_pos.y = clamp01(before.y + geom_.step_scale * ay);

  if (kind_ == TaskKind::kPickPlace) {
    const double grip_cmd = std::clamp(action[2], -1.0, 1.0);
    if (grip_cmd > 0.0) {
      if (!state_.grip_closed &&
          dist(state_.agent_pos, state_.object_pos) <= geom_.grip_radius) {
        state_.grip_closed = true;
      }
    } else {
      state_.grip_closed = false;
    }
    if (state_.grip_closed) state_.object_pos = state_.agent_pos;
  } else if (kind_ == TaskKind::kPush) {
    const double d = dist(state_.agent_pos, state_.object_pos);
    if (d < geom_.grip_radius) {
      Vec2 normal;
      if (d > 0.0) {
        normal = {(state_.object_pos.x - state_.agent_pos.x) / d,
                  (state_.object_pos.y - state_.agent_pos.y) / d};
      } else {
        // Agent landed exactly on the object: push along its motion.
        const double mx = state_.agent_pos.x - before.x;
        const double my = state_.agent_pos.y - before.y;
        const double m = std::hypot(mx, my);
        if (m == 0.0) normal = {0.0, 0.0};
        else normal = {mx / m, my / m};
      }
      state_.object_pos.x = clamp01(state_.agent_pos.x + normal.x * geom_.grip_radius);
      state_.object_pos.y = clamp01(state_.agent_pos.y + normal.y * geom_.grip_radius);
    }
  }

  state_.step_count += 1;
  const bool succeeded = success();
  done_latch_ = done_latch_ || succeeded || state_.step_count >= geom_.horizon;

  StepResult result;
  result.observation = observe();
  result.success = succeeded;
  result.reward = succeeded ? 1.0 : -1.0;
  result.done = done_latch_;
  return result;
}

Observation GoalTask::observe() const { return o2orl::observe(state_, gsi_, geom_); }

int GoalTask::observation_dim() const {
  return o2orl::observation_dim(kind_, gsi_);
}

int GoalTask::action_dim() const { return o2orl::action_dim(kind_); }

}  // namespace o2orl
