#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "o2orl/rng.hpp"

namespace o2orl {

// Deterministic kinematic goal-reaching tasks on the unit square with the
// sparse reward +1 on success and -1 otherwise.
enum class TaskKind { kReach, kPickPlace, kPush };

// Registry by name: "reach", "pickplace", "push".
TaskKind task_from_name(std::string_view name);
std::string_view task_name(TaskKind kind);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double dist(const Vec2& a, const Vec2& b);

// Workspace geometry. Echoed into every run log header.
struct GeometryConfig {
  double step_scale = 0.05;     // agent displacement per unit action
  double success_radius = 0.05; // goal predicate radius
  double grip_radius = 0.05;    // gripping range; also the Push contact radius
  double spawn_margin = 0.1;    // inset from the walls for initial positions
  double min_separation = 0.2;  // minimum initial agent-goal and object-goal distance
  int horizon = 100;            // episode step limit
};

struct GoalTaskState {
  TaskKind task_kind = TaskKind::kReach;
  Vec2 agent_pos;
  Vec2 object_pos;  // unused for Reach
  Vec2 goal_pos;
  bool grip_closed = false;  // PickPlace only
  int step_count = 0;
};

// PickPlace sub-task stages: S0 not gripping, S1 gripping but the object is
// away from the goal, S2 gripping with the object at the goal.
enum class Stage { kS0, kS1, kS2 };

// Stage of a PickPlace state; rejects other tasks.
Stage stage_of(const GoalTaskState& state, const GeometryConfig& geom);

using Observation = std::vector<double>;
using ActionVec = std::vector<double>;

// Feature layout, a fixed function of (task, gsi):
//   reach      base: agent.xy, goal.xy                          (4)
//   pickplace  base: agent.xy, object.xy, goal.xy, grip flag    (7)
//   push       base: agent.xy, object.xy, goal.xy               (6)
// With gsi enabled a 5-entry block is appended: the displacement from the
// carried entity to the goal (goal - object; goal - agent for Reach) and a
// stage one-hot over {S0, S1, S2}. Tasks without a gripper use the arrival
// split only: S0 before the goal predicate holds, S2 once it does.
Observation observe(const GoalTaskState& state, bool gsi_enabled,
                    const GeometryConfig& geom);

int observation_dim(TaskKind kind, bool gsi_enabled);
int action_dim(TaskKind kind);

struct StepResult {
  Observation observation;
  double reward = -1.0;  // +1 iff success at this step
  bool done = false;     // success or horizon reached, latched
  bool success = false;
};

// One task instance. Single-threaded; run one instance per worker.
class GoalTask {
 public:
  explicit GoalTask(TaskKind kind, bool gsi_enabled,
                    GeometryConfig geometry = {});

  // Draws initial positions from a generator seeded with `seed`: agent, then
  // goal redrawn until it is min_separation away from the agent, then (for
  // tasks with an object) the object redrawn until it is min_separation away
  // from the goal. All positions lie inside the spawn_margin inset box.
  Observation reset(std::uint64_t seed);

  // Clips the action into [-1,1] per component, moves the agent by
  // step_scale * action, applies the task dynamics, then evaluates the goal
  // predicate. Rejects non-finite actions.
  StepResult step(std::span<const double> action);

  Observation observe() const;
  const GoalTaskState& state() const { return state_; }
  const GeometryConfig& geometry() const { return geom_; }
  bool gsi_enabled() const { return gsi_; }
  int observation_dim() const;
  int action_dim() const;
  bool done() const { return done_latch_; }

 private:
  bool success() const;

  TaskKind kind_;
  bool gsi_;
  GeometryConfig geom_;
  GoalTaskState state_;
  bool done_latch_ = false;
};

}  // namespace o2orl
