#pragma once

#include <cstdint>
#include <string>

#include "o2orl/env.hpp"
#include "o2orl/replay.hpp"
#include "o2orl/rng.hpp"

namespace o2orl {

// Scripted proportional controller, optionally corrupted: with probability
// corruption_prob each action is replaced by a uniform random one. p = 0 is
// deterministic given the state.
struct ScriptedPolicy {
  TaskKind task = TaskKind::kReach;
  double corruption_prob = 0.0;
};

// Deterministic expert action for the state: Reach drives at the goal;
// PickPlace approaches the object, grips, then carries to the goal; Push
// circles to the far side of the object and drives it down the goal line.
ActionVec expert_action(const ScriptedPolicy& policy, const GoalTaskState& state,
                        const GeometryConfig& geom);

// expert_action with the corruption coin applied.
ActionVec policy_action(const ScriptedPolicy& policy, const GoalTaskState& state,
                        const GeometryConfig& geom, Rng& rng);

// Fraction of successful episodes over n_episodes scripted rollouts.
double measure_success_rate(const ScriptedPolicy& policy, TaskKind task,
                            const GeometryConfig& geom, int n_episodes,
                            std::uint64_t seed);

// Rolls episodes with the (possibly corrupted) expert. With require_success
// only successful episodes are kept, up to an attempt budget; the metadata
// records the raw unfiltered success rate either way.
DemoDataset generate_demos(const ScriptedPolicy& policy, TaskKind task,
                           bool gsi_enabled, const GeometryConfig& geom,
                           int n_episodes, bool require_success,
                           std::uint64_t seed,
                           const std::string& policy_id = "");

// Bisection on the corruption probability until the measured success rate
// lands within target_rate +- tolerance. Each candidate is measured with
// rollouts_per_eval episodes.
double calibrate_corruption(TaskKind task, const GeometryConfig& geom,
                            double target_rate, double tolerance,
                            std::uint64_t seed, int rollouts_per_eval = 500);

}  // namespace o2orl
