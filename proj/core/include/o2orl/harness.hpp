#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "o2orl/agent.hpp"
#include "o2orl/env.hpp"
#include "o2orl/replay.hpp"

namespace o2orl {

inline constexpr std::string_view kBuildTag = "o2orl/0.1.0";

// Raised for malformed configuration (unknown keys, bad values, missing
// inputs). The CLI maps it to exit code 1; runtime aborts map to 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Algorithm arms:
//   unified    offline TD3+BC, then online with the linear f/g ramps
//   td3        online TD3 from scratch (no offline phase, no demos)
//   bc_td3     offline behavior cloning only, then online TD3
//   td3bc_td3  offline TD3+BC, then online TD3 (f and g switch as steps)
//   bc_only    offline behavior cloning, evaluation only
struct ExperimentConfig {
  std::string task = "reach";
  bool gsi = false;
  std::string arm = "unified";
  std::string demo_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;

  long online_steps = 20000;
  long eval_interval = 500;
  int eval_episodes = 20;

  Hyper hyper;
  ScheduleParams schedule;
  std::vector<int> hidden = {64, 64};
  std::size_t replay_capacity = 100000;
  bool pin_demos = false;

  GeometryConfig geometry;

  // Measured evaluation wall time is recorded in the CSV only when set;
  // otherwise the column is written as 0 so identical (config, seed) runs
  // produce byte-identical logs.
  bool log_wall_ms = false;

  std::string save_agent_path;
};

// Set one field by its flat config-file key ("task", "gamma", "n_off", ...).
// Unknown keys raise ConfigError.
void apply_config_kv(ExperimentConfig& config, const std::string& key,
                     const std::string& value);

// Flat key=value file; '#' starts a comment.
ExperimentConfig parse_config_file(const std::string& path);

// The full ordered key=value echo that heads every run log.
std::vector<std::pair<std::string, std::string>> config_echo(
    const ExperimentConfig& config);

void validate(const ExperimentConfig& config);

struct EvalRecord {
  long t = 0;
  double success_rate = 0.0;
  int episodes = 0;
  long wall_ms = 0;
};

// Policy under evaluation: maps (env state, observation) to an action. The
// state argument lets scripted controllers run under the same harness as
// learned policies, which only look at the observation.
using EvalPolicy =
    std::function<ActionVec(const GoalTaskState&, std::span<const double>)>;

EvalPolicy exploit_policy(const Td3Agent& agent);

// n_episodes greedy rollouts on freshly seeded episodes; the seed stream is
// independent of any training stream.
EvalRecord evaluate(const EvalPolicy& policy, TaskKind task, bool gsi,
                    const GeometryConfig& geom, int n_episodes,
                    std::uint64_t seed, long t = 0);

struct RunLogRow {
  long t = 0;
  double success_rate = 0.0;
  int episodes = 0;
  long wall_ms = 0;
  double f_t = 0.0;
  double g_t = 0.0;
  double lambda = 0.0;
  double critic_loss = 0.0;
  double actor_obj = 0.0;
};

struct RunLog {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<RunLogRow> rows;
  bool complete = true;
  std::string abort_reason;

  std::string header_value(const std::string& key) const;  // "" if absent
};

void write_runlog_csv(const RunLog& log, std::ostream& out);
RunLog read_runlog_csv(std::istream& in);
RunLog load_runlog(const std::string& path);

struct RunResult {
  RunLog log;
  std::unique_ptr<Td3Agent> agent;
  std::string log_path;  // file written under out_dir
};

// Runs one arm end to end, evaluating every eval_interval updates (plus at
// the offline/online boundary and the final step) and streaming the log to
// <out_dir>/<task>_<arm>_gsi<g>_seed<seed>.csv. A mid-run numeric failure
// finalizes the log as incomplete and rethrows.
RunResult run_experiment(const ExperimentConfig& config);

// Success at the last offline evaluation minus the minimum success over
// window [n_off, window_end], in percentage points.
double transition_drop(const RunLog& log, long n_off, long window_end);
// Window end defaults to n_off + 2 * delta_trans, both read from the header.
double transition_drop(const RunLog& log);

// Sustained-threshold step metrics; -1 when the log never qualifies.
long steps_to_90(const RunLog& log);          // success >= 0.9 held for 3 more evals
long steps_to_convergence(const RunLog& log); // success within 5 points of final thereafter
double final_rate(const RunLog& log);         // mean of the last 5 evaluations

// Cross-seed summary: logs are grouped by every header field except seed and
// output paths; per group the four metrics are aggregated mean +- std.
void report(const std::vector<RunLog>& logs, std::ostream& csv_out,
            std::ostream& text_out);

}  // namespace o2orl
