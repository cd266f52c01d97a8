// Command-line front end: demo generation, training runs, sweeps and report
// aggregation. Exit codes: 0 success, 1 configuration error, 2 runtime abort.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "o2orl/demogen.hpp"
#include "o2orl/harness.hpp"
#include "o2orl/textio.hpp"

namespace {

using namespace o2orl;

// Config keys exposed 1:1 as --key flags on train/sweep.
const std::vector<std::string> kConfigKeys = {
    "task", "gsi", "arm", "demo_path", "out_dir", "seed",
    "online_steps", "eval_interval", "eval_episodes",
    "gamma", "tau", "alpha", "batch_size", "actor_lr", "critic_lr",
    "policy_delay", "bootstrap_through_timeout",
    "n_off", "delta_trans", "sigma", "noise_clip", "eta_std",
    "hidden", "replay_capacity", "pin_demos",
    "step_scale", "success_radius", "grip_radius", "spawn_margin",
    "min_separation", "horizon", "log_wall_ms", "save_agent_path"};

struct TrainArgs {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_flags(CLI::App* cmd, TrainArgs& args) {
  cmd->add_option("--config", args.config_file,
                  "flat key=value config file; flags override it");
  for (const std::string& key : kConfigKeys) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [&args, key](const std::string& value) {
          args.overrides.emplace_back(key, value);
        },
        "config key " + key);
  }
}

ExperimentConfig build_config(const TrainArgs& args) {
  ExperimentConfig config;
  if (!args.config_file.empty()) config = parse_config_file(args.config_file);
  for (const auto& [key, value] : args.overrides) {
    apply_config_kv(config, key, value);
  }
  return config;
}

int run_train(const TrainArgs& args) {
  const ExperimentConfig config = build_config(args);
  const RunResult result = run_experiment(config);
  std::cout << "run log: " << result.log_path << "\n";
  if (!result.log.complete) {
    std::cerr << "run aborted: " << result.log.abort_reason << "\n";
    return 2;
  }
  const RunLogRow& last = result.log.rows.back();
  std::cout << "final: t=" << last.t
            << " success_rate=" << fmt_double(last.success_rate) << "\n";
  return 0;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int run_sweep(const TrainArgs& args, const std::string& arms_csv,
              const std::string& seeds_csv, int jobs) {
  const std::vector<std::string> arms = split_list(arms_csv);
  const std::vector<std::string> seeds = split_list(seeds_csv);
  if (arms.empty() || seeds.empty()) {
    throw ConfigError("sweep: --arms and --seeds must be non-empty lists");
  }
  const ExperimentConfig base = build_config(args);

  std::vector<ExperimentConfig> configs;
  for (const std::string& arm : arms) {
    for (const std::string& seed : seeds) {
      ExperimentConfig c = base;
      apply_config_kv(c, "arm", arm);
      apply_config_kv(c, "seed", seed);
      validate(c);
      configs.push_back(std::move(c));
    }
  }

  std::vector<RunLog> logs(configs.size());
  std::vector<std::string> failures(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      try {
        RunResult r = run_experiment(configs[i]);
        logs[i] = std::move(r.log);
        std::lock_guard<std::mutex> lock(io_mutex);
        std::cout << "done: " << r.log_path
                  << (logs[i].complete ? "" : " (aborted)") << "\n";
      } catch (const std::exception& e) {
        failures[i] = e.what();
        std::lock_guard<std::mutex> lock(io_mutex);
        std::cerr << "failed: arm=" << configs[i].arm
                  << " seed=" << configs[i].seed << ": " << e.what() << "\n";
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();

  std::vector<RunLog> completed;
  bool any_failed = false;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (!failures[i].empty() || !logs[i].complete) {
      any_failed = true;
    }
    if (failures[i].empty()) completed.push_back(std::move(logs[i]));
  }
  if (!completed.empty()) {
    const std::string summary_path =
        (std::filesystem::path(base.out_dir) / "summary.csv").string();
    std::ofstream csv(summary_path);
    report(completed, csv, std::cout);
    std::cout << "summary: " << summary_path << "\n";
  }
  return any_failed ? 2 : 0;
}

int run_report(const std::vector<std::string>& paths, const std::string& out_csv) {
  std::vector<RunLog> logs;
  for (const std::string& p : paths) logs.push_back(load_runlog(p));
  if (!out_csv.empty()) {
    std::ofstream csv(out_csv);
    if (!csv) throw ConfigError("report: cannot write '" + out_csv + "'");
    report(logs, csv, std::cout);
  } else {
    std::ostringstream csv;
    report(logs, csv, std::cout);
    std::cout << csv.str();
  }
  return 0;
}

struct GenDemosArgs {
  std::string task = "reach";
  bool gsi = false;
  int episodes = 10;
  bool require_success = true;
  std::uint64_t seed = 1;
  std::string out = "demos.jsonl";
  double corruption_prob = 0.0;
  double target_success_rate = -1.0;  // <0: use corruption_prob as given
  double calibration_tolerance = 0.05;
  int calibration_rollouts = 500;
  std::string policy_id;
  GeometryConfig geometry;
};

int run_gen_demos(const GenDemosArgs& args) {
  const TaskKind task = task_from_name(args.task);
  double p = args.corruption_prob;
  if (args.target_success_rate >= 0.0) {
    p = calibrate_corruption(task, args.geometry, args.target_success_rate,
                             args.calibration_tolerance,
                             mix_seed(args.seed, seed_stream::kDemos),
                             args.calibration_rollouts);
    std::cout << "calibrated corruption_prob=" << fmt_double(p) << "\n";
  }
  const ScriptedPolicy policy{task, p};
  const DemoDataset dataset = generate_demos(
      policy, task, args.gsi, args.geometry, args.episodes,
      args.require_success, mix_seed(args.seed, seed_stream::kDemos),
      args.policy_id);
  save_demos(dataset, args.out);
  std::cout << "wrote " << dataset.transition_count() << " transitions ("
            << dataset.episodes.size() << " episodes) to " << args.out
            << "; raw policy success_rate="
            << fmt_double(dataset.meta.success_rate) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"offline-to-online RL experiment runner"};
  app.require_subcommand(1);

  GenDemosArgs gd;
  CLI::App* gen = app.add_subcommand("gen-demos", "generate scripted demonstrations");
  gen->add_option("--task", gd.task, "reach | pickplace | push");
  gen->add_flag("--gsi", gd.gsi, "record goal-aware observation features");
  gen->add_option("--episodes", gd.episodes, "episodes to keep");
  gen->add_option("--require_success", gd.require_success,
                  "keep successful episodes only (default true)");
  gen->add_option("--seed", gd.seed, "generation seed");
  gen->add_option("--out", gd.out, "output demo file");
  gen->add_option("--corruption_prob", gd.corruption_prob,
                  "per-step random-action probability");
  gen->add_option("--target_success_rate", gd.target_success_rate,
                  "calibrate corruption to this success rate first");
  gen->add_option("--calibration_tolerance", gd.calibration_tolerance,
                  "acceptable band around the target rate");
  gen->add_option("--calibration_rollouts", gd.calibration_rollouts,
                  "rollouts per calibration candidate");
  gen->add_option("--policy_id", gd.policy_id, "metadata policy id override");
  gen->add_option("--step_scale", gd.geometry.step_scale);
  gen->add_option("--success_radius", gd.geometry.success_radius);
  gen->add_option("--grip_radius", gd.geometry.grip_radius);
  gen->add_option("--spawn_margin", gd.geometry.spawn_margin);
  gen->add_option("--min_separation", gd.geometry.min_separation);
  gen->add_option("--horizon", gd.geometry.horizon);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "run one experiment arm");
  add_config_flags(train, train_args);

  TrainArgs sweep_args;
  std::string sweep_arms = "unified";
  std::string sweep_seeds = "1";
  int sweep_jobs = 1;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "cartesian product of arms x seeds, then a summary report");
  add_config_flags(sweep, sweep_args);
  sweep->add_option("--arms", sweep_arms, "comma-separated arm list");
  sweep->add_option("--seeds", sweep_seeds, "comma-separated seed list");
  sweep->add_option("--jobs", sweep_jobs, "parallel workers (runs stay independent)");

  std::vector<std::string> report_paths;
  std::string report_out;
  CLI::App* rep = app.add_subcommand("report", "aggregate run logs");
  rep->add_option("logs", report_paths, "run log CSV files")->required();
  rep->add_option("--out", report_out, "summary CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // help and version exits are not errors; anything else is a config error
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_gen_demos(gd);
    if (train->parsed()) return run_train(train_args);
    if (sweep->parsed()) return run_sweep(sweep_args, sweep_arms, sweep_seeds, sweep_jobs);
    if (rep->parsed()) return run_report(report_paths, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
