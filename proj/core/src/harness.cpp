#include "o2orl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "o2orl/textio.hpp"

namespace o2orl {

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ConfigError("config: " + key + " expects true/false, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_long(item)));
  }
  if (out.empty()) throw ConfigError("config: " + key + " needs at least one size");
  return out;
}

std::string bool_str(bool b) { return b ? "1" : "0"; }

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

const std::set<std::string> kArms = {"unified", "td3", "bc_td3", "td3bc_td3",
                                     "bc_only"};

}  // namespace

void apply_config_kv(ExperimentConfig& c, const std::string& key,
                     const std::string& value) {
  try {
    if (key == "task") c.task = value;
    else if (key == "gsi") c.gsi = parse_bool(value, key);
    else if (key == "arm") c.arm = value;
    else if (key == "demo_path") c.demo_path = value;
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_long(value));
    else if (key == "online_steps") c.online_steps = parse_long(value);
    else if (key == "eval_interval") c.eval_interval = parse_long(value);
    else if (key == "eval_episodes") c.eval_episodes = static_cast<int>(parse_long(value));
    else if (key == "gamma") c.hyper.gamma = parse_double(value);
    else if (key == "tau") c.hyper.tau = parse_double(value);
    else if (key == "alpha") c.hyper.alpha = parse_double(value);
    else if (key == "batch_size") c.hyper.batch_size = static_cast<int>(parse_long(value));
    else if (key == "actor_lr") c.hyper.actor_lr = parse_double(value);
    else if (key == "critic_lr") c.hyper.critic_lr = parse_double(value);
    else if (key == "policy_delay") c.hyper.policy_delay = static_cast<int>(parse_long(value));
    else if (key == "bootstrap_through_timeout") c.hyper.bootstrap_through_timeout = parse_bool(value, key);
    else if (key == "n_off") c.schedule.n_off = parse_long(value);
    else if (key == "delta_trans") c.schedule.delta_trans = parse_long(value);
    else if (key == "sigma") c.schedule.sigma = parse_double(value);
    else if (key == "noise_clip") c.schedule.noise_clip = parse_double(value);
    else if (key == "eta_std") c.schedule.eta_std = parse_double(value);
    else if (key == "hidden") c.hidden = parse_int_list(value, key);
    else if (key == "replay_capacity") c.replay_capacity = static_cast<std::size_t>(parse_long(value));
    else if (key == "pin_demos") c.pin_demos = parse_bool(value, key);
    else if (key == "step_scale") c.geometry.step_scale = parse_double(value);
    else if (key == "success_radius") c.geometry.success_radius = parse_double(value);
    else if (key == "grip_radius") c.geometry.grip_radius = parse_double(value);
    else if (key == "spawn_margin") c.geometry.spawn_margin = parse_double(value);
    else if (key == "min_separation") c.geometry.min_separation = parse_double(value);
    else if (key == "horizon") c.geometry.horizon = static_cast<int>(parse_long(value));
    else if (key == "log_wall_ms") c.log_wall_ms = parse_bool(value, key);
    else if (key == "save_agent_path") c.save_agent_path = value;
    else throw ConfigError("config: unknown key '" + key + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config: bad value for '" + key + "': " + e.what());
  }
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // trim
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto kend = key.find_last_not_of(" \t");
    key = key.substr(0, kend == std::string::npos ? 0 : kend + 1);
    const auto vbegin = value.find_first_not_of(" \t");
    value = vbegin == std::string::npos ? "" : value.substr(vbegin);
    apply_config_kv(config, key, value);
  }
  return config;
}

std::vector<std::pair<std::string, std::string>> config_echo(
    const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("build", std::string(kBuildTag));
  kv.emplace_back("runlog_version", "1");
  kv.emplace_back("task", c.task);
  kv.emplace_back("gsi", bool_str(c.gsi));
  kv.emplace_back("arm", c.arm);
  kv.emplace_back("demo_path", c.demo_path);
  kv.emplace_back("out_dir", c.out_dir);
  kv.emplace_back("seed", std::to_string(c.seed));
  kv.emplace_back("online_steps", std::to_string(c.online_steps));
  kv.emplace_back("eval_interval", std::to_string(c.eval_interval));
  kv.emplace_back("eval_episodes", std::to_string(c.eval_episodes));
  kv.emplace_back("gamma", fmt_double(c.hyper.gamma));
  kv.emplace_back("tau", fmt_double(c.hyper.tau));
  kv.emplace_back("alpha", fmt_double(c.hyper.alpha));
  kv.emplace_back("batch_size", std::to_string(c.hyper.batch_size));
  kv.emplace_back("actor_lr", fmt_double(c.hyper.actor_lr));
  kv.emplace_back("critic_lr", fmt_double(c.hyper.critic_lr));
  kv.emplace_back("policy_delay", std::to_string(c.hyper.policy_delay));
  kv.emplace_back("bootstrap_through_timeout", bool_str(c.hyper.bootstrap_through_timeout));
  kv.emplace_back("n_off", std::to_string(c.schedule.n_off));
  kv.emplace_back("delta_trans", std::to_string(c.schedule.delta_trans));
  kv.emplace_back("sigma", fmt_double(c.schedule.sigma));
  kv.emplace_back("noise_clip", fmt_double(c.schedule.noise_clip));
  kv.emplace_back("eta_std", fmt_double(c.schedule.eta_std));
  kv.emplace_back("hidden", join_ints(c.hidden));
  kv.emplace_back("replay_capacity", std::to_string(c.replay_capacity));
  kv.emplace_back("pin_demos", bool_str(c.pin_demos));
  kv.emplace_back("step_scale", fmt_double(c.geometry.step_scale));
  kv.emplace_back("success_radius", fmt_double(c.geometry.success_radius));
  kv.emplace_back("grip_radius", fmt_double(c.geometry.grip_radius));
  kv.emplace_back("spawn_margin", fmt_double(c.geometry.spawn_margin));
  kv.emplace_back("min_separation", fmt_double(c.geometry.min_separation));
  kv.emplace_back("horizon", std::to_string(c.geometry.horizon));
  kv.emplace_back("log_wall_ms", bool_str(c.log_wall_ms));
  kv.emplace_back("save_agent_path", c.save_agent_path);
  return kv;
}

void validate(const ExperimentConfig& c) {
  try {
    task_from_name(c.task);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!kArms.count(c.arm)) {
    throw ConfigError("config: unknown arm '" + c.arm +
                      "' (expected unified, td3, bc_td3, td3bc_td3 or bc_only)");
  }
  if (c.arm != "td3" && c.demo_path.empty()) {
    throw ConfigError("config: arm '" + c.arm + "' needs demo_path");
  }
  if (c.eval_interval <= 0) throw ConfigError("config: eval_interval must be positive");
  if (c.eval_episodes <= 0) throw ConfigError("config: eval_episodes must be positive");
  if (c.online_steps < 0) throw ConfigError("config: online_steps must be nonnegative");
  for (int h : c.hidden) {
    if (h <= 0) throw ConfigError("config: hidden sizes must be positive");
  }
  try {
    validate(c.hyper);
    validate(c.schedule);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

EvalPolicy exploit_policy(const Td3Agent& agent) {
  return [&agent, rng = Rng(0)](const GoalTaskState&,
                                std::span<const double> obs) mutable {
    return agent.select_action(obs, rng, ActionMode::kExploit);
  };
}

EvalRecord evaluate(const EvalPolicy& policy, TaskKind task, bool gsi,
                    const GeometryConfig& geom, int n_episodes,
                    std::uint64_t seed, long t) {
  if (n_episodes <= 0) throw std::invalid_argument("evaluate: n_episodes must be positive");
  const auto start = std::chrono::steady_clock::now();
  GoalTask env(task, gsi, geom);
  int successes = 0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    Observation obs = env.reset(mix_seed(seed, ep));
    bool success = false;
    while (!env.done()) {
      const ActionVec action = policy(env.state(), obs);
      StepResult sr = env.step(action);
      success = sr.success;
      obs = std::move(sr.observation);
    }
    if (success) ++successes;
  }
  const auto stop = std::chrono::steady_clock::now();
  EvalRecord rec;
  rec.t = t;
  rec.episodes = n_episodes;
  rec.success_rate = static_cast<double>(successes) / n_episodes;
  rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
  return rec;
}

namespace {

constexpr const char* kCsvColumns =
    "t,success_rate,episodes,wall_ms,f_t,g_t,lambda,critic_loss,actor_obj";

void write_header_lines(const RunLog& log, std::ostream& out) {
  for (const auto& [k, v] : log.header) out << "# " << k << '=' << v << "\n";
  out << kCsvColumns << "\n";
}

void write_row(const RunLogRow& r, std::ostream& out) {
  out << r.t << ',' << fmt_double(r.success_rate) << ',' << r.episodes << ','
      << r.wall_ms << ',' << fmt_double(r.f_t) << ',' << fmt_double(r.g_t)
      << ',' << fmt_double(r.lambda) << ',' << fmt_double(r.critic_loss) << ','
      << fmt_double(r.actor_obj) << "\n";
}

std::string sanitize_reason(std::string reason) {
  for (char& ch : reason) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return reason;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string RunLog::header_value(const std::string& key) const {
  for (const auto& [k, v] : header) {
    if (k == key) return v;
  }
  return "";
}

void write_runlog_csv(const RunLog& log, std::ostream& out) {
  write_header_lines(log, out);
  for (const RunLogRow& r : log.rows) write_row(r, out);
  if (log.complete) {
    out << "# status=complete\n";
  } else {
    out << "# status=aborted reason=" << sanitize_reason(log.abort_reason) << "\n";
  }
}

RunLog read_runlog_csv(std::istream& in) {
  RunLog log;
  log.complete = false;
  log.abort_reason = "missing status footer";
  std::string line;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const std::string body = line.substr(2);
      const std::size_t eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      if (key == "status") {
        if (value == "complete") {
          log.complete = true;
          log.abort_reason.clear();
        } else {
          log.complete = false;
          const std::size_t r = value.find("reason=");
          log.abort_reason = r == std::string::npos ? value : value.substr(r + 7);
        }
      } else {
        log.header.emplace_back(key, value);
      }
      continue;
    }
    if (!saw_columns) {
      if (line != kCsvColumns) {
        throw std::runtime_error("run log: unexpected column header '" + line + "'");
      }
      saw_columns = true;
      continue;
    }
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 9) {
      throw std::runtime_error("run log: malformed row '" + line + "'");
    }
    RunLogRow row;
    row.t = parse_long(f[0]);
    row.success_rate = parse_double(f[1]);
    row.episodes = static_cast<int>(parse_long(f[2]));
    row.wall_ms = parse_long(f[3]);
    row.f_t = parse_double(f[4]);
    row.g_t = parse_double(f[5]);
    row.lambda = parse_double(f[6]);
    row.critic_loss = parse_double(f[7]);
    row.actor_obj = parse_double(f[8]);
    log.rows.push_back(row);
  }
  return log;
}

RunLog load_runlog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run log '" + path + "'");
  return read_runlog_csv(in);
}

namespace {

// Arm-specific effective schedule; the configured values stay in the header
// for cross-arm comparisons.
ScheduleParams effective_schedule(const ExperimentConfig& c) {
  ScheduleParams s = c.schedule;
  if (c.arm == "td3") {
    s.n_off = 0;
    s.delta_trans = 0;
  } else if (c.arm == "bc_td3" || c.arm == "td3bc_td3") {
    s.delta_trans = 0;
  }
  return s;
}

bool arm_uses_demos(const std::string& arm) { return arm != "td3"; }

std::string runlog_filename(const ExperimentConfig& c) {
  return c.task + "_" + c.arm + "_gsi" + (c.gsi ? "1" : "0") + "_seed" +
         std::to_string(c.seed) + ".csv";
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const TaskKind task = task_from_name(config.task);
  const ScheduleParams schedule = effective_schedule(config);
  const int obs_dim = observation_dim(task, config.gsi);
  const int act_dim = o2orl::action_dim(task);

  ReplayBuffer buffer(config.replay_capacity);
  if (arm_uses_demos(config.arm)) {
    DemoDataset demos;
    try {
      demos = load_demos(config.demo_path);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: demo_path: ") + e.what());
    }
    if (demos.meta.task != config.task || demos.meta.gsi != config.gsi) {
      throw ConfigError("config: demo file was recorded for task '" +
                        demos.meta.task + "' gsi=" + bool_str(demos.meta.gsi) +
                        ", run wants '" + config.task +
                        "' gsi=" + bool_str(config.gsi));
    }
    if (demos.meta.obs_dim != obs_dim || demos.meta.act_dim != act_dim) {
      throw ConfigError("config: demo dimensions disagree with the task");
    }
    try {
      buffer = init_from_demos(demos, config.replay_capacity, config.pin_demos);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  auto agent = std::make_unique<Td3Agent>(
      obs_dim, act_dim, config.hidden, config.hyper, schedule,
      mix_seed(config.seed, seed_stream::kNetInit));

  Rng train_rng(mix_seed(config.seed, seed_stream::kTrain));
  Rng env_seed_rng(mix_seed(config.seed, seed_stream::kEnvEpisodes));
  const std::uint64_t eval_seed_base = mix_seed(config.seed, seed_stream::kEval);

  RunResult result;
  result.log.header = config_echo(config);
  result.log.header.emplace_back("effective_n_off", std::to_string(schedule.n_off));
  result.log.header.emplace_back("effective_delta_trans",
                                 std::to_string(schedule.delta_trans));

  std::filesystem::create_directories(config.out_dir);
  result.log_path =
      (std::filesystem::path(config.out_dir) / runlog_filename(config)).string();
  std::ofstream out(result.log_path);
  if (!out) throw ConfigError("config: cannot write '" + result.log_path + "'");
  write_header_lines(result.log, out);

  long eval_ordinal = 0;
  long last_eval_t = -1;
  auto do_eval = [&](long t) {
    if (t == last_eval_t) return;
    last_eval_t = t;
    const EvalRecord rec =
        evaluate(exploit_policy(*agent), task, config.gsi, config.geometry,
                 config.eval_episodes, mix_seed(eval_seed_base, eval_ordinal++), t);
    RunLogRow row;
    row.t = t;
    row.success_rate = rec.success_rate;
    row.episodes = rec.episodes;
    row.wall_ms = config.log_wall_ms ? rec.wall_ms : 0;
    row.f_t = f_weight(t, schedule);
    row.g_t = g_weight(t, schedule);
    row.lambda = agent->last_stats().lambda;
    row.critic_loss = agent->last_stats().critic_loss_1;
    row.actor_obj = agent->last_stats().actor_objective;
    result.log.rows.push_back(row);
    write_row(row, out);
    out.flush();
  };
  auto hook = [&](long t) {
    if (t % config.eval_interval == 0) do_eval(t);
  };

  try {
    do_eval(0);
    if (config.arm == "unified" || config.arm == "td3bc_td3") {
      agent->train_offline(buffer, schedule.n_off, train_rng, hook);
    } else if (config.arm == "bc_td3" || config.arm == "bc_only") {
      agent->train_offline_bc(buffer, schedule.n_off, train_rng, hook);
      agent->sync_targets();
    }
    do_eval(agent->t());  // offline/online boundary
    if (config.arm != "bc_only" && config.online_steps > 0) {
      GoalTask env(task, config.gsi, config.geometry);
      agent->train_online(env, buffer, config.online_steps, train_rng,
                          env_seed_rng, hook);
    }
    do_eval(agent->t());  // final
    out << "# status=complete\n";
  } catch (const std::exception& e) {
    result.log.complete = false;
    result.log.abort_reason = e.what();
    out << "# status=aborted reason=" << sanitize_reason(e.what()) << "\n";
    out.flush();
    result.agent = std::move(agent);
    return result;
  }

  if (!config.save_agent_path.empty()) {
    std::ofstream ckpt(config.save_agent_path);
    if (!ckpt) {
      throw ConfigError("config: cannot write '" + config.save_agent_path + "'");
    }
    agent->save(ckpt);
  }

  result.agent = std::move(agent);
  return result;
}

double transition_drop(const RunLog& log, long n_off, long window_end) {
  double baseline = std::numeric_limits<double>::quiet_NaN();
  bool have_baseline = false;
  for (const RunLogRow& r : log.rows) {
    if (r.t <= n_off) {
      baseline = r.success_rate;
      have_baseline = true;
    }
  }
  if (!have_baseline) {
    throw std::runtime_error("transition_drop: no evaluation at or before the offline boundary");
  }
  double min_rate = std::numeric_limits<double>::infinity();
  bool have_window = false;
  for (const RunLogRow& r : log.rows) {
    if (r.t >= n_off && r.t <= window_end) {
      min_rate = std::min(min_rate, r.success_rate);
      have_window = true;
    }
  }
  if (!have_window) {
    throw std::runtime_error("transition_drop: no evaluations inside the window");
  }
  return (baseline - min_rate) * 100.0;
}

double transition_drop(const RunLog& log) {
  const std::string n_off_s = log.header_value("effective_n_off");
  const std::string delta_s = log.header_value("delta_trans");
  if (n_off_s.empty() || delta_s.empty()) {
    throw std::runtime_error("transition_drop: log header lacks schedule fields");
  }
  const long n_off = parse_long(n_off_s);
  const long delta = parse_long(delta_s);
  return transition_drop(log, n_off, n_off + 2 * delta);
}

long steps_to_90(const RunLog& log) {
  const auto& rows = log.rows;
  for (std::size_t i = 0; i + 3 < rows.size(); ++i) {
    bool ok = true;
    for (std::size_t j = i; j <= i + 3; ++j) {
      if (rows[j].success_rate < 0.9) {
        ok = false;
        break;
      }
    }
    if (ok) return rows[i].t;
  }
  return -1;
}

double final_rate(const RunLog& log) {
  const auto& rows = log.rows;
  if (rows.empty()) throw std::runtime_error("final_rate: empty log");
  const std::size_t n = std::min<std::size_t>(5, rows.size());
  double sum = 0.0;
  for (std::size_t i = rows.size() - n; i < rows.size(); ++i) {
    sum += rows[i].success_rate;
  }
  return sum / static_cast<double>(n);
}

long steps_to_convergence(const RunLog& log) {
  const auto& rows = log.rows;
  if (rows.empty()) return -1;
  const double fr = final_rate(log);
  long last_violation = -1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (std::abs(rows[i].success_rate - fr) > 0.05) {
      last_violation = static_cast<long>(i);
    }
  }
  if (last_violation < 0) return rows.front().t;
  const std::size_t idx = static_cast<std::size_t>(last_violation) + 1;
  if (idx >= rows.size()) return -1;
  return rows[idx].t;
}

namespace {

struct Accum {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  double mean() const {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  double stddev() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size() - 1));
  }
};

struct GroupStats {
  std::string task, arm, gsi, demo;
  int n_logs = 0;
  Accum s90, conv, final_r, drop;
  int s90_reached = 0, conv_reached = 0;
};

std::string fmt_stat(const Accum& a, int reached, bool integral) {
  if (reached == 0) return "-";
  char buf[64];
  if (integral) {
    std::snprintf(buf, sizeof(buf), "%.0f +- %.0f", a.mean(), a.stddev());
  } else {
    std::snprintf(buf, sizeof(buf), "%.3f +- %.3f", a.mean(), a.stddev());
  }
  return buf;
}

const std::set<std::string> kGroupExcludedKeys = {"seed", "out_dir",
                                                  "save_agent_path",
                                                  "log_wall_ms"};

}  // namespace

void report(const std::vector<RunLog>& logs, std::ostream& csv_out,
            std::ostream& text_out) {
  if (logs.empty()) throw std::invalid_argument("report: needs at least one log");

  std::map<std::string, GroupStats> groups;
  int skipped = 0;
  for (const RunLog& log : logs) {
    if (!log.complete) {
      ++skipped;
      continue;
    }
    std::string key;
    for (const auto& [k, v] : log.header) {
      if (kGroupExcludedKeys.count(k)) continue;
      key += k;
      key += '=';
      key += v;
      key += ';';
    }
    GroupStats& g = groups[key];
    if (g.n_logs == 0) {
      g.task = log.header_value("task");
      g.arm = log.header_value("arm");
      g.gsi = log.header_value("gsi");
      g.demo = log.header_value("demo_path");
    }
    g.n_logs += 1;
    const long s90 = steps_to_90(log);
    if (s90 >= 0) {
      g.s90.add(static_cast<double>(s90));
      g.s90_reached += 1;
    }
    const long conv = steps_to_convergence(log);
    if (conv >= 0) {
      g.conv.add(static_cast<double>(conv));
      g.conv_reached += 1;
    }
    g.final_r.add(final_rate(log));
    try {
      g.drop.add(transition_drop(log));
    } catch (const std::exception&) {
      // Logs without offline coverage have no drop metric.
    }
  }

  csv_out << "task,arm,gsi,demo_path,seeds,"
             "steps_to_90_mean,steps_to_90_std,steps_to_90_reached,"
             "steps_to_convergence_mean,steps_to_convergence_std,steps_to_convergence_reached,"
             "final_rate_mean,final_rate_std,"
             "transition_drop_mean,transition_drop_std\n";
  text_out << "task        arm         gsi  seeds  steps_to_90       steps_to_conv     final_rate        transition_drop\n";
  for (const auto& [key, g] : groups) {
    csv_out << g.task << ',' << g.arm << ',' << g.gsi << ',' << g.demo << ','
            << g.n_logs << ',';
    if (g.s90_reached > 0) {
      csv_out << fmt_double(g.s90.mean()) << ',' << fmt_double(g.s90.stddev());
    } else {
      csv_out << "-,-";
    }
    csv_out << ',' << g.s90_reached << ',';
    if (g.conv_reached > 0) {
      csv_out << fmt_double(g.conv.mean()) << ',' << fmt_double(g.conv.stddev());
    } else {
      csv_out << "-,-";
    }
    csv_out << ',' << g.conv_reached << ',' << fmt_double(g.final_r.mean())
            << ',' << fmt_double(g.final_r.stddev()) << ',';
    if (!g.drop.values.empty()) {
      csv_out << fmt_double(g.drop.mean()) << ',' << fmt_double(g.drop.stddev());
    } else {
      csv_out << "-,-";
    }
    csv_out << "\n";

    char line[256];
    std::snprintf(line, sizeof(line), "%-11s %-11s %-4s %-6d %-17s %-17s %-17s %-17s",
                  g.task.c_str(), g.arm.c_str(), g.gsi.c_str(), g.n_logs,
                  fmt_stat(g.s90, g.s90_reached, true).c_str(),
                  fmt_stat(g.conv, g.conv_reached, true).c_str(),
                  fmt_stat(g.final_r, g.n_logs, false).c_str(),
                  fmt_stat(g.drop, static_cast<int>(g.drop.values.size()), false).c_str());
    text_out << line << "\n";
  }
  if (skipped > 0) {
    text_out << "(skipped " << skipped << " incomplete log" << (skipped > 1 ? "s" : "")
             << ")\n";
  }
}

}  // namespace o2orl
