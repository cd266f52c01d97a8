#include <benchmark/benchmark.h>

#include "o2orl/agent.hpp"
#include "o2orl/demogen.hpp"
#include "o2orl/env.hpp"
#include "o2orl/net.hpp"
#include "o2orl/replay.hpp"

namespace {

using namespace o2orl;

MlpNet bench_net() {
  Rng rng(7);
  return make_mlp({12, 64, 64, 2}, OutputActivation::kTanh, rng);
}

void BM_Forward(benchmark::State& state) {
  const MlpNet net = bench_net();
  const std::vector<double> input(12, 0.3);
  MlpTrace trace;
  for (auto _ : state) {
    forward_trace(net, input, trace);
    benchmark::DoNotOptimize(trace.act.back()[0]);
  }
}
BENCHMARK(BM_Forward);

void BM_Backward(benchmark::State& state) {
  const MlpNet net = bench_net();
  const std::vector<double> input(12, 0.3);
  const std::vector<double> upstream(2, 1.0);
  MlpTrace trace;
  std::vector<double> grad(param_count(net), 0.0);
  forward_trace(net, input, trace);
  for (auto _ : state) {
    backward_trace(net, trace, upstream, grad);
    benchmark::DoNotOptimize(grad[0]);
  }
}
BENCHMARK(BM_Backward);

void BM_AdamStep(benchmark::State& state) {
  MlpNet net = bench_net();
  AdamState opt = make_adam_state(net);
  const std::vector<double> grad(param_count(net), 1e-3);
  for (auto _ : state) {
    adam_step(net, grad, opt, 3e-4);
  }
}
BENCHMARK(BM_AdamStep);

void BM_EnvStep(benchmark::State& state) {
  GoalTask env(TaskKind::kPickPlace, /*gsi_enabled=*/true);
  env.reset(3);
  const std::vector<double> action = {0.3, -0.2, -1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(env.step(action).reward);
    if (env.done()) env.reset(3);
  }
}
BENCHMARK(BM_EnvStep);

void BM_BufferSample(benchmark::State& state) {
  ReplayBuffer buffer(100000);
  Rng rng(11);
  GoalTask env(TaskKind::kReach, false);
  Observation obs = env.reset(5);
  for (int i = 0; i < 5000; ++i) {
    ActionVec a = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    StepResult sr = env.step(a);
    buffer.push(Transition{obs, a, sr.reward, sr.observation, sr.done});
    obs = sr.done ? env.reset(5 + i) : sr.observation;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(buffer.sample(256, rng).size());
  }
}
BENCHMARK(BM_BufferSample);

void BM_UpdateIteration(benchmark::State& state) {
  const GeometryConfig geom;
  const ScriptedPolicy expert{TaskKind::kReach, 0.0};
  const DemoDataset demos =
      generate_demos(expert, TaskKind::kReach, false, geom, 10, true, 17);
  ReplayBuffer buffer = init_from_demos(demos, 100000);
  Hyper hyper;
  hyper.batch_size = 256;
  Td3Agent agent(observation_dim(TaskKind::kReach, false),
                 action_dim(TaskKind::kReach), {64, 64}, hyper,
                 ScheduleParams{}, 23);
  Rng rng(29);
  for (auto _ : state) {
    benchmark::DoNotOptimize(agent.update_once(buffer, rng).critic_loss_1);
  }
}
BENCHMARK(BM_UpdateIteration);

}  // namespace

BENCHMARK_MAIN();
