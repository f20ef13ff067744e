// Serial reference vs OpenMP surrogate kernel on rollout batches from the
// synthetic task.

#include <benchmark/benchmark.h>

#include <random>

#include "rlvr/grpo.hpp"
#include "rlvr/synthetic.hpp"
#include "rlvr/trainer.hpp"

namespace {

struct Batch {
  std::vector<rlvr::ActionGroup> groups;
  rlvr::Matrix weights;
  rlvr::GRPOConfig config;
};

Batch make_batch(std::size_t n_groups, std::size_t group_size) {
  rlvr::synthetic::TaskOptions task;
  task.n_items = 200;
  rlvr::GRPOConfig cfg;
  cfg.batch_states = n_groups;
  cfg.grad_accum_steps = 1;
  cfg.group_size = group_size;
  const std::size_t actions = rlvr::action_count_for(task.num_options);
  rlvr::Trainer trainer(rlvr::synthetic::make_task(task), rlvr::Matrix(task.feature_dim, actions),
                        cfg, {});
  Batch b{trainer.collect(0), trainer.params().weights, cfg};
  // move off the snapshot so both clip branches are exercised
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.5);
  for (double& v : b.weights.flat()) v += noise(rng);
  return b;
}

template <rlvr::SurrogateSums (*Kernel)(std::span<const rlvr::ActionGroup>, const rlvr::Matrix&,
                                        const rlvr::GRPOConfig&, bool)>
void run(benchmark::State& state) {
  const auto batch = make_batch(static_cast<std::size_t>(state.range(0)),
                                static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto sums = Kernel(batch.groups, batch.weights, batch.config, true);
    benchmark::DoNotOptimize(sums.objective_sum);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_SurrogateSerial(benchmark::State& s) { run<rlvr::kernels::surrogate_serial>(s); }
void BM_SurrogateParallel(benchmark::State& s) { run<rlvr::kernels::surrogate_parallel>(s); }

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({12, 3})->Args({96, 8})->Args({512, 16});
}

}  // namespace

BENCHMARK(BM_SurrogateSerial)->Apply(shapes);
BENCHMARK(BM_SurrogateParallel)->Apply(shapes);

BENCHMARK_MAIN();
