#include <benchmark/benchmark.h>

#include "fedsim/collaborator.hpp"
#include "fedsim/partition.hpp"

namespace {

using namespace fedsim;

void BM_local_train(benchmark::State& state, ModelFamily family) {
  TaskSpec task;
  task.model_family = family;
  task.num_features = 10;
  task.num_classes = 5;
  task.hidden_width = 16;
  TaskGenerator gen(task, 7);
  Dataset shard = gen.sample_iid(static_cast<std::size_t>(state.range(0)), 3);
  ParameterSet master = init_params(task, 1);
  LocalTrainConfig cfg;
  cfg.learning_rate = 5e-5;
  cfg.batch_size = 32;
  cfg.seed = 11;
  for (auto _ : state) {
    auto update = local_train("c0", master, shard, task, cfg);
    benchmark::DoNotOptimize(update.params);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_local_train, linear_softmax,
                  fedsim::ModelFamily::kLinearSoftmax)
    ->Arg(200)
    ->Arg(2000);
BENCHMARK_CAPTURE(BM_local_train, mlp_1hidden, fedsim::ModelFamily::kMlp1Hidden)
    ->Arg(200)
    ->Arg(2000);
