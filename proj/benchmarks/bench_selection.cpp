#include <benchmark/benchmark.h>

#include "fedsim/partition.hpp"
#include "fedsim/selection.hpp"

namespace {

void BM_next_round(benchmark::State& state) {
  const int roster = static_cast<int>(state.range(0));
  auto scheduler =
      fedsim::Scheduler::create(fedsim::make_roster(roster), 0.2, 99);
  for (auto _ : state) {
    auto plan = scheduler.next_round();
    benchmark::DoNotOptimize(plan.selected);
  }
  state.SetItemsProcessed(state.iterations());
}

}  // namespace

BENCHMARK(BM_next_round)->Arg(33)->Arg(256)->Arg(4096);
