#include <benchmark/benchmark.h>

#include "fedsim/aggregation.hpp"
#include "fedsim/rng.hpp"

namespace {

using namespace fedsim;

std::vector<CollaboratorUpdate> make_updates(std::size_t collabs,
                                             std::size_t elems,
                                             bool with_prev) {
  SplitMix64 rng(42);
  std::vector<CollaboratorUpdate> updates;
  for (std::size_t c = 0; c < collabs; ++c) {
    TensorEntry weight{"weight", {elems}, std::vector<double>(elems)};
    TensorEntry bias{"bias", {std::max<std::size_t>(1, elems / 16)},
                     std::vector<double>(std::max<std::size_t>(1, elems / 16))};
    for (auto& v : weight.values) v = rng.next_gaussian();
    for (auto& v : bias.values) v = rng.next_gaussian();
    CollaboratorUpdate u;
    u.collab_id = "c" + std::to_string(c);
    u.params = ParameterSet({weight, bias});
    u.sample_count = 50 + static_cast<std::int64_t>(rng.next_below(200));
    if (with_prev) {
      auto flat = u.params.flatten();
      for (auto& v : flat) v += 0.01 * rng.next_gaussian();
      u.prev_params = u.params.with_values(flat);
    }
    updates.push_back(std::move(u));
  }
  return updates;
}

void BM_aggregate(benchmark::State& state, Strategy strategy, int round) {
  const auto collabs = static_cast<std::size_t>(state.range(0));
  const auto elems = static_cast<std::size_t>(state.range(1));
  auto updates = make_updates(collabs, elems, true);
  AggregationConfig cfg;
  cfg.strategy = strategy;
  for (auto _ : state) {
    auto result = aggregate(updates, round, cfg);
    benchmark::DoNotOptimize(result.master);
  }
  state.SetItemsProcessed(state.iterations() * collabs * elems);
}

}  // namespace

BENCHMARK_CAPTURE(BM_aggregate, fedavg, fedsim::Strategy::kFedAvg, 1)
    ->Args({8, 1 << 10})
    ->Args({33, 1 << 10})
    ->Args({33, 1 << 16});
BENCHMARK_CAPTURE(BM_aggregate, simagg, fedsim::Strategy::kSimAgg, 1)
    ->Args({8, 1 << 10})
    ->Args({33, 1 << 10})
    ->Args({33, 1 << 16});
BENCHMARK_CAPTURE(BM_aggregate, regsimagg_post_onset,
                  fedsim::Strategy::kRegSimAgg, 11)
    ->Args({8, 1 << 10})
    ->Args({33, 1 << 10})
    ->Args({33, 1 << 16});
