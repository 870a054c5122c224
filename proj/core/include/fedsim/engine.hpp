#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/collaborator.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/records.hpp"
#include "fedsim/selection.hpp"
#include "fedsim/task.hpp"

namespace fedsim {

struct ExperimentConfig {
  int rounds = 20;
  int eval_every = 1;
  int checkpoint_every = 10;  // 0 disables periodic checkpoints
  int workers = 0;            // 0 means hardware concurrency
  std::uint64_t master_seed = 1;
  double accuracy_threshold = 0.9;  // for rounds_to_threshold
  std::filesystem::path output_dir;  // empty means in-memory only
  SchedulerConfig scheduler;
  AggregationConfig aggregation;
  PartitionConfig partition;
  TaskSpec task;
  LocalTrainConfig train;
};

struct ExperimentResult {
  ParameterSet final_master;
  std::vector<RoundRecord> records;
  std::vector<std::string> roster;
};

/// Seed handed to collaborator `roster_index` for its round-`round` local
/// training. Hash-derived, so resumed runs derive identical seeds without
/// replaying any stream.
std::uint64_t train_seed(std::uint64_t master_seed, int round,
                         std::size_t roster_index);

/// Runs the federation: per round, plan <- scheduler, fan out local training
/// over a bounded worker pool, aggregate, evaluate on the held-out IID
/// validation set, record, checkpoint on schedule. Fully deterministic under
/// the config (wall_ms aside) for any worker count. When output_dir is set,
/// writes config.json, records.jsonl and round_<k>/ checkpoints there.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Continues a run from a round_<k> checkpoint directory. The trajectory is
/// bit-identical to an uninterrupted run (wall_ms aside). Prior records are
/// read from the records.jsonl next to the checkpoint; the combined history
/// is written to cfg.output_dir.
ExperimentResult resume(const std::filesystem::path& checkpoint_dir,
                        const ExperimentConfig& cfg);

}  // namespace fedsim
