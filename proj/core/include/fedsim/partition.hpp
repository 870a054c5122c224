#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/task.hpp"

namespace fedsim {

/// Descriptor of one collaborator's synthetic data shard.
struct ShardSpec {
  std::string collab_id;
  std::int64_t sample_count = 1;
  std::vector<double> label_mixture;  // sums to 1
  std::vector<double> feature_shift;  // per-feature offset
  double noise_scale = 1.0;
};

/// Non-IID partition generator settings. skew_alpha is the Dirichlet
/// concentration: small values give strongly skewed label mixtures and
/// sample counts; large values approach IID.
struct PartitionConfig {
  int num_collaborators = 33;
  std::int64_t total_samples = 6600;
  double skew_alpha = 0.3;
  int num_classes = 5;
  int num_features = 10;
  double shift_scale = 1.0;
  double noise_scale = 1.0;
  std::uint64_t seed = 7;
};

/// Zero-padded collaborator IDs: c00, c01, ... Stable roster naming shared
/// by the partitioner, scheduler and engine.
std::vector<std::string> make_roster(int num_collaborators);

/// Draws per-collaborator label mixtures and feature shifts, and splits
/// total_samples into per-shard counts (Dirichlet-proportional,
/// largest-remainder rounding, every shard >= 1). Deterministic under seed.
std::vector<ShardSpec> make_partition(const PartitionConfig& cfg);

/// Generates the shard's dataset: labels drawn from the mixture, features
/// from the task's class clusters shifted by feature_shift with Gaussian
/// noise of the shard's noise_scale. Deterministic under seed.
Dataset materialize_shard(const ShardSpec& spec, const TaskGenerator& gen,
                          std::uint64_t seed);

}  // namespace fedsim
