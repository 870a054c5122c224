#include "fedsim/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

std::vector<std::string> make_roster(int num_collaborators) {
  if (num_collaborators < 1) {
    throw BadConfig("need at least one collaborator");
  }
  int width = 1;
  for (int x = num_collaborators - 1; x >= 10; x /= 10) {
    ++width;
  }
  width = std::min(width, 12);
  std::vector<std::string> roster;
  roster.reserve(num_collaborators);
  char buf[32];
  for (int i = 0; i < num_collaborators; ++i) {
    std::snprintf(buf, sizeof(buf), "c%0*d", width, i);
    roster.emplace_back(buf);
  }
  return roster;
}

namespace {

void validate(const PartitionConfig& cfg) {
  if (cfg.num_collaborators < 1) {
    throw BadConfig("num_collaborators must be >= 1");
  }
  if (cfg.total_samples < cfg.num_collaborators) {
    throw BadConfig("total_samples must be >= num_collaborators");
  }
  if (!(cfg.skew_alpha > 0.0)) {
    throw BadConfig("skew_alpha must be > 0");
  }
  if (cfg.num_classes < 2 || cfg.num_features < 1) {
    throw BadConfig("need num_classes >= 2 and num_features >= 1");
  }
  if (cfg.noise_scale < 0.0 || cfg.shift_scale < 0.0) {
    throw BadConfig("noise_scale and shift_scale must be >= 0");
  }
}

/// Splits total into counts proportional to weights: floor the targets, hand
/// the leftover units to the largest fractional remainders (ties to the
/// lower index), then repair zeros by taking from the current maximum.
std::vector<std::int64_t> proportional_counts(std::span<const double> weights,
                                              std::int64_t total) {
  const std::size_t k = weights.size();
  std::vector<std::int64_t> counts(k);
  std::vector<std::pair<double, std::size_t>> remainders(k);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double target = weights[i] * static_cast<double>(total);
    counts[i] = static_cast<std::int64_t>(std::floor(target));
    remainders[i] = {target - std::floor(target), i};
    assigned += counts[i];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
    counts[remainders[i % k].second] += 1;
  }
  for (std::size_t i = 0; i < k; ++i) {
    while (counts[i] < 1) {
      auto it = std::max_element(counts.begin(), counts.end());
      if (*it <= 1) {
        throw BadConfig("cannot give every shard at least one sample");
      }
      *it -= 1;
      counts[i] += 1;
    }
  }
  return counts;
}

}  // namespace

std::vector<ShardSpec> make_partition(const PartitionConfig& cfg) {
  validate(cfg);
  const std::size_t k = static_cast<std::size_t>(cfg.num_collaborators);
  auto roster = make_roster(cfg.num_collaborators);
  SplitMix64 rng(cfg.seed);

  std::vector<ShardSpec> shards(k);
  for (std::size_t i = 0; i < k; ++i) {
    shards[i].collab_id = roster[i];
    shards[i].label_mixture = rng.next_dirichlet(
        cfg.skew_alpha, static_cast<std::size_t>(cfg.num_classes));
    shards[i].feature_shift.resize(cfg.num_features);
    for (auto& s : shards[i].feature_shift) {
      s = cfg.shift_scale * rng.next_gaussian();
    }
    shards[i].noise_scale = cfg.noise_scale;
  }

  auto quantity = rng.next_dirichlet(cfg.skew_alpha, k);
  auto counts = proportional_counts(quantity, cfg.total_samples);
  for (std::size_t i = 0; i < k; ++i) {
    shards[i].sample_count = counts[i];
  }
  return shards;
}

Dataset materialize_shard(const ShardSpec& spec, const TaskGenerator& gen,
                          std::uint64_t seed) {
  if (spec.sample_count < 1) {
    throw BadSpec("shard '" + spec.collab_id + "' has sample_count < 1");
  }
  const int d = gen.spec().num_features;
  const int k = gen.spec().num_classes;
  if (static_cast<int>(spec.label_mixture.size()) != k) {
    throw BadSpec("shard '" + spec.collab_id + "' label_mixture has " +
                  std::to_string(spec.label_mixture.size()) +
                  " entries for " + std::to_string(k) + " classes");
  }
  if (static_cast<int>(spec.feature_shift.size()) != d) {
    throw BadSpec("shard '" + spec.collab_id + "' feature_shift has " +
                  std::to_string(spec.feature_shift.size()) +
                  " entries for " + std::to_string(d) + " features");
  }
  double mix_sum = std::accumulate(spec.label_mixture.begin(),
                                   spec.label_mixture.end(), 0.0);
  if (std::abs(mix_sum - 1.0) > 1e-9) {
    throw BadSpec("shard '" + spec.collab_id + "' label_mixture sums to " +
                  std::to_string(mix_sum));
  }

  SplitMix64 rng(seed);
  const std::size_t n = static_cast<std::size_t>(spec.sample_count);
  Dataset out;
  out.num_features = d;
  out.features.resize(n * static_cast<std::size_t>(d));
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    int cls = static_cast<int>(rng.next_categorical(spec.label_mixture));
    out.labels[i] = cls;
    auto mean = gen.class_mean(cls);
    for (int f = 0; f < d; ++f) {
      double noise = spec.noise_scale * rng.next_gaussian();
      out.features[i * static_cast<std::size_t>(d) + f] =
          mean[f] + noise + spec.feature_shift[f];
    }
  }
  return out;
}

}  // namespace fedsim
