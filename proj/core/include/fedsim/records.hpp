#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/collaborator.hpp"

namespace fedsim {

/// Everything persisted about one completed federation round. Doubles are
/// stored as hex-float strings in records.jsonl so the round trip is
/// bit-exact; wall_ms is diagnostic only and excluded from all determinism
/// comparisons.
struct RoundRecord {
  int round_index = 0;
  std::vector<std::string> selected;
  std::vector<double> local_loss_before;  // aligned with selected
  std::vector<double> local_loss_after;
  AggregationWeights weights;
  double drift = 0.0;  // mean across weight blocks
  std::optional<EvalMetrics> validation;
  double cum_comm_cost = 0.0;
  double wall_ms = 0.0;
};

/// One JSON line, schema 1, hex-float doubles. Exact inverse of
/// parse_round_record.
std::string round_record_to_jsonl(const RoundRecord& rec);
RoundRecord parse_round_record(const std::string& line);

void append_record_jsonl(const std::filesystem::path& path,
                         const RoundRecord& rec);
std::vector<RoundRecord> read_records_jsonl(const std::filesystem::path& path);

struct DigestOptions {
  bool include_strategy = true;  // off when comparing across strategy labels
  bool include_wall_ms = false;  // wall time is never deterministic
};

/// Order-sensitive FNV digest of a trajectory; bit-identical runs produce
/// identical digests.
std::string trajectory_digest(std::span<const RoundRecord> records,
                              const DigestOptions& opts = {});

}  // namespace fedsim
