#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "fedsim/engine.hpp"
#include "fedsim/records.hpp"

namespace fedsim {

/// Payload accounting for one federation setup. The participation-fraction
/// cost below is this artifact's own definition; it is not the FeTS
/// leaderboard metric, whose formula is unpublished.
struct CommCostModel {
  std::size_t per_update_payload_bytes = 0;  // serialized checkpoint size
  std::int64_t total_possible_updates = 0;   // roster_size * rounds
};

CommCostModel comm_cost_model(const ParameterSet& schema, int roster_size,
                              int rounds);

/// Fraction of possible collaborator-round participations actually used:
/// sum_r |selected_r| / (rounds * roster_size), in [0, 1].
double communication_cost(std::span<const RoundRecord> records,
                          int roster_size);

struct ConvergenceStat {
  /// Trapezoidal area under validation accuracy over the normalized round
  /// axis; equals the accuracy itself for a constant curve.
  double auc_val_metric = 0.0;
  double final_val_loss = 0.0;
  std::optional<int> rounds_to_threshold;
};

ConvergenceStat convergence_stat(std::span<const RoundRecord> records,
                                 double accuracy_threshold = 0.9);

/// The per-round CSV (fixed documented column order; %.17g decimals, which
/// round-trip binary64 exactly). Weight columns are per roster member,
/// blank when not selected that round.
std::string rounds_csv(const ExperimentResult& result);

/// Writes summary.json, rounds.csv and the plot-ready series/ files into
/// out_dir. records.jsonl (written by the engine) stays the lossless
/// carrier of full per-tensor detail.
void export_report(const ExperimentResult& result, const ExperimentConfig& cfg,
                   const std::filesystem::path& out_dir);

}  // namespace fedsim
