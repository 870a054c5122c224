#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsim/param_set.hpp"

namespace fedsim {

/// One collaborator's contribution to a federation round.
struct CollaboratorUpdate {
  std::string collab_id;
  ParameterSet params;
  std::int64_t sample_count = 1;
  /// The master this collaborator received at round start; required by the
  /// regularizer once the onset round has passed.
  std::optional<ParameterSet> prev_params;
};

enum class Strategy { kFedAvg, kSimAgg, kRegSimAgg, kPlainMean };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
std::string to_string(WeightScope s);
WeightScope scope_from_string(const std::string& s);
std::string to_string(Norm n);
Norm norm_from_string(const std::string& s);

struct AggregationConfig {
  Strategy strategy = Strategy::kRegSimAgg;
  double epsilon = 1e-5;
  int regularization_start_round = 10;
  WeightScope scope = WeightScope::kPerTensor;
  Norm norm = Norm::kL2;
};

/// Weight diagnostics for one scope unit: the whole flattened set in global
/// scope, or one named tensor in per_tensor scope. All four vectors sum to 1.
struct WeightBlock {
  std::string tensor;        // empty in global scope
  std::size_t elements = 0;  // element count of the unit (whole set if global)
  std::vector<double> similarity;    // u
  std::vector<double> sample;        // v
  std::vector<double> combined;      // w, pre-regularization
  std::vector<double> pre_norm;      // w / (drift + eps), before renormalizing
  std::vector<double> final_weight;  // what actually multiplied the params
  double drift = 0.0;                // 0 when the regularizer did not run
};

/// Full per-round weight report. Every intermediate is exposed for logging:
/// u and w are computed under all strategies even when final ignores them.
struct AggregationWeights {
  Strategy strategy = Strategy::kRegSimAgg;
  WeightScope scope = WeightScope::kPerTensor;
  bool regularized = false;
  std::vector<std::string> collab_ids;
  std::vector<WeightBlock> blocks;  // 1 block (global) or one per tensor

  double mean_drift() const;
  /// Effective scalar weight per collaborator: the block value in global
  /// scope, the element-count-weighted mean across tensors otherwise.
  /// Selects one of the block vectors (u, v, w, pre_norm or final).
  std::vector<double> effective(const std::vector<double> WeightBlock::* field) const;
  std::vector<double> effective_final() const {
    return effective(&WeightBlock::final_weight);
  }
};

/// Similarity weights u_c: inverse distance to the round mean, normalized.
/// All-zero distances (single collaborator, identical parameters) fall back
/// to uniform.
std::vector<double> similarity_weights(std::span<const CollaboratorUpdate> updates,
                                       double epsilon, Norm norm = Norm::kL2);
/// Per-tensor variant: result[t][c] is collaborator c's weight for tensor t.
std::vector<std::vector<double>> similarity_weights_per_tensor(
    std::span<const CollaboratorUpdate> updates, double epsilon,
    Norm norm = Norm::kL2);

/// Sample-size weights v_c = N_c / sum(N).
std::vector<double> sample_weights(std::span<const CollaboratorUpdate> updates);

/// Aggregation weights w_c = (u_c + v_c) / sum(u + v).
std::vector<double> combine_weights(std::span<const double> u,
                                    std::span<const double> v);

struct RegularizedWeights {
  std::vector<double> pre_norm;      // w / (drift + eps)
  std::vector<double> final_weight;  // pre_norm renormalized to sum 1
  double drift = 0.0;
  bool applied = false;  // false when round <= onset (weights pass through)
};

/// Post-onset drift regularizer. drift is the mean over collaborators of the
/// norm of (prev_params - params); the divisor is shared by all weights, so
/// after renormalization the output equals the input up to floating-point
/// rounding of the divide/renormalize cycle. Before the onset round the
/// weights pass through untouched.
RegularizedWeights regularize_weights(std::span<const double> w,
                                      std::span<const CollaboratorUpdate> updates,
                                      int round, const AggregationConfig& cfg);

struct AggregationResult {
  ParameterSet master;
  AggregationWeights weights;
};

/// Full round fusion. fedavg weighs by sample counts, plain_mean uniformly,
/// simagg by similarity + sample share, regsimagg additionally applies the
/// post-onset drift regularizer. The master is the convex combination of the
/// collaborator parameters under the final weights.
AggregationResult aggregate(std::span<const CollaboratorUpdate> updates,
                            int round, const AggregationConfig& cfg);

}  // namespace fedsim
