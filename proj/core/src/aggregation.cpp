#include "fedsim/aggregation.hpp"

#include <cmath>

#include "fedsim/errors.hpp"

namespace fedsim {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kFedAvg:
      return "fedavg";
    case Strategy::kSimAgg:
      return "simagg";
    case Strategy::kRegSimAgg:
      return "regsimagg";
    case Strategy::kPlainMean:
      return "plain_mean";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "fedavg") return Strategy::kFedAvg;
  if (s == "simagg") return Strategy::kSimAgg;
  if (s == "regsimagg") return Strategy::kRegSimAgg;
  if (s == "plain_mean") return Strategy::kPlainMean;
  throw BadConfig("unknown strategy '" + s +
                  "' (valid: fedavg, simagg, regsimagg, plain_mean)");
}

std::string to_string(WeightScope s) {
  return s == WeightScope::kGlobal ? "global" : "per_tensor";
}

WeightScope scope_from_string(const std::string& s) {
  if (s == "global") return WeightScope::kGlobal;
  if (s == "per_tensor") return WeightScope::kPerTensor;
  throw BadConfig("unknown scope '" + s + "' (valid: global, per_tensor)");
}

std::string to_string(Norm n) { return n == Norm::kL1 ? "l1" : "l2"; }

Norm norm_from_string(const std::string& s) {
  if (s == "l1") return Norm::kL1;
  if (s == "l2") return Norm::kL2;
  throw BadConfig("unknown norm '" + s + "' (valid: l1, l2)");
}

namespace {

void require_config(const AggregationConfig& cfg, int round) {
  if (!(cfg.epsilon > 0.0)) {
    throw BadConfig("aggregation epsilon must be > 0");
  }
  if (cfg.regularization_start_round < 0) {
    throw BadConfig("regularization_start_round must be >= 0");
  }
  if (round < 0) {
    throw BadConfig("round index must be >= 0");
  }
}

void require_updates(std::span<const CollaboratorUpdate> updates) {
  if (updates.empty()) {
    throw EmptyInput("no collaborator updates");
  }
  for (const auto& u : updates) {
    if (u.sample_count < 1) {
      throw BadConfig("collaborator '" + u.collab_id +
                      "' has sample_count < 1");
    }
    if (!u.params.schema_compatible(updates.front().params)) {
      throw SchemaMismatch("collaborator '" + u.collab_id +
                           "' ships an incompatible parameter schema");
    }
  }
}

std::vector<const ParameterSet*> param_views(
    std::span<const CollaboratorUpdate> updates) {
  std::vector<const ParameterSet*> out;
  out.reserve(updates.size());
  for (const auto& u : updates) {
    out.push_back(&u.params);
  }
  return out;
}

/// Eqs. 2-3 on one scope unit, given each collaborator's distance to the
/// round mean. Zero total distance means every collaborator sits exactly at
/// the mean; similarity is then uniform by symmetry.
std::vector<double> similarity_from_distances(std::span<const double> dist,
                                              double epsilon) {
  const std::size_t k = dist.size();
  double dist_sum = 0.0;
  for (double d : dist) {
    dist_sum += d;
  }
  std::vector<double> u(k);
  if (dist_sum == 0.0) {
    for (auto& x : u) {
      x = 1.0 / static_cast<double>(k);
    }
    return u;
  }
  double sim_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    u[c] = dist_sum / (dist[c] + epsilon);
    sim_sum += u[c];
  }
  for (auto& x : u) {
    x /= sim_sum;
  }
  return u;
}

/// Shared divide-by-drift plus renormalization used by both scopes.
RegularizedWeights regularize_with_drift(std::span<const double> w,
                                         double drift, double epsilon) {
  RegularizedWeights out;
  out.applied = true;
  out.drift = drift;
  out.pre_norm.resize(w.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    out.pre_norm[c] = w[c] / (drift + epsilon);
    sum += out.pre_norm[c];
  }
  out.final_weight.resize(w.size());
  for (std::size_t c = 0; c < w.size(); ++c) {
    out.final_weight[c] = out.pre_norm[c] / sum;
  }
  return out;
}

void require_prev_params(std::span<const CollaboratorUpdate> updates) {
  for (const auto& u : updates) {
    if (!u.prev_params.has_value()) {
      throw MissingPrevParams("collaborator '" + u.collab_id +
                              "' lacks prev_params past the regularization "
                              "onset round");
    }
    if (!u.prev_params->schema_compatible(u.params)) {
      throw SchemaMismatch("collaborator '" + u.collab_id +
                           "' prev_params schema differs from params");
    }
  }
}

}  // namespace

std::vector<double> similarity_weights(
    std::span<const CollaboratorUpdate> updates, double epsilon, Norm norm) {
  require_updates(updates);
  auto views = param_views(updates);
  ParameterSet mean = mean_params(std::span<const ParameterSet* const>(views));
  std::vector<double> dist(updates.size());
  for (std::size_t c = 0; c < updates.size(); ++c) {
    dist[c] = distance(updates[c].params, mean, norm);
  }
  return similarity_from_distances(dist, epsilon);
}

std::vector<std::vector<double>> similarity_weights_per_tensor(
    std::span<const CollaboratorUpdate> updates, double epsilon, Norm norm) {
  require_updates(updates);
  auto views = param_views(updates);
  ParameterSet mean = mean_params(std::span<const ParameterSet* const>(views));
  const std::size_t tensors = mean.tensor_count();
  std::vector<std::vector<double>> dist(tensors,
                                        std::vector<double>(updates.size()));
  for (std::size_t c = 0; c < updates.size(); ++c) {
    auto per = distance_per_tensor(updates[c].params, mean, norm);
    for (std::size_t t = 0; t < tensors; ++t) {
      dist[t][c] = per[t];
    }
  }
  std::vector<std::vector<double>> u(tensors);
  for (std::size_t t = 0; t < tensors; ++t) {
    u[t] = similarity_from_distances(dist[t], epsilon);
  }
  return u;
}

std::vector<double> sample_weights(
    std::span<const CollaboratorUpdate> updates) {
  require_updates(updates);
  double total = 0.0;
  for (const auto& u : updates) {
    total += static_cast<double>(u.sample_count);
  }
  std::vector<double> v(updates.size());
  for (std::size_t c = 0; c < updates.size(); ++c) {
    v[c] = static_cast<double>(updates[c].sample_count) / total;
  }
  return v;
}

std::vector<double> combine_weights(std::span<const double> u,
                                    std::span<const double> v) {
  if (u.size() != v.size()) {
    throw LengthMismatch("similarity and sample weight vectors differ in "
                         "length (" +
                         std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()) + ")");
  }
  if (u.empty()) {
    throw EmptyInput("no weights to combine");
  }
  double denom = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    denom += u[c] + v[c];
  }
  std::vector<double> w(u.size());
  for (std::size_t c = 0; c < u.size(); ++c) {
    w[c] = (u[c] + v[c]) / denom;
  }
  return w;
}

RegularizedWeights regularize_weights(std::span<const double> w,
                                      std::span<const CollaboratorUpdate> updates,
                                      int round,
                                      const AggregationConfig& cfg) {
  require_config(cfg, round);
  if (w.size() != updates.size()) {
    throw LengthMismatch("weight vector length does not match update count");
  }
  if (round <= cfg.regularization_start_round) {
    RegularizedWeights out;
    out.applied = false;
    out.drift = 0.0;
    out.pre_norm.assign(w.begin(), w.end());
    out.final_weight.assign(w.begin(), w.end());
    return out;
  }
  require_prev_params(updates);
  double drift = 0.0;
  for (const auto& u : updates) {
    drift += distance(*u.prev_params, u.params, cfg.norm);
  }
  drift /= static_cast<double>(updates.size());
  return regularize_with_drift(w, drift, cfg.epsilon);
}

double AggregationWeights::mean_drift() const {
  if (blocks.empty()) {
    return 0.0;
  }
  double acc = 0.0;
  for (const auto& b : blocks) {
    acc += b.drift;
  }
  return acc / static_cast<double>(blocks.size());
}

std::vector<double> AggregationWeights::effective(
    const std::vector<double> WeightBlock::* field) const {
  if (blocks.empty()) {
    throw EmptyInput("weight report has no blocks");
  }
  if (scope == WeightScope::kGlobal || blocks.size() == 1) {
    return blocks.front().*field;
  }
  const std::size_t k = collab_ids.size();
  std::vector<double> out(k, 0.0);
  double total = 0.0;
  for (const auto& b : blocks) {
    total += static_cast<double>(b.elements);
  }
  for (const auto& b : blocks) {
    const double share = static_cast<double>(b.elements) / total;
    const auto& vec = b.*field;
    for (std::size_t c = 0; c < k; ++c) {
      out[c] += share * vec[c];
    }
  }
  return out;
}

AggregationResult aggregate(std::span<const CollaboratorUpdate> updates,
                            int round, const AggregationConfig& cfg) {
  require_config(cfg, round);
  require_updates(updates);
  const std::size_t k = updates.size();
  const bool regularize = cfg.strategy == Strategy::kRegSimAgg &&
                          round > cfg.regularization_start_round;
  if (regularize) {
    require_prev_params(updates);
  }

  auto views = param_views(updates);
  auto view_span = std::span<const ParameterSet* const>(views);
  const ParameterSet& schema = updates.front().params;

  const std::vector<double> v = sample_weights(updates);
  const std::vector<double> uniform(k, 1.0 / static_cast<double>(k));

  AggregationWeights report;
  report.strategy = cfg.strategy;
  report.scope = cfg.scope;
  report.regularized = regularize;
  for (const auto& u : updates) {
    report.collab_ids.push_back(u.collab_id);
  }

  // Distances per scope unit, for u and (when regularizing) the drift.
  std::size_t units;
  std::vector<std::vector<double>> u_per_unit;
  if (cfg.scope == WeightScope::kGlobal) {
    units = 1;
    u_per_unit.push_back(similarity_weights(updates, cfg.epsilon, cfg.norm));
  } else {
    units = schema.tensor_count();
    u_per_unit = similarity_weights_per_tensor(updates, cfg.epsilon, cfg.norm);
  }

  std::vector<std::vector<double>> drift_dist;  // [unit][collab]
  if (regularize) {
    drift_dist.assign(units, std::vector<double>(k));
    for (std::size_t c = 0; c < k; ++c) {
      if (cfg.scope == WeightScope::kGlobal) {
        drift_dist[0][c] =
            distance(*updates[c].prev_params, updates[c].params, cfg.norm);
      } else {
        auto per = distance_per_tensor(*updates[c].prev_params,
                                       updates[c].params, cfg.norm);
        for (std::size_t t = 0; t < units; ++t) {
          drift_dist[t][c] = per[t];
        }
      }
    }
  }

  std::vector<std::vector<double>> final_per_unit(units);
  for (std::size_t t = 0; t < units; ++t) {
    WeightBlock block;
    block.tensor =
        cfg.scope == WeightScope::kPerTensor ? schema.entry(t).name : "";
    block.elements = cfg.scope == WeightScope::kPerTensor
                         ? schema.entry(t).element_count()
                         : schema.total_elements();
    block.similarity = u_per_unit[t];
    block.sample = v;
    block.combined = combine_weights(block.similarity, v);
    block.pre_norm = block.combined;

    switch (cfg.strategy) {
      case Strategy::kPlainMean:
        block.final_weight = uniform;
        break;
      case Strategy::kFedAvg:
        block.final_weight = v;
        break;
      case Strategy::kSimAgg:
        block.final_weight = block.combined;
        break;
      case Strategy::kRegSimAgg: {
        if (regularize) {
          double drift = 0.0;
          for (std::size_t c = 0; c < k; ++c) {
            drift += drift_dist[t][c];
          }
          drift /= static_cast<double>(k);
          auto reg = regularize_with_drift(block.combined, drift, cfg.epsilon);
          block.pre_norm = reg.pre_norm;
          block.final_weight = reg.final_weight;
          block.drift = reg.drift;
        } else {
          block.final_weight = block.combined;
        }
        break;
      }
    }
    final_per_unit[t] = block.final_weight;
    report.blocks.push_back(std::move(block));
  }

  ParameterSet master =
      cfg.scope == WeightScope::kGlobal
          ? axpy_combine(final_per_unit[0], view_span)
          : axpy_combine_per_tensor(final_per_unit, view_span);

  return AggregationResult{std::move(master), std::move(report)};
}

}  // namespace fedsim
