#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "fedsim/aggregation.hpp"
#include "fedsim/param_set.hpp"
#include "fedsim/task.hpp"

namespace fedsim {

struct LocalTrainConfig {
  double learning_rate = 5e-5;
  double epochs_per_round = 1.0;
  int batch_size = 32;
  std::uint64_t seed = 0;
  /// Optional heavy-ball momentum; off by default so analytic gradients are
  /// exactly what SGD applies.
  bool momentum = false;
  double momentum_beta = 0.9;
};

struct EvalMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// The parameter schema for a model family, zero-valued.
/// linear_softmax: weight [C,F], bias [C].
/// mlp_1hidden:    w1 [H,F], b1 [H], w2 [C,H], b2 [C] (tanh hidden layer).
ParameterSet make_param_schema(const TaskSpec& task);

/// Seeded initial parameters: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// weights, zero biases.
ParameterSet init_params(const TaskSpec& task, std::uint64_t seed);

/// Mean cross-entropy over the given rows; writes the analytic gradient
/// (flattened, schema order) into grad_out when nonempty.
double loss_and_gradient(const TaskSpec& task, std::span<const double> params,
                         const Dataset& data, std::span<const std::size_t> rows,
                         std::span<double> grad_out);

/// Mini-batch SGD for floor(epochs_per_round * num_batches) steps on the
/// shard, starting from the received master. The returned update carries the
/// trained parameters, the shard size and prev_params = the round-start
/// master. Bit-deterministic for fixed (seed, master, shard).
CollaboratorUpdate local_train(const std::string& collab_id,
                               const ParameterSet& master, const Dataset& shard,
                               const TaskSpec& task,
                               const LocalTrainConfig& cfg);

/// Mean cross-entropy and top-1 accuracy (lowest index wins logit ties).
EvalMetrics evaluate(const ParameterSet& params, const Dataset& data,
                     const TaskSpec& task);

}  // namespace fedsim
