#include "fedsim/collaborator.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

/// Flat-layout offsets for a model family, matching make_param_schema order.
struct ModelLayout {
  int features;
  int classes;
  int hidden;
  bool mlp;
  std::size_t w1_off, b1_off, w2_off, b2_off;
  std::size_t total;

  explicit ModelLayout(const TaskSpec& task)
      : features(task.num_features),
        classes(task.num_classes),
        hidden(task.hidden_width),
        mlp(task.model_family == ModelFamily::kMlp1Hidden) {
    if (mlp) {
      w1_off = 0;
      b1_off = w1_off + static_cast<std::size_t>(hidden) * features;
      w2_off = b1_off + hidden;
      b2_off = w2_off + static_cast<std::size_t>(classes) * hidden;
      total = b2_off + classes;
    } else {
      w1_off = 0;  // weight [C,F]
      b1_off = static_cast<std::size_t>(classes) * features;  // bias [C]
      w2_off = b2_off = 0;
      total = b1_off + classes;
    }
  }
};

/// Numerically safe softmax cross-entropy pieces for one logit vector.
double log_sum_exp(std::span<const double> z) {
  double m = z[0];
  for (double v : z) {
    m = std::max(m, v);
  }
  double acc = 0.0;
  for (double v : z) {
    acc += std::exp(v - m);
  }
  return m + std::log(acc);
}

void forward_logits(const ModelLayout& lay, std::span<const double> p,
                    std::span<const double> x, std::vector<double>& hidden_act,
                    std::vector<double>& logits) {
  if (!lay.mlp) {
    for (int c = 0; c < lay.classes; ++c) {
      double z = p[lay.b1_off + c];
      const double* w = p.data() + lay.w1_off +
                        static_cast<std::size_t>(c) * lay.features;
      for (int f = 0; f < lay.features; ++f) {
        z += w[f] * x[f];
      }
      logits[c] = z;
    }
    return;
  }
  for (int j = 0; j < lay.hidden; ++j) {
    double a = p[lay.b1_off + j];
    const double* w =
        p.data() + lay.w1_off + static_cast<std::size_t>(j) * lay.features;
    for (int f = 0; f < lay.features; ++f) {
      a += w[f] * x[f];
    }
    hidden_act[j] = std::tanh(a);
  }
  for (int c = 0; c < lay.classes; ++c) {
    double z = p[lay.b2_off + c];
    const double* w =
        p.data() + lay.w2_off + static_cast<std::size_t>(c) * lay.hidden;
    for (int j = 0; j < lay.hidden; ++j) {
      z += w[j] * hidden_act[j];
    }
    logits[c] = z;
  }
}

void check_schema(const ParameterSet& params, const TaskSpec& task,
                  const char* what) {
  static thread_local std::string cached_key;
  static thread_local std::string cached_hash;
  std::string key = to_string(task.model_family) + ":" +
                    std::to_string(task.num_features) + ":" +
                    std::to_string(task.num_classes) + ":" +
                    std::to_string(task.hidden_width);
  if (key != cached_key) {
    cached_key = key;
    cached_hash = make_param_schema(task).schema_hash();
  }
  if (params.schema_hash() != cached_hash) {
    throw SchemaMismatch(std::string(what) +
                         ": parameters do not match the task schema");
  }
}

}  // namespace

ParameterSet make_param_schema(const TaskSpec& task) {
  const std::size_t f = static_cast<std::size_t>(task.num_features);
  const std::size_t c = static_cast<std::size_t>(task.num_classes);
  std::vector<TensorEntry> entries;
  if (task.model_family == ModelFamily::kLinearSoftmax) {
    entries.push_back({"weight", {c, f}, std::vector<double>(c * f, 0.0)});
    entries.push_back({"bias", {c}, std::vector<double>(c, 0.0)});
  } else {
    const std::size_t h = static_cast<std::size_t>(task.hidden_width);
    entries.push_back({"w1", {h, f}, std::vector<double>(h * f, 0.0)});
    entries.push_back({"b1", {h}, std::vector<double>(h, 0.0)});
    entries.push_back({"w2", {c, h}, std::vector<double>(c * h, 0.0)});
    entries.push_back({"b2", {c}, std::vector<double>(c, 0.0)});
  }
  return ParameterSet(std::move(entries));
}

ParameterSet init_params(const TaskSpec& task, std::uint64_t seed) {
  ParameterSet schema = make_param_schema(task);
  SplitMix64 rng(derive_seed(seed, "param-init"));
  std::vector<TensorEntry> entries = schema.entries();
  for (auto& e : entries) {
    if (e.shape.size() == 2) {
      double r = 1.0 / std::sqrt(static_cast<double>(e.shape[1]));
      for (auto& v : e.values) {
        v = r * (2.0 * rng.next_double() - 1.0);
      }
    }
    // biases stay zero
  }
  return ParameterSet(std::move(entries));
}

double loss_and_gradient(const TaskSpec& task, std::span<const double> params,
                         const Dataset& data,
                         std::span<const std::size_t> rows,
                         std::span<double> grad_out) {
  if (rows.empty()) {
    throw EmptyInput("loss_and_gradient: empty batch");
  }
  const ModelLayout lay(task);
  if (params.size() != lay.total) {
    throw SchemaMismatch("flat parameter vector has wrong length");
  }
  const bool want_grad = !grad_out.empty();
  if (want_grad) {
    if (grad_out.size() != lay.total) {
      throw LengthMismatch("gradient buffer has wrong length");
    }
    std::fill(grad_out.begin(), grad_out.end(), 0.0);
  }

  std::vector<double> hidden_act(lay.mlp ? lay.hidden : 0);
  std::vector<double> logits(lay.classes);
  std::vector<double> dz(lay.classes);
  std::vector<double> da(lay.mlp ? lay.hidden : 0);

  const double inv_b = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  for (std::size_t r : rows) {
    auto x = data.row(r);
    const int y = data.labels[r];
    forward_logits(lay, params, x, hidden_act, logits);
    const double lse = log_sum_exp(logits);
    loss += (lse - logits[y]) * inv_b;
    if (!want_grad) {
      continue;
    }
    for (int c = 0; c < lay.classes; ++c) {
      dz[c] = std::exp(logits[c] - lse) - (c == y ? 1.0 : 0.0);
    }
    if (!lay.mlp) {
      for (int c = 0; c < lay.classes; ++c) {
        const double g = dz[c] * inv_b;
        double* gw = grad_out.data() + lay.w1_off +
                     static_cast<std::size_t>(c) * lay.features;
        for (int f = 0; f < lay.features; ++f) {
          gw[f] += g * x[f];
        }
        grad_out[lay.b1_off + c] += g;
      }
    } else {
      for (int j = 0; j < lay.hidden; ++j) {
        da[j] = 0.0;
      }
      for (int c = 0; c < lay.classes; ++c) {
        const double g = dz[c] * inv_b;
        double* gw = grad_out.data() + lay.w2_off +
                     static_cast<std::size_t>(c) * lay.hidden;
        const double* w = params.data() + lay.w2_off +
                          static_cast<std::size_t>(c) * lay.hidden;
        for (int j = 0; j < lay.hidden; ++j) {
          gw[j] += g * hidden_act[j];
          da[j] += dz[c] * w[j];
        }
        grad_out[lay.b2_off + c] += g;
      }
      for (int j = 0; j < lay.hidden; ++j) {
        const double gj = da[j] * (1.0 - hidden_act[j] * hidden_act[j]) * inv_b;
        double* gw = grad_out.data() + lay.w1_off +
                     static_cast<std::size_t>(j) * lay.features;
        for (int f = 0; f < lay.features; ++f) {
          gw[f] += gj * x[f];
        }
        grad_out[lay.b1_off + j] += gj;
      }
    }
  }
  return loss;
}

CollaboratorUpdate local_train(const std::string& collab_id,
                               const ParameterSet& master,
                               const Dataset& shard, const TaskSpec& task,
                               const LocalTrainConfig& cfg) {
  if (shard.size() == 0) {
    throw EmptyShard("collaborator '" + collab_id + "' has an empty shard");
  }
  if (shard.num_features != task.num_features) {
    throw SchemaMismatch("shard feature width does not match the task");
  }
  check_schema(master, task, "local_train");
  if (!(cfg.learning_rate > 0.0) || !(cfg.epochs_per_round > 0.0) ||
      cfg.batch_size < 1) {
    throw BadConfig("local training needs learning_rate > 0, "
                    "epochs_per_round > 0 and batch_size >= 1");
  }

  const std::size_t n = shard.size();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t num_batches = (n + bs - 1) / bs;
  const std::size_t steps = static_cast<std::size_t>(
      std::floor(cfg.epochs_per_round * static_cast<double>(num_batches)));

  std::vector<double> flat = master.flatten();
  std::vector<double> grad(flat.size());
  std::vector<double> velocity;
  if (cfg.momentum) {
    velocity.assign(flat.size(), 0.0);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(cfg.seed);

  for (std::size_t step = 0; step < steps; ++step) {
    const std::size_t b = step % num_batches;
    if (b == 0) {
      fisher_yates_shuffle(order, rng);
    }
    const std::size_t begin = b * bs;
    const std::size_t end = std::min(n, begin + bs);
    auto rows = std::span<const std::size_t>(order).subspan(begin, end - begin);
    loss_and_gradient(task, flat, shard, rows, grad);
    if (cfg.momentum) {
      for (std::size_t j = 0; j < flat.size(); ++j) {
        velocity[j] = cfg.momentum_beta * velocity[j] + grad[j];
        flat[j] -= cfg.learning_rate * velocity[j];
      }
    } else {
      for (std::size_t j = 0; j < flat.size(); ++j) {
        flat[j] -= cfg.learning_rate * grad[j];
      }
    }
  }

  CollaboratorUpdate update;
  update.collab_id = collab_id;
  update.params = master.with_values(flat);
  update.sample_count = static_cast<std::int64_t>(n);
  update.prev_params = master;
  return update;
}

EvalMetrics evaluate(const ParameterSet& params, const Dataset& data,
                     const TaskSpec& task) {
  if (data.size() == 0) {
    throw EmptyShard("evaluate: empty dataset");
  }
  if (data.num_features != task.num_features) {
    throw SchemaMismatch("dataset feature width does not match the task");
  }
  check_schema(params, task, "evaluate");

  const ModelLayout lay(task);
  std::vector<double> flat = params.flatten();
  std::vector<double> hidden_act(lay.mlp ? lay.hidden : 0);
  std::vector<double> logits(lay.classes);

  double loss = 0.0;
  std::size_t correct = 0;
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward_logits(lay, flat, data.row(i), hidden_act, logits);
    const double lse = log_sum_exp(logits);
    loss += (lse - logits[data.labels[i]]) * inv_n;
    int best = 0;
    for (int c = 1; c < lay.classes; ++c) {
      if (logits[c] > logits[best]) {
        best = c;
      }
    }
    if (best == data.labels[i]) {
      ++correct;
    }
  }
  return {loss, static_cast<double>(correct) * inv_n};
}

}  // namespace fedsim
