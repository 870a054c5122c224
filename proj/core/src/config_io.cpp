#include "fedsim/config_io.hpp"

#include <fstream>

#include <json.hpp>

#include "fedsim/errors.hpp"

namespace fedsim {

namespace {

using json = nlohmann::json;

void reject_unknown_keys(const json& j, const char* block,
                         std::initializer_list<const char*> known) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw BadConfig(std::string("unknown config key '") + block + "." + key +
                      "'");
    }
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw BadConfig(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

void read_enum(const json& j, const char* key, auto parser, auto& out) {
  if (j.contains(key)) {
    if (!j.at(key).is_string()) {
      throw BadConfig(std::string("'") + key + "' must be a string");
    }
    out = parser(j.at(key).get<std::string>());
  }
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw BadConfig(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw BadConfig("config root must be a JSON object");
  }
  reject_unknown_keys(j, "<root>",
                      {"rounds", "eval_every", "checkpoint_every", "workers",
                       "master_seed", "accuracy_threshold", "output_dir",
                       "scheduler", "aggregation", "partition", "task",
                       "train"});

  ExperimentConfig cfg;
  read_field(j, "rounds", cfg.rounds);
  read_field(j, "eval_every", cfg.eval_every);
  read_field(j, "checkpoint_every", cfg.checkpoint_every);
  read_field(j, "workers", cfg.workers);
  read_field(j, "master_seed", cfg.master_seed);
  read_field(j, "accuracy_threshold", cfg.accuracy_threshold);
  if (j.contains("output_dir")) {
    cfg.output_dir = j.at("output_dir").get<std::string>();
  }

  if (j.contains("scheduler")) {
    const json& s = j.at("scheduler");
    reject_unknown_keys(s, "scheduler",
                        {"window_fraction", "rounding", "tail_policy"});
    read_field(s, "window_fraction", cfg.scheduler.window_fraction);
    read_enum(s, "rounding", rounding_from_string, cfg.scheduler.rounding);
    read_enum(s, "tail_policy", tail_policy_from_string,
              cfg.scheduler.tail_policy);
  }

  if (j.contains("aggregation")) {
    const json& a = j.at("aggregation");
    reject_unknown_keys(a, "aggregation",
                        {"strategy", "epsilon", "regularization_start_round",
                         "scope", "norm"});
    read_enum(a, "strategy", strategy_from_string, cfg.aggregation.strategy);
    read_field(a, "epsilon", cfg.aggregation.epsilon);
    read_field(a, "regularization_start_round",
               cfg.aggregation.regularization_start_round);
    read_enum(a, "scope", scope_from_string, cfg.aggregation.scope);
    read_enum(a, "norm", norm_from_string, cfg.aggregation.norm);
  }

  if (j.contains("task")) {
    const json& t = j.at("task");
    reject_unknown_keys(
        t, "task", {"model_family", "num_features", "num_classes",
                    "hidden_width"});
    read_enum(t, "model_family", model_family_from_string,
              cfg.task.model_family);
    read_field(t, "num_features", cfg.task.num_features);
    read_field(t, "num_classes", cfg.task.num_classes);
    read_field(t, "hidden_width", cfg.task.hidden_width);
  }

  // Partition dims track the task unless given explicitly.
  cfg.partition.num_classes = cfg.task.num_classes;
  cfg.partition.num_features = cfg.task.num_features;
  if (j.contains("partition")) {
    const json& p = j.at("partition");
    reject_unknown_keys(p, "partition",
                        {"num_collaborators", "total_samples", "skew_alpha",
                         "num_classes", "num_features", "shift_scale",
                         "noise_scale", "seed"});
    read_field(p, "num_collaborators", cfg.partition.num_collaborators);
    read_field(p, "total_samples", cfg.partition.total_samples);
    read_field(p, "skew_alpha", cfg.partition.skew_alpha);
    read_field(p, "num_classes", cfg.partition.num_classes);
    read_field(p, "num_features", cfg.partition.num_features);
    read_field(p, "shift_scale", cfg.partition.shift_scale);
    read_field(p, "noise_scale", cfg.partition.noise_scale);
    read_field(p, "seed", cfg.partition.seed);
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown_keys(t, "train",
                        {"learning_rate", "epochs_per_round", "batch_size",
                         "momentum", "momentum_beta"});
    read_field(t, "learning_rate", cfg.train.learning_rate);
    read_field(t, "epochs_per_round", cfg.train.epochs_per_round);
    read_field(t, "batch_size", cfg.train.batch_size);
    read_field(t, "momentum", cfg.train.momentum);
    read_field(t, "momentum_beta", cfg.train.momentum_beta);
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw BadConfig("cannot open config file '" + path.string() + "'");
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_json(text);
}

namespace {

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    std::int64_t v = std::stoll(value, &pos);
    if (pos != value.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw BadConfig("override '" + key + "' needs an integer, got '" + value +
                    "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw BadConfig("override '" + key + "' needs an unsigned integer, got '" +
                    value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw BadConfig("override '" + key + "' needs a number, got '" + value +
                    "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw BadConfig("override '" + key + "' needs true/false, got '" + value +
                  "'");
}

}  // namespace

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "rounds") {
    cfg.rounds = static_cast<int>(parse_int(key, value));
  } else if (key == "eval_every") {
    cfg.eval_every = static_cast<int>(parse_int(key, value));
  } else if (key == "checkpoint_every") {
    cfg.checkpoint_every = static_cast<int>(parse_int(key, value));
  } else if (key == "workers") {
    cfg.workers = static_cast<int>(parse_int(key, value));
  } else if (key == "master_seed") {
    cfg.master_seed = parse_u64(key, value);
  } else if (key == "accuracy_threshold") {
    cfg.accuracy_threshold = parse_double(key, value);
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "scheduler.window_fraction") {
    cfg.scheduler.window_fraction = parse_double(key, value);
  } else if (key == "scheduler.rounding") {
    cfg.scheduler.rounding = rounding_from_string(value);
  } else if (key == "scheduler.tail_policy") {
    cfg.scheduler.tail_policy = tail_policy_from_string(value);
  } else if (key == "aggregation.strategy") {
    cfg.aggregation.strategy = strategy_from_string(value);
  } else if (key == "aggregation.epsilon") {
    cfg.aggregation.epsilon = parse_double(key, value);
  } else if (key == "aggregation.regularization_start_round") {
    cfg.aggregation.regularization_start_round =
        static_cast<int>(parse_int(key, value));
  } else if (key == "aggregation.scope") {
    cfg.aggregation.scope = scope_from_string(value);
  } else if (key == "aggregation.norm") {
    cfg.aggregation.norm = norm_from_string(value);
  } else if (key == "partition.num_collaborators") {
    cfg.partition.num_collaborators = static_cast<int>(parse_int(key, value));
  } else if (key == "partition.total_samples") {
    cfg.partition.total_samples = parse_int(key, value);
  } else if (key == "partition.skew_alpha") {
    cfg.partition.skew_alpha = parse_double(key, value);
  } else if (key == "partition.num_classes") {
    cfg.partition.num_classes = static_cast<int>(parse_int(key, value));
  } else if (key == "partition.num_features") {
    cfg.partition.num_features = static_cast<int>(parse_int(key, value));
  } else if (key == "partition.shift_scale") {
    cfg.partition.shift_scale = parse_double(key, value);
  } else if (key == "partition.noise_scale") {
    cfg.partition.noise_scale = parse_double(key, value);
  } else if (key == "partition.seed") {
    cfg.partition.seed = parse_u64(key, value);
  } else if (key == "task.model_family") {
    cfg.task.model_family = model_family_from_string(value);
  } else if (key == "task.num_features") {
    cfg.task.num_features = static_cast<int>(parse_int(key, value));
  } else if (key == "task.num_classes") {
    cfg.task.num_classes = static_cast<int>(parse_int(key, value));
  } else if (key == "task.hidden_width") {
    cfg.task.hidden_width = static_cast<int>(parse_int(key, value));
  } else if (key == "train.learning_rate") {
    cfg.train.learning_rate = parse_double(key, value);
  } else if (key == "train.epochs_per_round") {
    cfg.train.epochs_per_round = parse_double(key, value);
  } else if (key == "train.batch_size") {
    cfg.train.batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "train.momentum") {
    cfg.train.momentum = parse_bool(key, value);
  } else if (key == "train.momentum_beta") {
    cfg.train.momentum_beta = parse_double(key, value);
  } else {
    throw BadConfig("unknown config override key '" + key + "'");
  }
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
  return json{
      {"rounds", cfg.rounds},
      {"eval_every", cfg.eval_every},
      {"checkpoint_every", cfg.checkpoint_every},
      {"workers", cfg.workers},
      {"master_seed", cfg.master_seed},
      {"accuracy_threshold", cfg.accuracy_threshold},
      {"output_dir", cfg.output_dir.string()},
      {"scheduler",
       {{"window_fraction", cfg.scheduler.window_fraction},
        {"rounding", to_string(cfg.scheduler.rounding)},
        {"tail_policy", to_string(cfg.scheduler.tail_policy)}}},
      {"aggregation",
       {{"strategy", to_string(cfg.aggregation.strategy)},
        {"epsilon", cfg.aggregation.epsilon},
        {"regularization_start_round",
         cfg.aggregation.regularization_start_round},
        {"scope", to_string(cfg.aggregation.scope)},
        {"norm", to_string(cfg.aggregation.norm)}}},
      {"partition",
       {{"num_collaborators", cfg.partition.num_collaborators},
        {"total_samples", cfg.partition.total_samples},
        {"skew_alpha", cfg.partition.skew_alpha},
        {"num_classes", cfg.partition.num_classes},
        {"num_features", cfg.partition.num_features},
        {"shift_scale", cfg.partition.shift_scale},
        {"noise_scale", cfg.partition.noise_scale},
        {"seed", cfg.partition.seed}}},
      {"task",
       {{"model_family", to_string(cfg.task.model_family)},
        {"num_features", cfg.task.num_features},
        {"num_classes", cfg.task.num_classes},
        {"hidden_width", cfg.task.hidden_width}}},
      {"train",
       {{"learning_rate", cfg.train.learning_rate},
        {"epochs_per_round", cfg.train.epochs_per_round},
        {"batch_size", cfg.train.batch_size},
        {"momentum", cfg.train.momentum},
        {"momentum_beta", cfg.train.momentum_beta}}}};
}

}  // namespace

std::string config_to_string(const ExperimentConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

}  // namespace fedsim
