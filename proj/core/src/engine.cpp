#include "fedsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "fedsim/checkpoint.hpp"
#include "fedsim/config_io.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/util.hpp"

namespace fedsim {

namespace {

using json = nlohmann::json;

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.rounds < 1) {
    throw BadConfig("rounds must be >= 1");
  }
  if (cfg.eval_every < 1) {
    throw BadConfig("eval_every must be >= 1");
  }
  if (cfg.checkpoint_every < 0) {
    throw BadConfig("checkpoint_every must be >= 0");
  }
  if (cfg.workers < 0) {
    throw BadConfig("workers must be >= 0");
  }
  if (!(cfg.aggregation.epsilon > 0.0)) {
    throw BadConfig("aggregation.epsilon must be > 0");
  }
  if (cfg.aggregation.regularization_start_round < 0) {
    throw BadConfig("aggregation.regularization_start_round must be >= 0");
  }
  if (cfg.task.num_features != cfg.partition.num_features ||
      cfg.task.num_classes != cfg.partition.num_classes) {
    throw BadConfig("task and partition disagree on num_features/num_classes");
  }
}

/// Everything deterministic the round loop needs, built once per run.
struct RunContext {
  std::vector<std::string> roster;
  std::unordered_map<std::string, std::size_t> roster_index;
  std::vector<ShardSpec> shards;
  std::vector<Dataset> datasets;  // aligned with roster
  Dataset validation;
  ParameterSet schema;
};

RunContext build_context(const ExperimentConfig& cfg) {
  RunContext ctx;
  ctx.shards = make_partition(cfg.partition);
  ctx.roster.reserve(ctx.shards.size());
  TaskGenerator gen(cfg.task, cfg.partition.seed);
  for (std::size_t i = 0; i < ctx.shards.size(); ++i) {
    ctx.roster.push_back(ctx.shards[i].collab_id);
    ctx.roster_index[ctx.shards[i].collab_id] = i;
    ctx.datasets.push_back(materialize_shard(
        ctx.shards[i], gen, derive_seed(cfg.partition.seed, "shard", i)));
  }
  const std::size_t val_n = std::max<std::int64_t>(
      1, cfg.partition.total_samples / 10);
  ctx.validation =
      gen.sample_iid(val_n, derive_seed(cfg.partition.seed, "validation"));
  ctx.schema = make_param_schema(cfg.task);
  return ctx;
}

struct TrainOutcome {
  CollaboratorUpdate update;
  double loss_before = 0.0;
  double loss_after = 0.0;
};

/// Fans the selected collaborators out over a bounded pool. Results land in
/// slots indexed by plan position, so the outcome is independent of worker
/// count and completion order.
std::vector<TrainOutcome> train_selected(const ExperimentConfig& cfg,
                                         const RunContext& ctx,
                                         const RoundPlan& plan,
                                         const ParameterSet& master) {
  const std::size_t tasks = plan.selected.size();
  std::vector<TrainOutcome> outcomes(tasks);
  std::vector<std::exception_ptr> errors(tasks);

  auto run_one = [&](std::size_t slot) {
    const std::string& id = plan.selected[slot];
    const std::size_t ridx = ctx.roster_index.at(id);
    const Dataset& shard = ctx.datasets[ridx];
    LocalTrainConfig train_cfg = cfg.train;
    train_cfg.seed = train_seed(cfg.master_seed, plan.round_index, ridx);
    TrainOutcome& out = outcomes[slot];
    out.loss_before = evaluate(master, shard, cfg.task).loss;
    out.update = local_train(id, master, shard, cfg.task, train_cfg);
    out.loss_after = evaluate(out.update.params, shard, cfg.task).loss;
  };

  unsigned hw = std::thread::hardware_concurrency();
  std::size_t workers = cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers)
                                        : std::max(1u, hw);
  workers = std::min(workers, tasks);

  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks; ++i) {
      run_one(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks) {
            return;
          }
          try {
            run_one(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) {
      t.join();
    }
    for (std::size_t i = 0; i < tasks; ++i) {
      if (errors[i]) {
        std::rethrow_exception(errors[i]);  // lowest slot wins, fail fast
      }
    }
  }
  return outcomes;
}

json scheduler_state_json(const Scheduler::State& st) {
  return {{"schema", 1},
          {"roster", st.roster},
          {"permutation", st.permutation},
          {"cursor", st.cursor},
          {"window_fraction", hex_double(st.window_fraction)},
          {"rounding", to_string(st.rounding)},
          {"tail_policy", to_string(st.tail_policy)},
          {"round_index", st.round_index},
          {"last_selected", st.last_selected}};
}

Scheduler::State scheduler_state_from_json(const json& j) {
  Scheduler::State st;
  st.roster = j.at("roster").get<std::vector<std::string>>();
  st.permutation = j.at("permutation").get<std::vector<std::size_t>>();
  st.cursor = j.at("cursor").get<std::size_t>();
  st.window_fraction =
      parse_hex_double(j.at("window_fraction").get<std::string>());
  st.rounding = rounding_from_string(j.at("rounding").get<std::string>());
  st.tail_policy =
      tail_policy_from_string(j.at("tail_policy").get<std::string>());
  st.round_index = j.at("round_index").get<int>();
  st.last_selected = j.at("last_selected").get<std::vector<std::string>>();
  return st;
}

void write_json_atomic(const std::filesystem::path& path, const json& j) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) {
      throw IoError("cannot open '" + tmp.string() + "' for writing");
    }
    out << j.dump(2) << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("rename failed for '" + path.string() + "': " + ec.message());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw CorruptCheckpoint("missing checkpoint file '" + path.string() + "'");
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorruptCheckpoint("bad JSON in '" + path.string() + "': " + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& out_dir, int round,
                      const ParameterSet& master, const Scheduler& scheduler,
                      const ExperimentConfig& cfg) {
  const auto dir = out_dir / ("round_" + std::to_string(round));
  std::filesystem::create_directories(dir);
  write_param_checkpoint(dir / "master.ckpt", master);
  write_json_atomic(dir / "scheduler.json",
                    scheduler_state_json(scheduler.state()));
  // rng.json is written last and doubles as the completeness marker.
  json rng = {{"schema", 1},
              {"master_seed", cfg.master_seed},
              {"scheduler_rng_seed", scheduler.state().rng_seed},
              {"scheduler_rng_state", scheduler.state().rng_state},
              {"round", round},
              {"schema_hash", master.schema_hash()}};
  write_json_atomic(dir / "rng.json", rng);
}

/// The shared round loop: runs rounds [start_round+1 .. cfg.rounds],
/// appending to records (which already holds the first start_round rounds).
ExperimentResult round_loop(const ExperimentConfig& cfg, const RunContext& ctx,
                            Scheduler scheduler, ParameterSet master,
                            int start_round,
                            std::vector<RoundRecord> records) {
  const bool persist = !cfg.output_dir.empty();
  const auto records_path = cfg.output_dir / "records.jsonl";

  std::int64_t participations = 0;
  for (const auto& rec : records) {
    participations += static_cast<std::int64_t>(rec.selected.size());
  }

  for (int round = start_round + 1; round <= cfg.rounds; ++round) {
    const auto t0 = std::chrono::steady_clock::now();
    RoundPlan plan = scheduler.next_round();
    if (plan.round_index != round) {
      throw Error("scheduler and engine disagree on the round index");
    }

    auto outcomes = train_selected(cfg, ctx, plan, master);

    std::vector<CollaboratorUpdate> updates;
    updates.reserve(outcomes.size());
    for (auto& o : outcomes) {
      updates.push_back(std::move(o.update));
    }
    AggregationResult agg = aggregate(updates, round, cfg.aggregation);
    master = std::move(agg.master);

    RoundRecord rec;
    rec.round_index = round;
    rec.selected = plan.selected;
    for (const auto& o : outcomes) {
      rec.local_loss_before.push_back(o.loss_before);
      rec.local_loss_after.push_back(o.loss_after);
    }
    rec.weights = std::move(agg.weights);
    rec.drift = rec.weights.mean_drift();
    if (round % cfg.eval_every == 0 || round == cfg.rounds) {
      rec.validation = evaluate(master, ctx.validation, cfg.task);
    }
    participations += static_cast<std::int64_t>(plan.selected.size());
    rec.cum_comm_cost =
        static_cast<double>(participations) /
        (static_cast<double>(round) * static_cast<double>(ctx.roster.size()));
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    records.push_back(std::move(rec));

    if (persist) {
      append_record_jsonl(records_path, records.back());
      if ((cfg.checkpoint_every > 0 && round % cfg.checkpoint_every == 0) ||
          round == cfg.rounds) {
        write_checkpoint(cfg.output_dir, round, master, scheduler, cfg);
      }
    }
  }

  return ExperimentResult{std::move(master), std::move(records), ctx.roster};
}

}  // namespace

std::uint64_t train_seed(std::uint64_t master_seed, int round,
                         std::size_t roster_index) {
  return derive_seed(master_seed, "train", static_cast<std::uint64_t>(round),
                     static_cast<std::uint64_t>(roster_index));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  RunContext ctx = build_context(cfg);

  Scheduler scheduler =
      Scheduler::create(ctx.roster, cfg.scheduler,
                        derive_seed(cfg.master_seed, "scheduler"));
  ParameterSet master =
      init_params(cfg.task, derive_seed(cfg.master_seed, "init"));

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    write_json_atomic(cfg.output_dir / "config.json", json::parse(config_to_string(cfg)));
    // Fresh run: truncate any stale record log, checkpoint the initial state.
    std::ofstream(cfg.output_dir / "records.jsonl", std::ios::trunc);
    write_checkpoint(cfg.output_dir, 0, master, scheduler, cfg);
  }

  return round_loop(cfg, ctx, std::move(scheduler), std::move(master), 0, {});
}

ExperimentResult resume(const std::filesystem::path& checkpoint_dir,
                        const ExperimentConfig& cfg) {
  validate_config(cfg);

  const json rng = read_json_file(checkpoint_dir / "rng.json");
  const json sched_json = read_json_file(checkpoint_dir / "scheduler.json");
  ParameterSet master = read_param_checkpoint(checkpoint_dir / "master.ckpt");

  const int done_rounds = rng.at("round").get<int>();
  if (rng.at("master_seed").get<std::uint64_t>() != cfg.master_seed) {
    throw ConfigMismatch("checkpoint was produced under a different "
                         "master_seed");
  }

  RunContext ctx = build_context(cfg);
  if (master.schema_hash() != ctx.schema.schema_hash()) {
    throw ConfigMismatch("checkpoint parameter schema does not match the "
                         "configured task");
  }

  Scheduler::State st = scheduler_state_from_json(sched_json);
  st.rng_seed = rng.at("scheduler_rng_seed").get<std::uint64_t>();
  st.rng_state = rng.at("scheduler_rng_state").get<std::uint64_t>();
  if (st.roster != ctx.roster) {
    throw ConfigMismatch("checkpoint roster does not match the configured "
                         "partition");
  }
  if (st.round_index != done_rounds) {
    throw CorruptCheckpoint("scheduler state and rng.json disagree on the "
                            "completed round count");
  }
  Scheduler scheduler = Scheduler::restore(std::move(st));

  // Prior rounds come from the record log the checkpoint sits next to.
  std::vector<RoundRecord> prior;
  if (done_rounds > 0) {
    const auto source_records = checkpoint_dir.parent_path() / "records.jsonl";
    auto all = read_records_jsonl(source_records);
    if (static_cast<int>(all.size()) < done_rounds) {
      throw CorruptCheckpoint("records.jsonl has fewer rounds than the "
                              "checkpoint");
    }
    prior.assign(all.begin(), all.begin() + done_rounds);
  }

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    write_json_atomic(cfg.output_dir / "config.json", json::parse(config_to_string(cfg)));
    std::ofstream out(cfg.output_dir / "records.jsonl", std::ios::trunc);
    for (const auto& rec : prior) {
      out << round_record_to_jsonl(rec) << '\n';
    }
  }

  return round_loop(cfg, ctx, std::move(scheduler), std::move(master),
                    done_rounds, std::move(prior));
}

}  // namespace fedsim
