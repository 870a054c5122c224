// fedsim command line: run / partition / schedule / compare / report.
// Exit codes: 0 ok, 1 runtime error, 2 usage or config error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedsim/checkpoint.hpp"
#include "fedsim/config_io.hpp"
#include "fedsim/engine.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/selection.hpp"
#include "fedsim/util.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fedsim;

int classify_error(const Error& e) {
  if (dynamic_cast<const BadConfig*>(&e) ||
      dynamic_cast<const BadFraction*>(&e) ||
      dynamic_cast<const BadSpec*>(&e) ||
      dynamic_cast<const ConfigMismatch*>(&e) ||
      dynamic_cast<const IncomparableConfigs*>(&e) ||
      dynamic_cast<const EmptyRoster*>(&e) ||
      dynamic_cast<const DuplicateId*>(&e)) {
    return 2;
  }
  return 1;
}

struct CommonRunFlags {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::optional<int> rounds;
  std::optional<std::string> strategy;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> workers;
};

ExperimentConfig assemble_config(const CommonRunFlags& flags) {
  ExperimentConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = load_config_file(flags.config_path);
  }
  bool partition_dims_overridden = false;
  for (const auto& kv : flags.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw BadConfig("override '" + kv + "' is not key=value");
    }
    const std::string key = kv.substr(0, eq);
    if (key == "partition.num_features" || key == "partition.num_classes") {
      partition_dims_overridden = true;
    }
    apply_override(cfg, key, kv.substr(eq + 1));
  }
  // Partition dimensions track the task unless pinned explicitly.
  if (!partition_dims_overridden) {
    cfg.partition.num_features = cfg.task.num_features;
    cfg.partition.num_classes = cfg.task.num_classes;
  }
  if (flags.rounds) cfg.rounds = *flags.rounds;
  if (flags.strategy) {
    cfg.aggregation.strategy = strategy_from_string(*flags.strategy);
  }
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.output_dir) cfg.output_dir = *flags.output_dir;
  if (flags.workers) cfg.workers = *flags.workers;
  return cfg;
}

int cmd_run(const CommonRunFlags& flags, const std::string& resume_from,
            bool quiet) {
  ExperimentConfig cfg = assemble_config(flags);
  if (cfg.output_dir.empty()) {
    cfg.output_dir = "fedsim_run";
  }

  ExperimentResult result = resume_from.empty()
                                ? run_experiment(cfg)
                                : resume(resume_from, cfg);
  export_report(result, cfg, cfg.output_dir);

  if (!quiet) {
    const auto stat = convergence_stat(result.records, cfg.accuracy_threshold);
    const double cost = communication_cost(
        result.records, static_cast<int>(result.roster.size()));
    std::printf("completed %zu rounds (%s, %zu collaborators)\n",
                result.records.size(),
                to_string(cfg.aggregation.strategy).c_str(),
                result.roster.size());
    std::printf("final val loss %.6f | accuracy AUC %.4f | comm cost %.4f\n",
                stat.final_val_loss, stat.auc_val_metric, cost);
    std::printf("artifacts in %s\n", cfg.output_dir.string().c_str());
  }
  return 0;
}

int cmd_partition(const CommonRunFlags& flags, const std::string& out_dir_arg) {
  ExperimentConfig cfg = assemble_config(flags);
  const fs::path out_dir =
      out_dir_arg.empty() ? fs::path("fedsim_partition") : fs::path(out_dir_arg);
  fs::create_directories(out_dir);

  auto shards = make_partition(cfg.partition);
  TaskGenerator gen(cfg.task, cfg.partition.seed);

  json manifest_shards = json::array();
  for (std::size_t i = 0; i < shards.size(); ++i) {
    const auto& s = shards[i];
    Dataset data =
        materialize_shard(s, gen, derive_seed(cfg.partition.seed, "shard", i));
    write_dataset(out_dir, s.collab_id, data);

    json mixture = json::array();
    for (double m : s.label_mixture) mixture.push_back(hex_double(m));
    json shift = json::array();
    for (double v : s.feature_shift) shift.push_back(hex_double(v));
    manifest_shards.push_back({{"collab_id", s.collab_id},
                               {"sample_count", s.sample_count},
                               {"label_mixture", mixture},
                               {"feature_shift", shift},
                               {"noise_scale", hex_double(s.noise_scale)}});
  }
  json manifest = {{"schema", 1},
                   {"partition", json::parse(config_to_string(cfg))["partition"]},
                   {"task", json::parse(config_to_string(cfg))["task"]},
                   {"shards", manifest_shards}};
  std::ofstream out(out_dir / "manifest.json");
  out << manifest.dump(2) << '\n';

  std::printf("wrote %zu shards to %s\n", shards.size(),
              out_dir.string().c_str());
  return 0;
}

int cmd_schedule(int roster_size, double fraction, std::uint64_t seed,
                 int rounds, const std::string& rounding,
                 const std::string& tail_policy, const std::string& output) {
  if (roster_size < 1) {
    throw BadConfig("--roster-size must be >= 1");
  }
  if (rounds < 1) {
    throw BadConfig("--rounds must be >= 1");
  }
  SchedulerConfig sc;
  sc.window_fraction = fraction;
  sc.rounding = rounding_from_string(rounding);
  sc.tail_policy = tail_policy_from_string(tail_policy);
  Scheduler scheduler = Scheduler::create(make_roster(roster_size), sc, seed);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!output.empty()) {
    file.open(output, std::ios::trunc);
    if (!file) {
      throw IoError("cannot open '" + output + "' for writing");
    }
    out = &file;
  }
  for (int r = 0; r < rounds; ++r) {
    RoundPlan plan = scheduler.next_round();
    json line = {{"round", plan.round_index}, {"selected", plan.selected}};
    *out << line.dump() << '\n';
  }
  return 0;
}

struct CompareRow {
  std::string label;
  std::string strategy;
  double final_loss_mean, final_loss_std;
  double auc_mean, auc_std;
  double cost_mean, cost_std;
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) {
    return {mean, 0.0};
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};  // sample std, n-1 denominator
}

/// Configs are comparable when they are identical outside the aggregation
/// block (master_seed and output_dir are driven by the compare loop).
void require_comparable(const std::vector<ExperimentConfig>& cfgs) {
  auto strip = [](const ExperimentConfig& c) {
    json j = json::parse(config_to_string(c));
    j.erase("aggregation");
    j.erase("master_seed");
    j.erase("output_dir");
    return j;
  };
  const json base = strip(cfgs.front());
  for (std::size_t i = 1; i < cfgs.size(); ++i) {
    if (strip(cfgs[i]) != base) {
      throw IncomparableConfigs(
          "configs may differ only in the aggregation block "
          "(strategy, epsilon, regularization_start_round, scope, norm)");
    }
  }
}

int cmd_compare(const std::vector<std::string>& config_paths,
                const std::string& seeds_arg, const std::string& out_dir_arg,
                const std::vector<std::string>& overrides) {
  if (config_paths.size() < 2) {
    throw BadConfig("compare needs at least two --config paths");
  }
  std::vector<std::uint64_t> seeds;
  {
    std::string tok;
    for (char ch : seeds_arg + ",") {
      if (ch == ',') {
        if (!tok.empty()) {
          seeds.push_back(std::stoull(tok));
          tok.clear();
        }
      } else {
        tok += ch;
      }
    }
  }
  if (seeds.empty()) {
    throw BadConfig("compare needs --seeds (comma-separated list)");
  }

  std::vector<ExperimentConfig> cfgs;
  for (const auto& path : config_paths) {
    ExperimentConfig cfg = load_config_file(path);
    for (const auto& kv : overrides) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw BadConfig("override '" + kv + "' is not key=value");
      }
      apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfgs.push_back(std::move(cfg));
  }
  require_comparable(cfgs);

  std::vector<CompareRow> rows;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    std::vector<double> finals, aucs, costs;
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = cfgs[i];
      cfg.master_seed = seed;
      cfg.output_dir.clear();  // in-memory; compare emits only the table
      ExperimentResult result = run_experiment(cfg);
      auto stat = convergence_stat(result.records, cfg.accuracy_threshold);
      finals.push_back(stat.final_val_loss);
      aucs.push_back(stat.auc_val_metric);
      costs.push_back(communication_cost(
          result.records, static_cast<int>(result.roster.size())));
    }
    CompareRow row;
    row.label = fs::path(config_paths[i]).stem().string();
    row.strategy = to_string(cfgs[i].aggregation.strategy);
    std::tie(row.final_loss_mean, row.final_loss_std) = mean_std(finals);
    std::tie(row.auc_mean, row.auc_std) = mean_std(aucs);
    std::tie(row.cost_mean, row.cost_std) = mean_std(costs);
    rows.push_back(std::move(row));
  }

  std::string csv =
      "config,strategy,seeds,final_val_loss_mean,final_val_loss_std,"
      "auc_mean,auc_std,comm_cost_mean,comm_cost_std\n";
  for (const auto& r : rows) {
    csv += r.label + ',' + r.strategy + ',' + '"' + seeds_arg + '"' + ',' +
           decimal17(r.final_loss_mean) + ',' + decimal17(r.final_loss_std) +
           ',' + decimal17(r.auc_mean) + ',' + decimal17(r.auc_std) + ',' +
           decimal17(r.cost_mean) + ',' + decimal17(r.cost_std) + '\n';
  }
  if (!out_dir_arg.empty()) {
    fs::create_directories(out_dir_arg);
    std::ofstream out(fs::path(out_dir_arg) / "compare.csv", std::ios::trunc);
    out << csv;
  }

  std::printf("%-24s %-10s %14s %12s %10s %10s %10s %10s\n", "config",
              "strategy", "final_loss", "loss_std", "auc", "auc_std", "cost",
              "cost_std");
  for (const auto& r : rows) {
    std::printf("%-24s %-10s %14.8f %12.8f %10.6f %10.6f %10.6f %10.6f\n",
                r.label.c_str(), r.strategy.c_str(), r.final_loss_mean,
                r.final_loss_std, r.auc_mean, r.auc_std, r.cost_mean,
                r.cost_std);
  }
  return 0;
}

int cmd_report(const std::string& input_dir, const std::string& out_dir_arg) {
  const fs::path in(input_dir);
  ExperimentConfig cfg = load_config_file(in / "config.json");
  ExperimentResult result;
  result.records = read_records_jsonl(in / "records.jsonl");
  if (result.records.empty()) {
    throw EmptyRecords("no records in '" + (in / "records.jsonl").string() +
                       "'");
  }
  result.roster = make_roster(cfg.partition.num_collaborators);

  // Prefer the latest checkpointed master; fall back to the bare schema
  // (payload accounting only depends on the schema).
  result.final_master = make_param_schema(cfg.task);
  for (int r = static_cast<int>(result.records.size()); r >= 1; --r) {
    const fs::path ckpt = in / ("round_" + std::to_string(r)) / "master.ckpt";
    if (fs::exists(ckpt)) {
      result.final_master = read_param_checkpoint(ckpt);
      break;
    }
  }

  const fs::path out_dir = out_dir_arg.empty() ? in : fs::path(out_dir_arg);
  export_report(result, cfg, out_dir);
  std::printf("report written to %s\n", out_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedsim — regularized similarity-weighted federated "
               "aggregation simulator"};
  app.require_subcommand(1);

  CommonRunFlags run_flags;
  std::string resume_from;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a federation experiment");
  run->add_option("--config", run_flags.config_path, "Experiment config JSON");
  run->add_option("--set", run_flags.overrides,
                  "Config override key=value (repeatable)");
  run->add_option("--rounds", run_flags.rounds, "Round budget");
  run->add_option("--strategy", run_flags.strategy,
                  "fedavg | simagg | regsimagg | plain_mean");
  run->add_option("--seed", run_flags.seed, "Master seed");
  run->add_option("--output-dir", run_flags.output_dir, "Artifact directory");
  run->add_option("--workers", run_flags.workers,
                  "Worker pool size (0 = hardware concurrency)");
  run->add_option("--resume", resume_from,
                  "Continue from a round_<k> checkpoint directory");
  run->add_flag("--quiet", quiet, "Suppress the summary lines");

  CommonRunFlags part_flags;
  std::string part_out;
  std::optional<int> part_collabs;
  std::optional<std::int64_t> part_samples;
  std::optional<double> part_alpha;
  std::optional<std::uint64_t> part_seed;
  auto* part = app.add_subcommand(
      "partition", "Generate non-IID shards and write them to disk");
  part->add_option("--config", part_flags.config_path, "Experiment config JSON");
  part->add_option("--set", part_flags.overrides,
                   "Config override key=value (repeatable)");
  part->add_option("--collaborators", part_collabs, "Number of collaborators");
  part->add_option("--samples", part_samples, "Total samples across shards");
  part->add_option("--alpha", part_alpha, "Dirichlet concentration");
  part->add_option("--seed", part_seed, "Partition seed");
  part->add_option("--output-dir", part_out, "Output directory");

  int sched_roster = 33;
  double sched_fraction = 0.2;
  std::uint64_t sched_seed = 1;
  int sched_rounds = 33;
  std::string sched_rounding = "ceil";
  std::string sched_tail = "top_up";
  std::string sched_output;
  auto* sched = app.add_subcommand(
      "schedule", "Dump the round plans the engine would use (JSON lines)");
  sched->add_option("--roster-size", sched_roster, "Roster size");
  sched->add_option("--fraction", sched_fraction, "Window fraction in (0,1]");
  sched->add_option("--seed", sched_seed, "Scheduler seed");
  sched->add_option("--rounds", sched_rounds, "Rounds to emit");
  sched->add_option("--rounding", sched_rounding, "ceil | floor");
  sched->add_option("--tail-policy", sched_tail, "top_up | truncate");
  sched->add_option("--output", sched_output, "Write to file instead of stdout");

  std::vector<std::string> cmp_configs;
  std::string cmp_seeds = "1,2,3";
  std::string cmp_out;
  std::vector<std::string> cmp_overrides;
  auto* cmp = app.add_subcommand(
      "compare", "Run configs side by side over seeds and tabulate");
  cmp->add_option("--config", cmp_configs, "Config path (give two or more)");
  cmp->add_option("--seeds", cmp_seeds, "Comma-separated master seeds");
  cmp->add_option("--output-dir", cmp_out, "Where to write compare.csv");
  cmp->add_option("--set", cmp_overrides,
                  "Override applied to every config (key=value)");

  std::string report_in;
  std::string report_out;
  auto* rep = app.add_subcommand(
      "report", "Re-export summary/CSV/series from a finished run directory");
  rep->add_option("--input", report_in, "Run directory with records.jsonl")
      ->required();
  rep->add_option("--output-dir", report_out,
                  "Report directory (default: the run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      return cmd_run(run_flags, resume_from, quiet);
    }
    if (part->parsed()) {
      if (part_collabs) {
        part_flags.overrides.push_back("partition.num_collaborators=" +
                                       std::to_string(*part_collabs));
      }
      if (part_samples) {
        part_flags.overrides.push_back("partition.total_samples=" +
                                       std::to_string(*part_samples));
      }
      if (part_alpha) {
        part_flags.overrides.push_back("partition.skew_alpha=" +
                                       decimal17(*part_alpha));
      }
      if (part_seed) {
        part_flags.overrides.push_back("partition.seed=" +
                                       std::to_string(*part_seed));
      }
      return cmd_partition(part_flags, part_out);
    }
    if (sched->parsed()) {
      return cmd_schedule(sched_roster, sched_fraction, sched_seed,
                          sched_rounds, sched_rounding, sched_tail,
                          sched_output);
    }
    if (cmp->parsed()) {
      return cmd_compare(cmp_configs, cmp_seeds, cmp_out, cmp_overrides);
    }
    if (rep->parsed()) {
      return cmd_report(report_in, report_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return classify_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
