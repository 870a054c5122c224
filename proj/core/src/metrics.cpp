#include "fedsim/metrics.hpp"

#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "fedsim/checkpoint.hpp"
#include "fedsim/config_io.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/util.hpp"

namespace fedsim {

namespace {

using json = nlohmann::json;

void require_records(std::span<const RoundRecord> records) {
  if (records.empty()) {
    throw EmptyRecords("no round records");
  }
}

}  // namespace

CommCostModel comm_cost_model(const ParameterSet& schema, int roster_size,
                              int rounds) {
  CommCostModel m;
  m.per_update_payload_bytes = checkpoint_byte_size(schema);
  m.total_possible_updates =
      static_cast<std::int64_t>(roster_size) * static_cast<std::int64_t>(rounds);
  return m;
}

double communication_cost(std::span<const RoundRecord> records,
                          int roster_size) {
  require_records(records);
  if (roster_size < 1) {
    throw BadConfig("roster_size must be >= 1");
  }
  std::int64_t used = 0;
  for (const auto& rec : records) {
    used += static_cast<std::int64_t>(rec.selected.size());
  }
  return static_cast<double>(used) /
         (static_cast<double>(records.size()) *
          static_cast<double>(roster_size));
}

ConvergenceStat convergence_stat(std::span<const RoundRecord> records,
                                 double accuracy_threshold) {
  require_records(records);
  std::vector<double> xs, accs, losses;
  std::optional<int> hit;
  for (const auto& rec : records) {
    if (!rec.validation.has_value()) {
      continue;
    }
    xs.push_back(static_cast<double>(rec.round_index));
    accs.push_back(rec.validation->accuracy);
    losses.push_back(rec.validation->loss);
    if (!hit.has_value() && rec.validation->accuracy >= accuracy_threshold) {
      hit = rec.round_index;
    }
  }
  if (xs.empty()) {
    throw EmptyRecords("no validation metrics in the records");
  }

  ConvergenceStat stat;
  stat.final_val_loss = losses.back();
  stat.rounds_to_threshold = hit;
  if (xs.size() == 1) {
    stat.auc_val_metric = accs[0];
    return stat;
  }
  const double span = xs.back() - xs.front();
  double auc = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double dx = (xs[i + 1] - xs[i]) / span;
    auc += dx * 0.5 * (accs[i] + accs[i + 1]);
  }
  stat.auc_val_metric = auc;
  return stat;
}

std::string rounds_csv(const ExperimentResult& result) {
  std::string csv = "round,selected_ids";
  for (const auto& id : result.roster) {
    csv += ",u_" + id + ",v_" + id + ",w_" + id + ",final_" + id;
  }
  csv += ",drift,val_loss,val_acc,cum_comm_cost,wall_ms\n";

  for (const auto& rec : result.records) {
    csv += std::to_string(rec.round_index);
    csv += ',';
    for (std::size_t i = 0; i < rec.selected.size(); ++i) {
      if (i > 0) {
        csv += ';';
      }
      csv += rec.selected[i];
    }

    const auto u = rec.weights.effective(&WeightBlock::similarity);
    const auto v = rec.weights.effective(&WeightBlock::sample);
    const auto w = rec.weights.effective(&WeightBlock::combined);
    const auto fin = rec.weights.effective_final();
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < rec.weights.collab_ids.size(); ++i) {
      pos[rec.weights.collab_ids[i]] = i;
    }
    for (const auto& id : result.roster) {
      auto it = pos.find(id);
      if (it == pos.end()) {
        csv += ",,,,";
      } else {
        const std::size_t i = it->second;
        csv += ',' + decimal17(u[i]) + ',' + decimal17(v[i]) + ',' +
               decimal17(w[i]) + ',' + decimal17(fin[i]);
      }
    }
    csv += ',' + decimal17(rec.drift);
    if (rec.validation.has_value()) {
      csv += ',' + decimal17(rec.validation->loss) + ',' +
             decimal17(rec.validation->accuracy);
    } else {
      csv += ",,";
    }
    csv += ',' + decimal17(rec.cum_comm_cost);
    csv += ',' + decimal17(rec.wall_ms);
    csv += '\n';
  }
  return csv;
}

namespace {

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << content;
  if (!out) {
    throw IoError("short write to '" + path.string() + "'");
  }
}

}  // namespace

void export_report(const ExperimentResult& result, const ExperimentConfig& cfg,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "series");

  const auto stat = convergence_stat(result.records, cfg.accuracy_threshold);
  const double cost = communication_cost(
      result.records, static_cast<int>(result.roster.size()));
  const auto model = comm_cost_model(
      result.final_master, static_cast<int>(result.roster.size()),
      static_cast<int>(result.records.size()));
  std::int64_t used = 0;
  for (const auto& rec : result.records) {
    used += static_cast<std::int64_t>(rec.selected.size());
  }

  json summary = {
      {"schema", 1},
      {"config", json::parse(config_to_string(cfg))},
      {"rounds_completed", result.records.size()},
      {"roster_size", result.roster.size()},
      {"strategy", to_string(cfg.aggregation.strategy)},
      {"convergence",
       {{"auc_val_metric", hex_double(stat.auc_val_metric)},
        {"final_val_loss", hex_double(stat.final_val_loss)},
        {"rounds_to_threshold", stat.rounds_to_threshold.has_value()
                                    ? json(*stat.rounds_to_threshold)
                                    : json(nullptr)}}},
      {"communication",
       {{"participation_fraction", hex_double(cost)},
        {"per_update_payload_bytes", model.per_update_payload_bytes},
        {"total_possible_updates", model.total_possible_updates},
        {"updates_shipped", used},
        {"payload_bytes_shipped",
         static_cast<std::uint64_t>(used) * model.per_update_payload_bytes}}}};
  write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");

  write_text_file(out_dir / "rounds.csv", rounds_csv(result));

  std::string loss_series = "round,val_loss\n";
  std::string acc_series = "round,val_acc\n";
  std::string cost_series = "round,cum_comm_cost\n";
  for (const auto& rec : result.records) {
    if (rec.validation.has_value()) {
      loss_series += std::to_string(rec.round_index) + ',' +
                     decimal17(rec.validation->loss) + '\n';
      acc_series += std::to_string(rec.round_index) + ',' +
                    decimal17(rec.validation->accuracy) + '\n';
    }
    cost_series += std::to_string(rec.round_index) + ',' +
                   decimal17(rec.cum_comm_cost) + '\n';
  }
  write_text_file(out_dir / "series" / "val_loss.csv", loss_series);
  write_text_file(out_dir / "series" / "val_acc.csv", acc_series);
  write_text_file(out_dir / "series" / "cum_comm_cost.csv", cost_series);
}

}  // namespace fedsim
