#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedsim/config_io.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/selection.hpp"
#include "fedsim/util.hpp"
#include "oracles.hpp"

using namespace fedsim;
namespace fs = std::filesystem;

namespace {

RoundRecord bare_record(int round, std::vector<std::string> selected) {
  RoundRecord rec;
  rec.round_index = round;
  rec.selected = std::move(selected);
  const std::size_t k = rec.selected.size();
  rec.local_loss_before.assign(k, 1.0);
  rec.local_loss_after.assign(k, 0.9);
  rec.weights.strategy = Strategy::kSimAgg;
  rec.weights.scope = WeightScope::kGlobal;
  rec.weights.collab_ids = rec.selected;
  WeightBlock block;
  block.elements = 4;
  block.similarity.assign(k, 1.0 / k);
  block.sample.assign(k, 1.0 / k);
  block.combined.assign(k, 1.0 / k);
  block.pre_norm.assign(k, 1.0 / k);
  block.final_weight.assign(k, 1.0 / k);
  rec.weights.blocks.push_back(std::move(block));
  return rec;
}

std::vector<RoundRecord> schedule_records(int roster, double fraction,
                                          int rounds, std::uint64_t seed) {
  auto scheduler = Scheduler::create(make_roster(roster), fraction, seed);
  std::vector<RoundRecord> records;
  for (int r = 1; r <= rounds; ++r) {
    records.push_back(bare_record(r, scheduler.next_round().selected));
  }
  return records;
}

}  // namespace

TEST_CASE("communication cost: full participation costs 1") {
  auto records = schedule_records(5, 1.0, 12, 3);
  CHECK(communication_cost(records, 5) == 1.0);
}

TEST_CASE("communication cost: window 7 of 33 over 33 rounds is 7/33") {
  auto records = schedule_records(33, 0.2, 33, 9);
  CHECK(communication_cost(records, 33) ==
        doctest::Approx(7.0 / 33.0).epsilon(1e-12));
}

TEST_CASE("communication cost: singleton roster always costs 1") {
  auto records = schedule_records(1, 1.0, 20, 4);
  CHECK(communication_cost(records, 1) == 1.0);
}

TEST_CASE("communication cost is monotone in the window fraction") {
  double last = 0.0;
  for (double fraction : {0.1, 0.2, 0.4, 0.8}) {
    auto records = schedule_records(20, fraction, 40, 6);
    double cost = communication_cost(records, 20);
    CHECK(cost >= last);
    last = cost;
  }
}

TEST_CASE("comm cost model accounts payload bytes from the schema") {
  ParameterSet schema({TensorEntry{"w", {4, 2}, std::vector<double>(8, 0.0)}});
  auto model = comm_cost_model(schema, 33, 20);
  CHECK(model.total_possible_updates == 660);
  CHECK(model.per_update_payload_bytes > 8 * 8);  // payload plus header
}

TEST_CASE("convergence stat: constant and linear curves") {
  auto constant = schedule_records(4, 0.5, 6, 1);
  for (auto& rec : constant) {
    rec.validation = EvalMetrics{0.5, 0.8};
  }
  auto stat = convergence_stat(constant, 0.9);
  CHECK(stat.auc_val_metric == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(stat.final_val_loss == 0.5);
  CHECK_FALSE(stat.rounds_to_threshold.has_value());

  auto linear = schedule_records(4, 0.5, 11, 2);
  for (std::size_t i = 0; i < linear.size(); ++i) {
    linear[i].validation = EvalMetrics{1.0, static_cast<double>(i) / 10.0};
  }
  auto lstat = convergence_stat(linear, 0.7);
  CHECK(lstat.auc_val_metric == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lstat.rounds_to_threshold.has_value());
  CHECK(*lstat.rounds_to_threshold == 8);  // acc 0.7 first reached there
}

TEST_CASE("convergence stat matches the trapezoid oracle on a random curve") {
  SplitMix64 rng(77);
  auto records = schedule_records(6, 0.5, 15, 3);
  oracle::Vec xs, ys;
  for (auto& rec : records) {
    if (rec.round_index % 2 == 1) {  // sparse eval rounds
      double acc = rng.next_double();
      rec.validation = EvalMetrics{rng.next_double(), acc};
      xs.push_back(rec.round_index);
      ys.push_back(acc);
    }
  }
  auto stat = convergence_stat(records, 2.0);
  CHECK(stat.auc_val_metric ==
        doctest::Approx(oracle::trapezoid_auc(xs, ys)).epsilon(1e-12));
}

TEST_CASE("convergence stat demands validation points") {
  auto records = schedule_records(4, 0.5, 3, 4);
  CHECK_THROWS_AS(convergence_stat(records, 0.9), EmptyRecords);
  CHECK_THROWS_AS(convergence_stat(std::vector<RoundRecord>{}, 0.9),
                  EmptyRecords);
  CHECK_THROWS_AS(communication_cost(std::vector<RoundRecord>{}, 3),
                  EmptyRecords);
}

TEST_CASE("records.jsonl round trip reconstructs every field bit-exactly") {
  SplitMix64 rng(88);
  auto records = schedule_records(5, 0.5, 8, 5);
  for (auto& rec : records) {
    for (auto& v : rec.local_loss_before) v = rng.next_gaussian();
    for (auto& v : rec.local_loss_after) v = rng.next_gaussian();
    for (auto& block : rec.weights.blocks) {
      for (auto& v : block.similarity) v = rng.next_double();
      block.drift = rng.next_gaussian();
    }
    rec.drift = rec.weights.mean_drift();
    rec.cum_comm_cost = rng.next_double();
    rec.wall_ms = 1000.0 * rng.next_double();
    if (rec.round_index % 2 == 0) {
      rec.validation = EvalMetrics{rng.next_gaussian(), rng.next_double()};
    }
  }

  const auto path = fs::temp_directory_path() / "fedsim_records_test.jsonl";
  fs::remove(path);
  for (const auto& rec : records) {
    append_record_jsonl(path, rec);
  }
  auto loaded = read_records_jsonl(path);
  REQUIRE(loaded.size() == records.size());
  DigestOptions exact;
  exact.include_wall_ms = true;
  CHECK(trajectory_digest(loaded, exact) ==
        trajectory_digest(records, exact));
  // Spot-check bitwise equality of a few doubles.
  CHECK(loaded[0].local_loss_before == records[0].local_loss_before);
  CHECK(loaded[3].weights.blocks[0].similarity ==
        records[3].weights.blocks[0].similarity);
  fs::remove(path);
}

TEST_CASE("hex-float encoding is bit-exact for awkward values") {
  SplitMix64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    double v = std::exp(40.0 * (rng.next_double() - 0.5)) *
               (rng.next_double() < 0.5 ? -1.0 : 1.0);
    CHECK(parse_hex_double(hex_double(v)) == v);
  }
  CHECK(parse_hex_double(hex_double(0.0)) == 0.0);
  CHECK(parse_hex_double(hex_double(5e-324)) == 5e-324);  // subnormal
}

TEST_CASE("decimal17 round-trips binary64 through text") {
  SplitMix64 rng(111);
  for (int i = 0; i < 1000; ++i) {
    double v = std::exp(30.0 * (rng.next_double() - 0.5)) *
               (rng.next_double() < 0.5 ? -1.0 : 1.0);
    CHECK(std::stod(decimal17(v)) == v);
  }
}

namespace {

ExperimentConfig tiny_result_cfg() {
  ExperimentConfig cfg;
  cfg.rounds = 4;
  cfg.master_seed = 17;
  cfg.scheduler.window_fraction = 0.5;
  cfg.partition.num_collaborators = 4;
  cfg.partition.total_samples = 200;
  cfg.partition.num_classes = 3;
  cfg.partition.num_features = 3;
  cfg.task.num_classes = 3;
  cfg.task.num_features = 3;
  cfg.train.learning_rate = 0.05;
  cfg.train.batch_size = 16;
  return cfg;
}

ExperimentResult tiny_result() { return run_experiment(tiny_result_cfg()); }

}  // namespace

TEST_CASE("CSV column order is stable (golden header)") {
  auto result = tiny_result();
  auto csv = rounds_csv(result);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "round,selected_ids,"
        "u_c0,v_c0,w_c0,final_c0,u_c1,v_c1,w_c1,final_c1,"
        "u_c2,v_c2,w_c2,final_c2,u_c3,v_c3,w_c3,final_c3,"
        "drift,val_loss,val_acc,cum_comm_cost,wall_ms");
  int rows = 0;
  std::string row;
  while (std::getline(lines, row)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("CSV values reconstruct the in-memory metrics exactly") {
  auto result = tiny_result();
  auto csv = rounds_csv(result);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header

  for (const auto& rec : result.records) {
    REQUIRE(std::getline(lines, line));
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream cs(line);
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    cells.resize(2 + 4 * result.roster.size() + 5);

    CHECK(std::stoi(cells[0]) == rec.round_index);
    REQUIRE(rec.validation.has_value());
    const std::size_t base = 2 + 4 * result.roster.size();
    CHECK(std::stod(cells[base + 1]) == rec.validation->loss);
    CHECK(std::stod(cells[base + 2]) == rec.validation->accuracy);
    CHECK(std::stod(cells[base + 3]) == rec.cum_comm_cost);

    // Weight columns of selected collaborators sum to 1 per row.
    double u_sum = 0.0, fin_sum = 0.0;
    for (std::size_t c = 0; c < result.roster.size(); ++c) {
      const auto& u_cell = cells[2 + 4 * c];
      if (!u_cell.empty()) {
        u_sum += std::stod(u_cell);
        fin_sum += std::stod(cells[2 + 4 * c + 3]);
      }
    }
    CHECK(u_sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fin_sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("export_report writes summary, csv and series files") {
  auto result = tiny_result();
  auto cfg = tiny_result_cfg();
  const auto dir = fs::temp_directory_path() / "fedsim_export_test";
  fs::remove_all(dir);
  export_report(result, cfg, dir);

  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "rounds.csv"));
  CHECK(fs::exists(dir / "series" / "val_loss.csv"));
  CHECK(fs::exists(dir / "series" / "val_acc.csv"));
  CHECK(fs::exists(dir / "series" / "cum_comm_cost.csv"));

  // The hex-encoded summary metrics parse back to the in-memory values.
  std::ifstream in(dir / "summary.json");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  auto stat = convergence_stat(result.records, cfg.accuracy_threshold);
  CHECK(text.find(hex_double(stat.final_val_loss)) != std::string::npos);
  CHECK(text.find(hex_double(stat.auc_val_metric)) != std::string::npos);

  // Series round trip: the val_loss series equals the recorded values.
  std::ifstream series(dir / "series" / "val_loss.csv");
  std::string line;
  std::getline(series, line);  // header
  for (const auto& rec : result.records) {
    REQUIRE(std::getline(series, line));
    auto comma = line.find(',');
    CHECK(std::stoi(line.substr(0, comma)) == rec.round_index);
    CHECK(std::stod(line.substr(comma + 1)) == rec.validation->loss);
  }
  fs::remove_all(dir);
}
