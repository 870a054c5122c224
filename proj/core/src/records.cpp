#include "fedsim/records.hpp"

#include <fstream>

#include <json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/util.hpp"

namespace fedsim {

namespace {

using json = nlohmann::json;

json hex_array(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) {
    out.push_back(hex_double(x));
  }
  return out;
}

std::vector<double> parse_hex_array(const json& a) {
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& x : a) {
    out.push_back(parse_hex_double(x.get<std::string>()));
  }
  return out;
}

json weights_to_json(const AggregationWeights& w) {
  json blocks = json::array();
  for (const auto& b : w.blocks) {
    blocks.push_back({{"tensor", b.tensor},
                      {"elements", b.elements},
                      {"u", hex_array(b.similarity)},
                      {"v", hex_array(b.sample)},
                      {"w", hex_array(b.combined)},
                      {"pre_norm", hex_array(b.pre_norm)},
                      {"final", hex_array(b.final_weight)},
                      {"drift", hex_double(b.drift)}});
  }
  return {{"strategy", to_string(w.strategy)},
          {"scope", to_string(w.scope)},
          {"regularized", w.regularized},
          {"collab_ids", w.collab_ids},
          {"blocks", blocks}};
}

AggregationWeights weights_from_json(const json& j) {
  AggregationWeights w;
  w.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  w.scope = scope_from_string(j.at("scope").get<std::string>());
  w.regularized = j.at("regularized").get<bool>();
  w.collab_ids = j.at("collab_ids").get<std::vector<std::string>>();
  for (const auto& bj : j.at("blocks")) {
    WeightBlock b;
    b.tensor = bj.at("tensor").get<std::string>();
    b.elements = bj.at("elements").get<std::size_t>();
    b.similarity = parse_hex_array(bj.at("u"));
    b.sample = parse_hex_array(bj.at("v"));
    b.combined = parse_hex_array(bj.at("w"));
    b.pre_norm = parse_hex_array(bj.at("pre_norm"));
    b.final_weight = parse_hex_array(bj.at("final"));
    b.drift = parse_hex_double(bj.at("drift").get<std::string>());
    w.blocks.push_back(std::move(b));
  }
  return w;
}

}  // namespace

std::string round_record_to_jsonl(const RoundRecord& rec) {
  json j = {{"schema", 1},
            {"round", rec.round_index},
            {"selected", rec.selected},
            {"local_loss_before", hex_array(rec.local_loss_before)},
            {"local_loss_after", hex_array(rec.local_loss_after)},
            {"weights", weights_to_json(rec.weights)},
            {"drift", hex_double(rec.drift)},
            {"cum_comm_cost", hex_double(rec.cum_comm_cost)},
            {"wall_ms", hex_double(rec.wall_ms)}};
  if (rec.validation.has_value()) {
    j["val_loss"] = hex_double(rec.validation->loss);
    j["val_acc"] = hex_double(rec.validation->accuracy);
  }
  return j.dump();
}

RoundRecord parse_round_record(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CorruptCheckpoint(std::string("bad record line: ") + e.what());
  }
  if (j.value("schema", -1) != 1) {
    throw CorruptCheckpoint("record line has unknown schema version");
  }
  RoundRecord rec;
  rec.round_index = j.at("round").get<int>();
  rec.selected = j.at("selected").get<std::vector<std::string>>();
  rec.local_loss_before = parse_hex_array(j.at("local_loss_before"));
  rec.local_loss_after = parse_hex_array(j.at("local_loss_after"));
  rec.weights = weights_from_json(j.at("weights"));
  rec.drift = parse_hex_double(j.at("drift").get<std::string>());
  rec.cum_comm_cost = parse_hex_double(j.at("cum_comm_cost").get<std::string>());
  rec.wall_ms = parse_hex_double(j.at("wall_ms").get<std::string>());
  if (j.contains("val_loss")) {
    EvalMetrics m;
    m.loss = parse_hex_double(j.at("val_loss").get<std::string>());
    m.accuracy = parse_hex_double(j.at("val_acc").get<std::string>());
    rec.validation = m;
  }
  return rec;
}

void append_record_jsonl(const std::filesystem::path& path,
                         const RoundRecord& rec) {
  std::ofstream out(path, std::ios::app);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for append");
  }
  out << round_record_to_jsonl(rec) << '\n';
  if (!out) {
    throw IoError("short write to '" + path.string() + "'");
  }
}

std::vector<RoundRecord> read_records_jsonl(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open records file '" + path.string() + "'");
  }
  std::vector<RoundRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    out.push_back(parse_round_record(line));
  }
  return out;
}

std::string trajectory_digest(std::span<const RoundRecord> records,
                              const DigestOptions& opts) {
  std::string canon;
  for (const auto& rec : records) {
    RoundRecord copy = rec;
    if (!opts.include_wall_ms) {
      copy.wall_ms = 0.0;
    }
    if (!opts.include_strategy) {
      copy.weights.strategy = Strategy::kSimAgg;  // neutral label
    }
    canon += round_record_to_jsonl(copy);
    canon += '\n';
  }
  return hex64(fnv1a64(canon));
}

}  // namespace fedsim
