#include "fedsim/task.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

using json = nlohmann::json;

constexpr char kMatMagic[8] = {'F', 'S', 'I', 'M', 'M', 'A', 'T', '1'};

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return v;
}

}  // namespace

std::string to_string(ModelFamily m) {
  return m == ModelFamily::kLinearSoftmax ? "linear_softmax" : "mlp_1hidden";
}

ModelFamily model_family_from_string(const std::string& s) {
  if (s == "linear_softmax") return ModelFamily::kLinearSoftmax;
  if (s == "mlp_1hidden") return ModelFamily::kMlp1Hidden;
  throw BadConfig("unknown model_family '" + s +
                  "' (valid: linear_softmax, mlp_1hidden)");
}

TaskGenerator::TaskGenerator(const TaskSpec& spec, std::uint64_t seed,
                             double cluster_separation)
    : spec_(spec) {
  if (spec.num_features < 1 || spec.num_classes < 2) {
    throw BadConfig("task needs num_features >= 1 and num_classes >= 2");
  }
  if (spec.model_family == ModelFamily::kMlp1Hidden && spec.hidden_width < 1) {
    throw BadConfig("mlp_1hidden needs hidden_width >= 1");
  }
  SplitMix64 rng(derive_seed(seed, "task-means"));
  means_.resize(static_cast<std::size_t>(spec.num_classes) *
                static_cast<std::size_t>(spec.num_features));
  for (auto& m : means_) {
    m = cluster_separation * rng.next_gaussian();
  }
}

std::span<const double> TaskGenerator::class_mean(int cls) const {
  return {means_.data() +
              static_cast<std::size_t>(cls) *
                  static_cast<std::size_t>(spec_.num_features),
          static_cast<std::size_t>(spec_.num_features)};
}

Dataset TaskGenerator::sample_iid(std::size_t n, std::uint64_t seed) const {
  SplitMix64 rng(seed);
  const int d = spec_.num_features;
  const int k = spec_.num_classes;
  Dataset out;
  out.num_features = d;
  out.features.resize(n * static_cast<std::size_t>(d));
  out.labels.resize(n);
  std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
  for (std::size_t i = 0; i < n; ++i) {
    int cls = static_cast<int>(rng.next_categorical(uniform));
    out.labels[i] = cls;
    auto mean = class_mean(cls);
    for (int f = 0; f < d; ++f) {
      out.features[i * static_cast<std::size_t>(d) + f] =
          mean[f] + rng.next_gaussian();
    }
  }
  return out;
}

void write_matrix_file(const std::filesystem::path& path, std::size_t rows,
                       std::size_t cols, std::span<const double> values) {
  if (values.size() != rows * cols) {
    throw LengthMismatch("matrix payload size does not match rows*cols");
  }
  json header = {
      {"schema", 1}, {"dtype", "f64"}, {"rows", rows}, {"cols", cols}};
  const std::string header_str = header.dump();

  std::string buf;
  buf.reserve(16 + header_str.size() + 8 * values.size());
  buf.append(kMatMagic, sizeof(kMatMagic));
  put_u64_le(buf, header_str.size());
  buf += header_str;
  for (double v : values) {
    put_u64_le(buf, std::bit_cast<std::uint64_t>(v));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) {
    throw IoError("short write to '" + path.string() + "'");
  }
}

MatrixFile read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open matrix file '" + path.string() + "'");
  }
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(buf.data());
  if (buf.size() < 16 ||
      std::memcmp(buf.data(), kMatMagic, sizeof(kMatMagic)) != 0) {
    throw IoError("'" + path.string() + "' is not a matrix file");
  }
  const std::uint64_t header_len = get_u64_le(data + 8);
  if (16 + header_len > buf.size()) {
    throw IoError("'" + path.string() + "': truncated header");
  }
  json header;
  try {
    header = json::parse(buf.substr(16, header_len));
  } catch (const json::parse_error& e) {
    throw IoError("'" + path.string() + "': bad header JSON: " + e.what());
  }
  MatrixFile m;
  m.rows = header.at("rows").get<std::size_t>();
  m.cols = header.at("cols").get<std::size_t>();
  const std::size_t n = m.rows * m.cols;
  if (buf.size() != 16 + header_len + 8 * n) {
    throw IoError("'" + path.string() + "': payload size mismatch");
  }
  m.values.resize(n);
  std::size_t off = 16 + header_len;
  for (std::size_t j = 0; j < n; ++j) {
    m.values[j] = std::bit_cast<double>(get_u64_le(data + off));
    off += 8;
  }
  return m;
}

void write_dataset(const std::filesystem::path& dir,
                   const std::string& basename, const Dataset& data) {
  write_matrix_file(dir / (basename + "_features.mat"), data.size(),
                    static_cast<std::size_t>(data.num_features),
                    data.features);
  std::vector<double> labels(data.labels.begin(), data.labels.end());
  write_matrix_file(dir / (basename + "_labels.mat"), data.size(), 1, labels);
}

Dataset read_dataset(const std::filesystem::path& dir,
                     const std::string& basename) {
  MatrixFile feats = read_matrix_file(dir / (basename + "_features.mat"));
  MatrixFile labels = read_matrix_file(dir / (basename + "_labels.mat"));
  if (labels.cols != 1 || labels.rows != feats.rows) {
    throw IoError("dataset '" + basename + "': labels do not match features");
  }
  Dataset out;
  out.num_features = static_cast<int>(feats.cols);
  out.features = std::move(feats.values);
  out.labels.reserve(labels.rows);
  for (double v : labels.values) {
    out.labels.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace fedsim
