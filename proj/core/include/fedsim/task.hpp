#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fedsim {

enum class ModelFamily { kLinearSoftmax, kMlp1Hidden };

std::string to_string(ModelFamily m);
ModelFamily model_family_from_string(const std::string& s);

/// Synthetic classification task: multinomial logistic targets on Gaussian
/// class clusters. Loss is cross-entropy throughout.
struct TaskSpec {
  ModelFamily model_family = ModelFamily::kLinearSoftmax;
  int num_features = 10;
  int num_classes = 5;
  int hidden_width = 16;  // mlp_1hidden only
};

/// Row-major feature matrix plus integer class labels.
struct Dataset {
  int num_features = 0;
  std::vector<double> features;  // size() * num_features
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * static_cast<std::size_t>(num_features),
            static_cast<std::size_t>(num_features)};
  }
};

/// Ground-truth generator shared by every collaborator: one Gaussian cluster
/// center per class, drawn once from the task seed. Shards shift and noise
/// these clusters per their ShardSpec; the validation set samples them IID.
class TaskGenerator {
 public:
  TaskGenerator(const TaskSpec& spec, std::uint64_t seed,
                double cluster_separation = 3.0);

  const TaskSpec& spec() const { return spec_; }
  std::span<const double> class_mean(int cls) const;

  /// IID sample: uniform label mixture, unit noise, no shift.
  Dataset sample_iid(std::size_t n, std::uint64_t seed) const;

 private:
  TaskSpec spec_;
  std::vector<double> means_;  // num_classes x num_features, row-major
};

/// Binary matrix container (docs/formats.md): magic "FSIMMAT1", uint64 LE
/// header length, JSON header {schema, dtype, rows, cols}, then rows*cols
/// little-endian binary64 values, row-major.
void write_matrix_file(const std::filesystem::path& path, std::size_t rows,
                       std::size_t cols, std::span<const double> values);

struct MatrixFile {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

MatrixFile read_matrix_file(const std::filesystem::path& path);

void write_dataset(const std::filesystem::path& dir,
                   const std::string& basename, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& dir,
                     const std::string& basename);

}  // namespace fedsim
