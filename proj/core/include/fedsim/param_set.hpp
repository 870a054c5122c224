#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fedsim {

/// One named tensor: a shape and its flat row-major values.
struct TensorEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t element_count() const;
};

enum class Norm { kL1, kL2 };

enum class WeightScope { kGlobal, kPerTensor };

/// Immutable ordered collection of named tensors — the unit shipped between
/// collaborator and aggregator. Construction validates that tensor names are
/// unique, every value vector matches its shape product, and all values are
/// finite. Two sets aggregate together only when their schema hashes match.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(std::vector<TensorEntry> entries);

  const std::vector<TensorEntry>& entries() const { return entries_; }
  const TensorEntry& entry(std::size_t i) const { return entries_[i]; }
  std::size_t tensor_count() const { return entries_.size(); }
  std::size_t total_elements() const { return total_elements_; }
  bool empty() const { return entries_.empty(); }

  /// FNV-1a digest over the (name, shape) sequence; value payload excluded.
  const std::string& schema_hash() const { return schema_hash_; }
  bool schema_compatible(const ParameterSet& other) const {
    return schema_hash_ == other.schema_hash_;
  }

  /// Concatenates all tensor values in declared order.
  std::vector<double> flatten() const;

  /// New set with this schema and the given flat values (length must equal
  /// total_elements()).
  ParameterSet with_values(std::span<const double> flat) const;

 private:
  std::vector<TensorEntry> entries_;
  std::string schema_hash_;
  std::size_t total_elements_ = 0;
};

/// Elementwise arithmetic mean of schema-compatible sets.
ParameterSet mean_params(std::span<const ParameterSet* const> sets);
ParameterSet mean_params(std::span<const ParameterSet> sets);

/// Norm of (a - b) over the flattened whole set.
double distance(const ParameterSet& a, const ParameterSet& b,
                Norm norm = Norm::kL2);

/// Norm of (a - b) per named tensor, in declared order.
std::vector<double> distance_per_tensor(const ParameterSet& a,
                                        const ParameterSet& b,
                                        Norm norm = Norm::kL2);

/// Elementwise sum of weights[i] * sets[i]. No normalization is applied;
/// callers own the sum-to-one contract.
ParameterSet axpy_combine(std::span<const double> weights,
                          std::span<const ParameterSet* const> sets);
ParameterSet axpy_combine(std::span<const double> weights,
                          std::span<const ParameterSet> sets);

/// Per-tensor weighted combine: weights[t][i] applies to tensor t of set i.
ParameterSet axpy_combine_per_tensor(
    const std::vector<std::vector<double>>& weights,
    std::span<const ParameterSet* const> sets);

}  // namespace fedsim
