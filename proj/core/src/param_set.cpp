#include "fedsim/param_set.hpp"

#include <cmath>
#include <unordered_set>

#include "fedsim/errors.hpp"
#include "fedsim/util.hpp"

namespace fedsim {

std::size_t TensorEntry::element_count() const {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    n *= d;
  }
  return n;
}

namespace {

std::string compute_schema_hash(const std::vector<TensorEntry>& entries) {
  std::string canon;
  for (const auto& e : entries) {
    canon += e.name;
    canon += '\x1f';
    for (std::size_t d : e.shape) {
      canon += std::to_string(d);
      canon += ',';
    }
    canon += '\x1e';
  }
  return hex64(fnv1a64(canon));
}

void require_compatible(const ParameterSet& a, const ParameterSet& b) {
  if (!a.schema_compatible(b)) {
    throw SchemaMismatch("parameter sets have different schemas (" +
                         a.schema_hash() + " vs " + b.schema_hash() + ")");
  }
}

const ParameterSet& front_set(std::span<const ParameterSet* const> sets) {
  if (sets.empty()) {
    throw EmptyInput("no parameter sets given");
  }
  return *sets.front();
}

std::vector<const ParameterSet*> as_pointers(
    std::span<const ParameterSet> sets) {
  std::vector<const ParameterSet*> ptrs;
  ptrs.reserve(sets.size());
  for (const auto& s : sets) {
    ptrs.push_back(&s);
  }
  return ptrs;
}

}  // namespace

ParameterSet::ParameterSet(std::vector<TensorEntry> entries)
    : entries_(std::move(entries)) {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.shape.empty()) {
      throw BadConfig("tensor '" + e.name + "' has an empty shape");
    }
    for (std::size_t d : e.shape) {
      if (d == 0) {
        throw BadConfig("tensor '" + e.name + "' has a zero dimension");
      }
    }
    if (!seen.insert(e.name).second) {
      throw DuplicateId("duplicate tensor name '" + e.name + "'");
    }
    if (e.values.size() != e.element_count()) {
      throw LengthMismatch("tensor '" + e.name + "' has " +
                           std::to_string(e.values.size()) +
                           " values but shape product " +
                           std::to_string(e.element_count()));
    }
    for (double v : e.values) {
      if (!std::isfinite(v)) {
        throw NonFiniteValue("tensor '" + e.name +
                             "' contains a NaN or infinity");
      }
    }
    total_elements_ += e.values.size();
  }
  schema_hash_ = compute_schema_hash(entries_);
}

std::vector<double> ParameterSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_elements_);
  for (const auto& e : entries_) {
    flat.insert(flat.end(), e.values.begin(), e.values.end());
  }
  return flat;
}

ParameterSet ParameterSet::with_values(std::span<const double> flat) const {
  if (flat.size() != total_elements_) {
    throw LengthMismatch("flat vector has " + std::to_string(flat.size()) +
                         " values, schema needs " +
                         std::to_string(total_elements_));
  }
  std::vector<TensorEntry> out = entries_;
  std::size_t off = 0;
  for (auto& e : out) {
    std::size_t n = e.values.size();
    e.values.assign(flat.begin() + off, flat.begin() + off + n);
    off += n;
  }
  return ParameterSet(std::move(out));
}

ParameterSet mean_params(std::span<const ParameterSet* const> sets) {
  const ParameterSet& first = front_set(sets);
  for (const auto* s : sets) {
    require_compatible(first, *s);
  }
  const double inv = 1.0 / static_cast<double>(sets.size());
  std::vector<TensorEntry> out = first.entries();
  for (std::size_t t = 0; t < out.size(); ++t) {
    auto& vals = out[t].values;
    for (std::size_t j = 0; j < vals.size(); ++j) {
      double acc = 0.0;
      for (const auto* s : sets) {
        acc += s->entry(t).values[j];
      }
      vals[j] = acc * inv;
    }
  }
  return ParameterSet(std::move(out));
}

ParameterSet mean_params(std::span<const ParameterSet> sets) {
  auto ptrs = as_pointers(sets);
  return mean_params(std::span<const ParameterSet* const>(ptrs));
}

namespace {

double accumulate_norm(const std::vector<double>& a,
                       const std::vector<double>& b, Norm norm) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double d = a[j] - b[j];
    acc += (norm == Norm::kL2) ? d * d : std::abs(d);
  }
  return acc;
}

}  // namespace

double distance(const ParameterSet& a, const ParameterSet& b, Norm norm) {
  require_compatible(a, b);
  double acc = 0.0;
  for (std::size_t t = 0; t < a.tensor_count(); ++t) {
    acc += accumulate_norm(a.entry(t).values, b.entry(t).values, norm);
  }
  return (norm == Norm::kL2) ? std::sqrt(acc) : acc;
}

std::vector<double> distance_per_tensor(const ParameterSet& a,
                                        const ParameterSet& b, Norm norm) {
  require_compatible(a, b);
  std::vector<double> out(a.tensor_count());
  for (std::size_t t = 0; t < a.tensor_count(); ++t) {
    double acc = accumulate_norm(a.entry(t).values, b.entry(t).values, norm);
    out[t] = (norm == Norm::kL2) ? std::sqrt(acc) : acc;
  }
  return out;
}

ParameterSet axpy_combine(std::span<const double> weights,
                          std::span<const ParameterSet* const> sets) {
  const ParameterSet& first = front_set(sets);
  if (weights.size() != sets.size()) {
    throw LengthMismatch(std::to_string(weights.size()) + " weights for " +
                         std::to_string(sets.size()) + " parameter sets");
  }
  for (const auto* s : sets) {
    require_compatible(first, *s);
  }
  std::vector<TensorEntry> out = first.entries();
  for (std::size_t t = 0; t < out.size(); ++t) {
    auto& vals = out[t].values;
    for (std::size_t j = 0; j < vals.size(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < sets.size(); ++i) {
        acc += weights[i] * sets[i]->entry(t).values[j];
      }
      vals[j] = acc;
    }
  }
  return ParameterSet(std::move(out));
}

ParameterSet axpy_combine(std::span<const double> weights,
                          std::span<const ParameterSet> sets) {
  auto ptrs = as_pointers(sets);
  return axpy_combine(weights, std::span<const ParameterSet* const>(ptrs));
}

ParameterSet axpy_combine_per_tensor(
    const std::vector<std::vector<double>>& weights,
    std::span<const ParameterSet* const> sets) {
  const ParameterSet& first = front_set(sets);
  if (weights.size() != first.tensor_count()) {
    throw LengthMismatch("per-tensor weights cover " +
                         std::to_string(weights.size()) + " tensors, schema has " +
                         std::to_string(first.tensor_count()));
  }
  for (const auto* s : sets) {
    require_compatible(first, *s);
  }
  std::vector<TensorEntry> out = first.entries();
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (weights[t].size() != sets.size()) {
      throw LengthMismatch("tensor " + std::to_string(t) + " has " +
                           std::to_string(weights[t].size()) +
                           " weights for " + std::to_string(sets.size()) +
                           " sets");
    }
    auto& vals = out[t].values;
    for (std::size_t j = 0; j < vals.size(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < sets.size(); ++i) {
        acc += weights[t][i] * sets[i]->entry(t).values[j];
      }
      vals[j] = acc;
    }
  }
  return ParameterSet(std::move(out));
}

}  // namespace fedsim
