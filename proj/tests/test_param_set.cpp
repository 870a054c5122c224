#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fedsim/checkpoint.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/param_set.hpp"
#include "fedsim/rng.hpp"
#include "oracles.hpp"

using namespace fedsim;

namespace {

ParameterSet single(const std::vector<double>& values,
                    const std::string& name = "t") {
  return ParameterSet({TensorEntry{name, {values.size()}, values}});
}

ParameterSet random_set(SplitMix64& rng, int tensors = 3) {
  std::vector<TensorEntry> entries;
  for (int t = 0; t < tensors; ++t) {
    std::size_t rows = 1 + rng.next_below(3);
    std::size_t cols = 1 + rng.next_below(4);
    TensorEntry e{"t" + std::to_string(t), {rows, cols},
                  std::vector<double>(rows * cols)};
    for (auto& v : e.values) {
      v = 10.0 * (rng.next_double() - 0.5);
    }
    entries.push_back(std::move(e));
  }
  return ParameterSet(std::move(entries));
}

std::vector<oracle::Vec> flatten_all(const std::vector<ParameterSet>& sets) {
  std::vector<oracle::Vec> out;
  for (const auto& s : sets) {
    out.push_back(s.flatten());
  }
  return out;
}

}  // namespace

TEST_CASE("construction enforces the invariants") {
  CHECK_THROWS_AS(
      ParameterSet({TensorEntry{"a", {2}, {1.0, 2.0, 3.0}}}),
      LengthMismatch);
  CHECK_THROWS_AS(ParameterSet({TensorEntry{"a", {1}, {1.0}},
                                TensorEntry{"a", {1}, {2.0}}}),
                  DuplicateId);
  CHECK_THROWS_AS(
      ParameterSet({TensorEntry{"a", {1}, {std::nan("")}}}),
      NonFiniteValue);
  CHECK_THROWS_AS(
      ParameterSet(
          {TensorEntry{"a", {1}, {std::numeric_limits<double>::infinity()}}}),
      NonFiniteValue);

  ParameterSet ok({TensorEntry{"w", {2, 3}, {1, 2, 3, 4, 5, 6}},
                   TensorEntry{"b", {3}, {0, 0, 0}}});
  CHECK(ok.total_elements() == 9);
  CHECK(ok.tensor_count() == 2);
}

TEST_CASE("schema hash depends on names and shapes, not values") {
  ParameterSet a({TensorEntry{"w", {2}, {1.0, 2.0}}});
  ParameterSet b({TensorEntry{"w", {2}, {9.0, -4.0}}});
  ParameterSet c({TensorEntry{"w", {2, 1}, {1.0, 2.0}}});
  ParameterSet d({TensorEntry{"x", {2}, {1.0, 2.0}}});
  CHECK(a.schema_compatible(b));
  CHECK_FALSE(a.schema_compatible(c));
  CHECK_FALSE(a.schema_compatible(d));
}

TEST_CASE("mean_params: two sets average elementwise") {
  auto m = mean_params(std::vector<ParameterSet>{single({2.0, 4.0}),
                                                 single({4.0, 8.0})});
  CHECK(m.entry(0).values[0] == 3.0);
  CHECK(m.entry(0).values[1] == 6.0);
}

TEST_CASE("mean_params: singleton is an identical copy") {
  auto s = single({1.5, -2.5, 0.0});
  auto m = mean_params(std::vector<ParameterSet>{s});
  CHECK(m.entry(0).values == s.entry(0).values);
  CHECK(m.schema_hash() == s.schema_hash());
}

TEST_CASE("mean_params matches the scalar-loop oracle on random sets") {
  SplitMix64 rng(101);
  ParameterSet proto = random_set(rng);
  std::vector<ParameterSet> sets;
  for (int i = 0; i < 5; ++i) {
    auto flat = proto.flatten();
    for (auto& v : flat) v = 10.0 * (rng.next_double() - 0.5);
    sets.push_back(proto.with_values(flat));
  }
  auto expect = oracle::mean(flatten_all(sets));
  auto got = mean_params(std::span<const ParameterSet>(sets)).flatten();
  for (std::size_t j = 0; j < expect.size(); ++j) {
    CHECK(got[j] == doctest::Approx(expect[j]).epsilon(1e-12));
  }
}

TEST_CASE("mean_params rejects empty and mismatched input") {
  CHECK_THROWS_AS(mean_params(std::vector<ParameterSet>{}), EmptyInput);
  CHECK_THROWS_AS(
      mean_params(std::vector<ParameterSet>{single({1.0}), single({1.0, 2.0})}),
      SchemaMismatch);
}

TEST_CASE("distance: zero for identical, 3-4-5 for the classic pair") {
  auto a = single({3.0, 0.0});
  auto b = single({0.0, 4.0});
  CHECK(distance(a, a) == 0.0);
  CHECK(distance(a, b) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(distance(a, b, Norm::kL1) == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("distance matches the sqrt-of-sum-of-squares oracle") {
  SplitMix64 rng(102);
  ParameterSet proto = random_set(rng);
  auto fa = proto.flatten();
  auto fb = proto.flatten();
  for (auto& v : fa) v = rng.next_gaussian();
  for (auto& v : fb) v = rng.next_gaussian();
  auto a = proto.with_values(fa);
  auto b = proto.with_values(fb);
  CHECK(distance(a, b, Norm::kL2) ==
        doctest::Approx(oracle::norm_l2(fa, fb)).epsilon(1e-12));
  CHECK(distance(a, b, Norm::kL1) ==
        doctest::Approx(oracle::norm_l1(fa, fb)).epsilon(1e-12));
}

TEST_CASE("distance properties: symmetry, identity, triangle inequality") {
  SplitMix64 rng(103);
  ParameterSet proto = random_set(rng);
  for (int trial = 0; trial < 25; ++trial) {
    auto fa = proto.flatten();
    auto fb = fa;
    auto fc = fa;
    for (auto& v : fa) v = rng.next_gaussian();
    for (auto& v : fb) v = rng.next_gaussian();
    for (auto& v : fc) v = rng.next_gaussian();
    auto a = proto.with_values(fa);
    auto b = proto.with_values(fb);
    auto c = proto.with_values(fc);
    CHECK(distance(a, b) == distance(b, a));
    CHECK(distance(a, a) == 0.0);
    CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
  }
}

TEST_CASE("distance_per_tensor decomposes the global L2 norm") {
  SplitMix64 rng(104);
  ParameterSet proto = random_set(rng);
  auto fa = proto.flatten();
  auto fb = proto.flatten();
  for (auto& v : fa) v = rng.next_gaussian();
  for (auto& v : fb) v = rng.next_gaussian();
  auto a = proto.with_values(fa);
  auto b = proto.with_values(fb);
  auto per = distance_per_tensor(a, b);
  double acc = 0.0;
  for (double dt : per) acc += dt * dt;
  CHECK(std::sqrt(acc) == doctest::Approx(distance(a, b)).epsilon(1e-12));
}

TEST_CASE("axpy_combine: identity and midpoint") {
  auto s = single({4.0, -1.0});
  auto id =
      axpy_combine(std::vector<double>{1.0}, std::vector<ParameterSet>{s});
  CHECK(id.entry(0).values == s.entry(0).values);

  auto mid = axpy_combine(
      std::vector<double>{0.5, 0.5},
      std::vector<ParameterSet>{single({2.0, 2.0}), single({4.0, 6.0})});
  CHECK(mid.entry(0).values[0] == 3.0);
  CHECK(mid.entry(0).values[1] == 4.0);
}

TEST_CASE("axpy_combine matches the double-loop oracle") {
  SplitMix64 rng(105);
  ParameterSet proto = random_set(rng);
  std::vector<ParameterSet> sets;
  std::vector<double> weights;
  for (int i = 0; i < 6; ++i) {
    auto flat = proto.flatten();
    for (auto& v : flat) v = rng.next_gaussian();
    sets.push_back(proto.with_values(flat));
    weights.push_back(2.0 * rng.next_double() - 0.5);
  }
  auto expect = oracle::axpy(weights, flatten_all(sets));
  auto got = axpy_combine(weights, std::span<const ParameterSet>(sets)).flatten();
  for (std::size_t j = 0; j < expect.size(); ++j) {
    CHECK(got[j] == doctest::Approx(expect[j]).epsilon(1e-12));
  }
}

TEST_CASE("axpy_combine validates lengths") {
  CHECK_THROWS_AS(axpy_combine(std::vector<double>{0.5},
                               std::vector<ParameterSet>{single({1.0}),
                                                         single({2.0})}),
                  LengthMismatch);
}

TEST_CASE("mean equals uniform axpy for n up to 16") {
  SplitMix64 rng(106);
  for (int n = 1; n <= 16; ++n) {
    ParameterSet proto = random_set(rng, 2);
    std::vector<ParameterSet> sets;
    for (int i = 0; i < n; ++i) {
      auto flat = proto.flatten();
      for (auto& v : flat) v = rng.next_gaussian();
      sets.push_back(proto.with_values(flat));
    }
    std::vector<double> uniform(n, 1.0 / n);
    auto via_mean = mean_params(std::span<const ParameterSet>(sets)).flatten();
    auto via_axpy =
        axpy_combine(uniform, std::span<const ParameterSet>(sets)).flatten();
    for (std::size_t j = 0; j < via_mean.size(); ++j) {
      CHECK(via_mean[j] == doctest::Approx(via_axpy[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  SplitMix64 rng(107);
  ParameterSet original = random_set(rng, 4);
  const auto path =
      std::filesystem::temp_directory_path() / "fedsim_ckpt_test.ckpt";
  write_param_checkpoint(path, original);
  ParameterSet loaded = read_param_checkpoint(path);

  REQUIRE(loaded.tensor_count() == original.tensor_count());
  CHECK(loaded.schema_hash() == original.schema_hash());
  for (std::size_t t = 0; t < original.tensor_count(); ++t) {
    CHECK(loaded.entry(t).name == original.entry(t).name);
    CHECK(loaded.entry(t).shape == original.entry(t).shape);
    const auto& a = original.entry(t).values;
    const auto& b = loaded.entry(t).values;
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint reader rejects garbage") {
  const auto path =
      std::filesystem::temp_directory_path() / "fedsim_ckpt_garbage.ckpt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "this is not a checkpoint at all";
  }
  CHECK_THROWS_AS(read_param_checkpoint(path), CorruptCheckpoint);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_param_checkpoint(path), IoError);
}
