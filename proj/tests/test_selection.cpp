#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "fedsim/errors.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/selection.hpp"

using namespace fedsim;

namespace {

std::set<std::string> as_set(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("window size: ceil(0.2 * 33) = 7, the partition-2 setting") {
  auto s = Scheduler::create(make_roster(33), 0.2, 1);
  CHECK(s.window_size() == 7);
}

TEST_CASE("window size survives floating-point fraction*n error") {
  // 0.3 * 10 = 3.0000000000000004 in binary64; the window must still be 3.
  auto s = Scheduler::create(make_roster(10), 0.3, 1);
  CHECK(s.window_size() == 3);

  SchedulerConfig floor_cfg;
  floor_cfg.window_fraction = 0.7;  // 0.7 * 10 = 6.999999999999999
  floor_cfg.rounding = Rounding::kFloor;
  auto f = Scheduler::create(make_roster(10), floor_cfg, 1);
  CHECK(f.window_size() == 7);
}

TEST_CASE("singleton roster with full participation selects it every round") {
  auto s = Scheduler::create({"only"}, 1.0, 3);
  for (int r = 1; r <= 10; ++r) {
    auto plan = s.next_round();
    CHECK(plan.round_index == r);
    REQUIRE(plan.selected.size() == 1);
    CHECK(plan.selected[0] == "only");
  }
}

TEST_CASE("same seed replays the identical schedule over 100 rounds") {
  auto a = Scheduler::create(make_roster(20), 0.25, 77);
  auto b = Scheduler::create(make_roster(20), 0.25, 77);
  for (int r = 0; r < 100; ++r) {
    CHECK(a.next_round().selected == b.next_round().selected);
  }
  auto c = Scheduler::create(make_roster(20), 0.25, 78);
  bool differs = false;
  auto a2 = Scheduler::create(make_roster(20), 0.25, 77);
  for (int r = 0; r < 100 && !differs; ++r) {
    differs = a2.next_round().selected != c.next_round().selected;
  }
  CHECK(differs);
}

TEST_CASE("A..J example: three full windows then leftover plus reshuffle") {
  const std::uint64_t seed = 1234;
  auto roster = make_roster(10);
  auto s = Scheduler::create(roster, 0.3, seed);

  // Enumeration oracle: replay the documented draw (one Fisher-Yates shuffle
  // of the index vector from the seeded stream) to learn the first pass.
  SplitMix64 rng(seed);
  std::vector<std::size_t> perm(10);
  for (std::size_t i = 0; i < 10; ++i) perm[i] = i;
  fisher_yates_shuffle(perm, rng);

  auto r1 = s.next_round();
  auto r2 = s.next_round();
  auto r3 = s.next_round();
  auto r4 = s.next_round();

  for (int j = 0; j < 3; ++j) {
    CHECK(r1.selected[j] == roster[perm[j]]);
    CHECK(r2.selected[j] == roster[perm[3 + j]]);
    CHECK(r3.selected[j] == roster[perm[6 + j]]);
  }
  // Round 4: the single leftover of pass one, topped up with two fresh IDs.
  REQUIRE(r4.selected.size() == 3);
  CHECK(r4.selected[0] == roster[perm[9]]);
  CHECK(r4.selected[1] != r4.selected[0]);
  CHECK(r4.selected[2] != r4.selected[0]);
  CHECK(r4.selected[1] != r4.selected[2]);
}

TEST_CASE("full participation repeats the set and reports the waiver") {
  auto s = Scheduler::create(make_roster(4), 1.0, 5);
  CHECK(s.repeat_guarantee_waived());
  auto first = as_set(s.next_round().selected);
  auto second = as_set(s.next_round().selected);
  CHECK(first == second);
  CHECK(first.size() == 4);
}

TEST_CASE("participation counts stay pairwise within one") {
  // Counting oracle: the selection stream is a concatenation of
  // permutations, so at any prefix the counts can differ by at most one,
  // and at pass boundaries they are all equal.
  auto roster = make_roster(13);
  auto s = Scheduler::create(roster, 0.2, 11);
  std::map<std::string, int> counts;
  for (const auto& id : roster) counts[id] = 0;

  std::size_t consumed = 0;
  for (int r = 0; r < 10 * 13; ++r) {
    auto plan = s.next_round();
    for (const auto& id : plan.selected) counts[id]++;
    consumed += plan.selected.size();

    int lo = 1 << 30, hi = 0;
    for (const auto& [id, n] : counts) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    CHECK(hi - lo <= 1);
    if (consumed % roster.size() == 0) {
      CHECK(hi == lo);  // completed pass: everyone selected exactly once more
    }
  }
}

TEST_CASE("consecutive rounds never repeat the same set (fraction < 1)") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    for (int n : {4, 10, 33}) {
      auto s = Scheduler::create(make_roster(n), 0.5, seed);
      auto prev = as_set(s.next_round().selected);
      for (int r = 0; r < 20 * n; ++r) {
        auto cur = as_set(s.next_round().selected);
        CHECK(cur != prev);
        prev = std::move(cur);
      }
    }
  }
}

TEST_CASE("state restore resumes the exact schedule") {
  auto s = Scheduler::create(make_roster(10), 0.3, 21);
  for (int r = 0; r < 5; ++r) s.next_round();
  Scheduler::State snapshot = s.state();

  std::vector<std::vector<std::string>> ahead;
  for (int r = 0; r < 10; ++r) ahead.push_back(s.next_round().selected);

  auto restored = Scheduler::restore(snapshot);
  for (int r = 0; r < 10; ++r) {
    CHECK(restored.next_round().selected == ahead[r]);
  }
}

TEST_CASE("restore validates the permutation") {
  auto s = Scheduler::create(make_roster(4), 0.5, 1);
  auto st = s.state();
  st.permutation = {0, 0, 1, 2};
  CHECK_THROWS_AS(Scheduler::restore(st), CorruptCheckpoint);
}

TEST_CASE("truncate tail policy emits a short boundary round") {
  SchedulerConfig cfg;
  cfg.window_fraction = 0.3;
  cfg.tail_policy = TailPolicy::kTruncate;
  auto s = Scheduler::create(make_roster(10), cfg, 9);
  std::vector<std::size_t> sizes;
  for (int r = 0; r < 4; ++r) sizes.push_back(s.next_round().selected.size());
  CHECK(sizes == std::vector<std::size_t>{3, 3, 3, 1});
  // Next pass starts fresh at full window size.
  CHECK(s.next_round().selected.size() == 3);
}

TEST_CASE("construction rejects bad input") {
  CHECK_THROWS_AS(Scheduler::create({}, 0.2, 1), EmptyRoster);
  CHECK_THROWS_AS(Scheduler::create({"a", "a"}, 0.2, 1), DuplicateId);
  CHECK_THROWS_AS(Scheduler::create(make_roster(5), 0.0, 1), BadFraction);
  CHECK_THROWS_AS(Scheduler::create(make_roster(5), 1.5, 1), BadFraction);
  CHECK_THROWS_AS(Scheduler::create(make_roster(5), -0.2, 1), BadFraction);
}
