#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/rng.hpp"

namespace fedsim {

/// Collaborators chosen for one federation round.
struct RoundPlan {
  int round_index = 0;
  std::vector<std::string> selected;
};

enum class Rounding { kCeil, kFloor };
enum class TailPolicy { kTopUp, kTruncate };

std::string to_string(Rounding r);
Rounding rounding_from_string(const std::string& s);
std::string to_string(TailPolicy t);
TailPolicy tail_policy_from_string(const std::string& s);

struct SchedulerConfig {
  double window_fraction = 0.2;
  Rounding rounding = Rounding::kCeil;
  TailPolicy tail_policy = TailPolicy::kTopUp;
};

/// Sliding-window collaborator scheduler.
///
/// The roster order is randomized (seeded Fisher-Yates); each round takes the
/// next window of s = ceil(fraction * n) IDs. When fewer than s remain, the
/// tail is topped up from a freshly shuffled permutation, skipping IDs
/// already taken this round, so every pass still selects each collaborator
/// exactly once and the round size stays constant. A reshuffle that would
/// repeat the previous round's exact set is redrawn from the same seeded
/// stream while an alternative exists; with full participation (s == n) the
/// guarantee is waived and flagged instead.
class Scheduler {
 public:
  struct State {
    std::vector<std::string> roster;
    std::vector<std::size_t> permutation;
    std::size_t cursor = 0;
    double window_fraction = 0.2;
    Rounding rounding = Rounding::kCeil;
    TailPolicy tail_policy = TailPolicy::kTopUp;
    std::uint64_t rng_seed = 0;
    std::uint64_t rng_state = 0;
    int round_index = 0;  // rounds already emitted
    std::vector<std::string> last_selected;
  };

  static Scheduler create(std::vector<std::string> roster,
                          double window_fraction, std::uint64_t seed);
  static Scheduler create(std::vector<std::string> roster,
                          const SchedulerConfig& cfg, std::uint64_t seed);
  static Scheduler restore(State state);

  /// Emits the plan for the next round and advances the state.
  RoundPlan next_round();

  std::size_t window_size() const;
  std::size_t roster_size() const { return state_.roster.size(); }
  int rounds_emitted() const { return state_.round_index; }
  /// True when full participation makes the no-repeat guarantee impossible.
  bool repeat_guarantee_waived() const;
  const State& state() const { return state_; }

 private:
  explicit Scheduler(State state);

  std::vector<std::size_t> draw_permutation(SplitMix64& rng) const;

  State state_;
  bool warned_ = false;
};

}  // namespace fedsim
