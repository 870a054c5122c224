#include "fedsim/selection.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <unordered_set>

#include "fedsim/errors.hpp"

namespace fedsim {

std::string to_string(Rounding r) {
  return r == Rounding::kCeil ? "ceil" : "floor";
}

Rounding rounding_from_string(const std::string& s) {
  if (s == "ceil") return Rounding::kCeil;
  if (s == "floor") return Rounding::kFloor;
  throw BadConfig("unknown rounding '" + s + "' (valid: ceil, floor)");
}

std::string to_string(TailPolicy t) {
  return t == TailPolicy::kTopUp ? "top_up" : "truncate";
}

TailPolicy tail_policy_from_string(const std::string& s) {
  if (s == "top_up") return TailPolicy::kTopUp;
  if (s == "truncate") return TailPolicy::kTruncate;
  throw BadConfig("unknown tail_policy '" + s + "' (valid: top_up, truncate)");
}

Scheduler Scheduler::create(std::vector<std::string> roster,
                            double window_fraction, std::uint64_t seed) {
  SchedulerConfig cfg;
  cfg.window_fraction = window_fraction;
  return create(std::move(roster), cfg, seed);
}

Scheduler Scheduler::create(std::vector<std::string> roster,
                            const SchedulerConfig& cfg, std::uint64_t seed) {
  if (roster.empty()) {
    throw EmptyRoster("scheduler needs at least one collaborator");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : roster) {
    if (!seen.insert(id).second) {
      throw DuplicateId("duplicate collaborator id '" + id + "'");
    }
  }
  if (!(cfg.window_fraction > 0.0) || cfg.window_fraction > 1.0) {
    throw BadFraction("window_fraction must be in (0, 1], got " +
                      std::to_string(cfg.window_fraction));
  }

  State st;
  st.roster = std::move(roster);
  st.window_fraction = cfg.window_fraction;
  st.rounding = cfg.rounding;
  st.tail_policy = cfg.tail_policy;
  st.rng_seed = seed;
  st.rng_state = seed;
  SplitMix64 rng(seed);
  st.permutation.resize(st.roster.size());
  for (std::size_t i = 0; i < st.roster.size(); ++i) {
    st.permutation[i] = i;
  }
  fisher_yates_shuffle(st.permutation, rng);
  st.rng_state = rng.state();
  st.cursor = 0;
  st.round_index = 0;
  return Scheduler(std::move(st));
}

Scheduler Scheduler::restore(State state) {
  if (state.roster.empty()) {
    throw EmptyRoster("restored scheduler state has an empty roster");
  }
  if (state.permutation.size() != state.roster.size() ||
      state.cursor > state.roster.size()) {
    throw CorruptCheckpoint("scheduler state is inconsistent");
  }
  std::vector<bool> seen(state.roster.size(), false);
  for (std::size_t idx : state.permutation) {
    if (idx >= state.roster.size() || seen[idx]) {
      throw CorruptCheckpoint("scheduler permutation is not a permutation");
    }
    seen[idx] = true;
  }
  return Scheduler(std::move(state));
}

Scheduler::Scheduler(State state) : state_(std::move(state)) {}

std::size_t Scheduler::window_size() const {
  const double x =
      state_.window_fraction * static_cast<double>(state_.roster.size());
  // 1e-9 slack absorbs FP error in fraction * n (0.3 * 10 is not exactly 3).
  std::size_t s;
  if (state_.rounding == Rounding::kCeil) {
    s = static_cast<std::size_t>(std::ceil(x - 1e-9));
  } else {
    s = static_cast<std::size_t>(std::floor(x + 1e-9));
  }
  if (s < 1) s = 1;
  if (s > state_.roster.size()) s = state_.roster.size();
  return s;
}

bool Scheduler::repeat_guarantee_waived() const {
  return window_size() == state_.roster.size();
}

std::vector<std::size_t> Scheduler::draw_permutation(SplitMix64& rng) const {
  std::vector<std::size_t> perm(state_.roster.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    perm[i] = i;
  }
  fisher_yates_shuffle(perm, rng);
  return perm;
}

RoundPlan Scheduler::next_round() {
  const std::size_t n = state_.roster.size();
  const std::size_t s = window_size();
  SplitMix64 rng(0);
  rng.set_state(state_.rng_state);

  if (repeat_guarantee_waived() && !warned_) {
    std::cerr << "[fedsim] scheduler: window covers the full roster; "
                 "consecutive rounds necessarily repeat the same set\n";
    warned_ = true;
  }

  std::vector<std::size_t> selected_idx;
  if (state_.cursor + s <= n) {
    // Plain window inside the current pass. Disjoint from the previous
    // window by construction, so no repeat check is needed unless s == n.
    selected_idx.assign(state_.permutation.begin() + state_.cursor,
                        state_.permutation.begin() + state_.cursor + s);
    state_.cursor += s;
  } else {
    // Boundary: take the tail, then (policy permitting) top up from a fresh
    // permutation, skipping IDs already taken this round. Skipped IDs keep
    // their later positions in the new pass, so each pass still covers every
    // collaborator exactly once.
    std::vector<std::size_t> tail(state_.permutation.begin() + state_.cursor,
                                  state_.permutation.end());
    if (state_.tail_policy == TailPolicy::kTruncate && !tail.empty()) {
      selected_idx = tail;
      state_.cursor = n;  // next round starts a fresh pass
    } else {
      const std::size_t fill = s - tail.size();
      std::unordered_set<std::size_t> in_tail(tail.begin(), tail.end());
      // A set-repeat is only reachable when the tail is empty (clean pass
      // boundary); while an alternative window exists, redraw.
      for (int attempt = 0; attempt < 10000; ++attempt) {
        std::vector<std::size_t> fresh = draw_permutation(rng);
        std::vector<std::size_t> front, rest;
        front.reserve(fill);
        rest.reserve(n - fill);
        for (std::size_t idx : fresh) {
          if (front.size() < fill && !in_tail.contains(idx)) {
            front.push_back(idx);
          } else {
            rest.push_back(idx);
          }
        }
        std::vector<std::size_t> candidate = tail;
        candidate.insert(candidate.end(), front.begin(), front.end());

        bool repeats = false;
        if (s < n && !state_.last_selected.empty() &&
            state_.last_selected.size() == candidate.size()) {
          std::unordered_set<std::string> prev(state_.last_selected.begin(),
                                               state_.last_selected.end());
          repeats = true;
          for (std::size_t idx : candidate) {
            if (!prev.contains(state_.roster[idx])) {
              repeats = false;
              break;
            }
          }
        }
        if (repeats && s < n) {
          continue;  // fresh draw from the same stream
        }
        selected_idx = std::move(candidate);
        std::vector<std::size_t> reordered = std::move(front);
        reordered.insert(reordered.end(), rest.begin(), rest.end());
        state_.permutation = std::move(reordered);
        state_.cursor = fill;
        break;
      }
      if (selected_idx.empty()) {
        // 10000 rejected redraws cannot happen when an alternative exists;
        // reaching here means s == n was mis-detected, so fail loudly.
        throw Error("scheduler could not draw a non-repeating window");
      }
    }
  }

  state_.rng_state = rng.state();
  state_.round_index += 1;

  RoundPlan plan;
  plan.round_index = state_.round_index;
  plan.selected.reserve(selected_idx.size());
  for (std::size_t idx : selected_idx) {
    plan.selected.push_back(state_.roster[idx]);
  }
  state_.last_selected = plan.selected;
  return plan;
}

}  // namespace fedsim
