#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spnmap/spn.hpp"

namespace spnmap {

enum class SolveStatus { kFinished, kTimeoutWithResult, kTimeoutNoResult };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kFinished: return "finished";
    case SolveStatus::kTimeoutWithResult: return "timeout_with_result";
    case SolveStatus::kTimeoutNoResult: return "timeout_no_result";
  }
  return "unknown";
}

struct SearchStats {
  std::uint64_t nodes_expanded = 0;
  std::uint64_t mc_prunes = 0;
  std::uint64_t fc_prunes = 0;           // spaces emptied by forward checking
  std::uint64_t fc_values_removed = 0;
  std::uint64_t stage_reductions = 0;
  std::uint64_t incumbent_updates = 0;
  std::uint64_t zero_weight_sums = 0;    // NG: sums whose weights are all zero
  std::uint64_t defaulted_vars = 0;      // variables filled with value 0 outside the solver's choice
  std::uint64_t rounds = 0;              // beam search rounds
  std::uint64_t candidates = 0;          // KBT: recovered samples
  double tree_value = 0.0;               // BT/KBT: value of the best parse tree

  bool operator==(const SearchStats&) const = default;
};

struct SolveResult {
  Assignment assignment;
  double score = -std::numeric_limits<double>::infinity();
  SolveStatus status = SolveStatus::kTimeoutNoResult;
  std::chrono::duration<double> elapsed{0};
  SearchStats stats;
  bool zero_mass = false;

  bool has_result() const { return status != SolveStatus::kTimeoutNoResult; }
};

/// Wall-clock deadline; an empty deadline never expires.
class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  Deadline() = default;
  explicit Deadline(Clock::time_point at) : at_(at) {}

  static Deadline after(std::optional<std::chrono::duration<double>> budget) {
    if (!budget) return {};
    return Deadline(Clock::now() + std::chrono::duration_cast<Clock::duration>(*budget));
  }

  bool unlimited() const { return !at_.has_value(); }
  bool expired() const { return at_ && Clock::now() >= *at_; }

 private:
  std::optional<Clock::time_point> at_;
};

}  // namespace spnmap
