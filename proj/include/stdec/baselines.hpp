#pragma once

// Reference commit policies: top-k, fixed global threshold, half-step and an
// anchor/neighbor dual-threshold scheme.

#include "stdec/types.hpp"

#include <span>
#include <vector>

namespace stdec {

enum class BaselineKind { top_k, fixed_threshold, half_step, anchor_dual };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::top_k;
  int k = 1;
  double tau = 0.9;
  double tau_anchor = 0.9;
  double tau_neighbor = 0.7;
  int neighbor_radius = 1;

  void validate() const;
};

/// Committed positions (ascending) and whether the singleton fallback fired.
struct CommitSelection {
  std::vector<Position> positions;
  bool fallback_used = false;
};

CommitSelection topk_commit(const StepPrediction& pred, int k, std::span<const Position> eligible);

CommitSelection fixed_threshold_commit(const StepPrediction& pred, double tau,
                                       std::span<const Position> eligible);

CommitSelection anchor_dual_commit(const StepPrediction& pred, const BaselineConfig& cfg,
                                   std::span<const Position> eligible);

/// k per step for the half-step schedule: ceil(2L / T).
int half_step_k(std::int64_t gen_length, std::int64_t max_steps);

CommitSelection half_step_commit(const StepPrediction& pred, std::span<const Position> eligible,
                                 std::int64_t gen_length, std::int64_t max_steps);

}  // namespace stdec
