#pragma once

// Spatio-temporal adaptive thresholds and commit-set selection.
//
// Per step, for every masked position i:
//   init(i)  = tau_low if decoded, tau_high if masked   (prompt counts as decoded)
//   s(i)     = smooth(init)(i)
//   r(i)     = alpha if K(i) >= 2 and c_{t-1}(i) >= tau_low, else 1
//   st(i)    = s(i) * r(i)
// and i is committed when c_t(i) >= st(i). An empty commit set falls back to
// the single most confident eligible position.

#include "stdec/smoothing.hpp"
#include "stdec/state.hpp"
#include "stdec/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace stdec {

/// Relaxation factor per generation position; every entry is 1 or alpha.
struct RelaxationVector {
  VectorXs factors;
};

struct StepOutcome {
  std::vector<Position> committed;
  std::vector<TokenId> committed_ids;
  // Absent for policies that do not build a threshold map.
  std::optional<ThresholdMap> thresholds;
  StepPrediction prediction;
  bool fallback_used = false;
};

SmoothingKernel<double> kernel_for(const DecoderConfig& cfg);

ThresholdMap initial_threshold_map(const DecodeState& state, const DecoderConfig& cfg);

/// Spatial stage: the smoothed initial map.
ThresholdMap spatial_thresholds(const DecodeState& state, const DecoderConfig& cfg,
                                const SmoothingKernel<double>& kernel);

/// Advances K, prev_id and prev_conf for every predicted position. Positions
/// without a prediction keep their history.
DecodeState update_streaks(DecodeState state, const StepPrediction& pred);

RelaxationVector relaxation_factors(const DecodeState& state, const DecoderConfig& cfg);

ThresholdMap adaptive_thresholds(const DecodeState& state, const DecoderConfig& cfg,
                                 const SmoothingKernel<double>& kernel);

/// Positions of `eligible` whose confidence clears their threshold, or the
/// single most confident one (lowest index on ties) when none does.
StepOutcome select_commit_set(const StepPrediction& pred, const ThresholdMap& thresholds,
                              std::span<const Position> eligible);

/// Index into `pred` of the most confident eligible position (lowest position
/// on ties). Throws LogicError when no eligible position has a prediction.
std::size_t argmax_eligible(const StepPrediction& pred, std::span<const Position> eligible);

/// Index of each eligible position in `pred`; throws DenoiserError if one is
/// missing.
std::vector<std::size_t> eligible_rows(const StepPrediction& pred,
                                       std::span<const Position> eligible);

}  // namespace stdec
