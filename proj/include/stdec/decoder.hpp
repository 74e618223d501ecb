#pragma once

// Block-wise decode loop shared by STDec and every baseline policy.

#include "stdec/baselines.hpp"
#include "stdec/denoiser.hpp"
#include "stdec/state.hpp"
#include "stdec/stdec.hpp"
#include "stdec/trace.hpp"
#include "stdec/types.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stdec {

enum class PolicyKind { stdec, top_k, fixed_threshold, half_step, anchor_dual };

struct PolicySpec {
  PolicyKind kind = PolicyKind::stdec;
  BaselineConfig baseline;

  static PolicySpec stdec() { return {}; }
  static PolicySpec top_k(int k);
  static PolicySpec fixed(double tau);
  static PolicySpec half_step();
  static PolicySpec anchor_dual(double tau_anchor, double tau_neighbor, int radius);

  std::string name() const;   // stdec | top_k | fixed | half_step | anchor_dual
  std::string label() const;  // name plus parameters, e.g. "fixed(tau=0.9)"
  void validate() const;
};

PolicyKind parse_policy_kind(std::string_view name);

/// Hook for cache-based accelerations stacked on a policy. Called after every
/// commit; the base implementation is a pass-through.
class StepCache {
 public:
  virtual ~StepCache() = default;
  virtual void on_commit(const DecodeState& /*state*/, std::span<const Position> /*committed*/) {}
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // generation window
  DecodeTrace trace;
  DecodeState final_state;
  std::int64_t steps_used = 0;
  std::int64_t nfe = 0;
  bool budget_exhausted = false;
  // Decoder-internal streak K of every committed position, aligned with
  // trace.steps[s].committed.
  std::vector<std::vector<int>> commit_streaks;
};

/// One policy decision on an already streak-updated state.
StepOutcome decide_step(const PolicySpec& policy, const DecodeState& state, const StepPrediction& pred,
                        std::span<const Position> eligible, const DecoderConfig& cfg,
                        const SmoothingKernel<double>& kernel);

/// Checks that `pred` covers exactly `query` with valid ids and confidences.
void check_prediction(const StepPrediction& pred, std::span<const Position> query, const Vocab& vocab);

/// Runs a full decode. Each step queries the denoiser, updates streaks, lets
/// the policy choose a commit set and commits it. When the step budget runs out
/// with masks left, each remaining block is flushed in one forced step.
DecodeResult decode(Denoiser& denoiser, std::span<const TokenId> prompt, const DecoderConfig& cfg,
                    const Vocab& vocab, const PolicySpec& policy = PolicySpec::stdec(),
                    StepCache* cache = nullptr);

}  // namespace stdec
