#pragma once

// Spatial and temporal stability statistics over decode traces.

#include "stdec/trace.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace stdec {

struct SpatialStabilityReport {
  int radius = 2;
  std::int64_t committed_total = 0;
  // fraction[S] = share of committed tokens with >= S decoded neighbors within
  // +-radius at commit time, S = 0 .. 2*radius.
  std::vector<double> fraction;
  std::vector<std::int64_t> count;
};

struct TemporalBucket {
  double fraction = 0.0;  // committed tokens with streak >= K at commit
  std::int64_t count = 0;
  std::optional<double> mean_first_stable_conf;
  std::optional<double> mean_commit_conf;
  // mean_commit_conf - mean_first_stable_conf when both are present.
  std::optional<double> gap;
};

struct TemporalStabilityReport {
  int k_max = 8;
  std::int64_t committed_total = 0;
  std::vector<TemporalBucket> buckets;  // index K = 0 .. k_max
};

struct SpatialOptions {
  int radius = 2;
  bool prompt_counts = true;  // prompt positions count as decoded neighbors
};

SpatialStabilityReport spatial_stability(const DecodeTrace& trace, const SpatialOptions& opts = {});

TemporalStabilityReport temporal_stability(const DecodeTrace& trace, int k_max = 8);

/// Streak of every committed position, replayed from the recorded
/// predictions, aligned with trace.steps[s].committed.
std::vector<std::vector<int>> replay_commit_streaks(const DecodeTrace& trace);

nlohmann::json to_json(const SpatialStabilityReport& report);
nlohmann::json to_json(const TemporalStabilityReport& report);

/// CSV with the fixed header
///   table,index,fraction,count,mean_first_stable_conf,mean_commit_conf,gap
/// One "spatial" row per S and one "temporal" row per K; absent values are
/// empty cells.
std::string to_csv(const SpatialStabilityReport& spatial, const TemporalStabilityReport& temporal);

}  // namespace stdec
