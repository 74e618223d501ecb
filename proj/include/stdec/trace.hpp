#pragma once

// Decode traces: an append-only record of every step, stored as line-delimited
// JSON (`.dtrace.jsonl`). The first line is the header, each following line is
// one step:
//
//   {"format_version":1,"prompt":[...],"L":64,"B":32,"vocab_size":512,
//    "mask_id":511,"config":{...},"policy":"stdec","seed":7,"meta":{...}}
//   {"t":0,"block":0,"predictions":[[pos,id,conf],...],
//    "thresholds":[[pos,value],...],"committed":[[pos,id],...],
//    "fallback_used":false,"budget_forced":false}
//
// "thresholds" and "meta" are optional. Positions are generation-window
// indices.

#include "stdec/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stdec {

inline constexpr int kTraceFormatVersion = 1;

struct TraceHeader {
  int format_version = kTraceFormatVersion;
  std::vector<TokenId> prompt;
  std::int64_t gen_length = 0;
  std::int64_t block_size = 0;
  std::int64_t vocab_size = 0;
  TokenId mask_id = 0;
  nlohmann::json config = nlohmann::json::object();
  std::string policy;
  std::uint64_t seed = 0;
  nlohmann::json meta = nlohmann::json::object();

  bool operator==(const TraceHeader&) const = default;
};

struct TracePrediction {
  Position pos = 0;
  TokenId id = 0;
  double conf = 0.0;
  bool operator==(const TracePrediction&) const = default;
};

struct TraceThreshold {
  Position pos = 0;
  double value = 0.0;
  bool operator==(const TraceThreshold&) const = default;
};

struct TraceCommit {
  Position pos = 0;
  TokenId id = 0;
  bool operator==(const TraceCommit&) const = default;
};

struct TraceStep {
  std::int64_t t = 0;
  std::int64_t block = 0;
  std::vector<TracePrediction> predictions;
  std::optional<std::vector<TraceThreshold>> thresholds;
  std::vector<TraceCommit> committed;
  bool fallback_used = false;
  // Set on the steps that flush remaining masks once the step budget is spent.
  bool budget_forced = false;

  bool operator==(const TraceStep&) const = default;
};

struct DecodeTrace {
  TraceHeader header;
  std::vector<TraceStep> steps;

  bool operator==(const DecodeTrace&) const = default;
};

nlohmann::json header_to_json(const TraceHeader& header);
nlohmann::json step_to_json(const TraceStep& step);

/// Checks every trace invariant; throws ValidationError naming the offending
/// step.
void validate_trace(const DecodeTrace& trace);

void write_trace(const DecodeTrace& trace, std::ostream& out);
void write_trace(const DecodeTrace& trace, const std::filesystem::path& path);

/// Parses and validates. Throws ValidationError on version mismatch, malformed
/// records or invariant violations.
DecodeTrace read_trace(std::istream& in);
DecodeTrace read_trace(const std::filesystem::path& path);

}  // namespace stdec
