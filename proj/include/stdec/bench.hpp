#pragma once

// Policy x preset x seed benchmark matrix over the synthetic denoiser.

#include "stdec/decoder.hpp"
#include "stdec/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stdec {

struct BenchMatrix {
  std::vector<PolicySpec> policies;
  std::vector<std::string> presets;  // built-in names or preset file paths
  std::vector<std::uint64_t> seeds;
  DecoderConfig cfg;
  Vocab vocab;
  std::vector<TokenId> prompt{1, 2, 3, 4, 5, 6, 7, 8};
  std::string baseline = "top_k(k=1)";  // policy label used by speedup_report
  int workers = 1;

  void validate() const;
};

/// Reads a matrix description:
///   {"policies": ["stdec", {"name": "fixed", "tau": 0.9}],
///    "presets": ["stable-95"], "seeds": [0, 1] | {"start": 0, "count": 100},
///    "decoder": {...}, "vocab": {"size": 512, "mask_id": 511},
///    "prompt": [...], "baseline": "top_k(k=1)", "workers": 4}
/// The STDEC_BENCH_WORKERS environment variable overrides "workers".
BenchMatrix matrix_from_json(const nlohmann::json& j);
BenchMatrix load_matrix(const std::filesystem::path& path);

struct BenchResult {
  std::string policy;  // PolicySpec::label()
  std::string preset;
  std::uint64_t seed = 0;
  std::int64_t steps_used = 0;
  std::int64_t nfe = 0;
  std::int64_t committed_total = 0;
  double tokens_per_step = 0.0;
  double wall_seconds = 0.0;
  double tps = 0.0;
  std::optional<double> score;  // exact-match fraction against the preset ground truth
  double fallback_rate = 0.0;
  bool budget_exhausted = false;
  // Steps that committed nothing, plus 1 if steps_used > L.
  std::int64_t progress_violations = 0;
  // Recorded thresholds outside [tau_low * alpha, tau_high].
  std::int64_t threshold_violations = 0;
  std::optional<std::string> error;
};

/// One cell: decode `preset` under `policy` with denoiser seed `seed`.
BenchResult run_cell(const BenchMatrix& matrix, const PolicySpec& policy, const std::string& preset,
                     std::uint64_t seed);

/// Runs every (policy, preset, seed) cell. Failed cells carry an error and never
/// abort the matrix. Results are sorted by (policy, preset, seed).
std::vector<BenchResult> run_matrix(const BenchMatrix& matrix);

struct SpeedupRow {
  std::string policy;
  std::string preset;
  std::int64_t cells = 0;
  double steps_speedup = 1.0;  // geometric mean of baseline_steps / steps
  double tps_speedup = 1.0;    // geometric mean of tps / baseline_tps (wall clock)
  double mean_tokens_per_step = 0.0;
  std::optional<double> mean_score;
  std::optional<double> score_delta;  // mean of score - baseline score
};

/// Paired speedups against `baseline_policy` for every (policy, preset).
/// Throws ValidationError if a baseline cell is missing or failed.
std::vector<SpeedupRow> speedup_report(const std::vector<BenchResult>& results,
                                       const std::string& baseline_policy);

nlohmann::json to_json(const BenchResult& r, bool include_wall_clock = true);
nlohmann::json results_to_json(const std::vector<BenchResult>& results, bool include_wall_clock = true);
std::string results_to_csv(const std::vector<BenchResult>& results);
nlohmann::json report_to_json(const std::vector<SpeedupRow>& rows);
std::string report_to_csv(const std::vector<SpeedupRow>& rows);
std::string summary_markdown(const std::vector<BenchResult>& results, const std::vector<SpeedupRow>& rows,
                             const std::string& baseline_policy);

/// Writes results.csv, results.json, speedup.csv, speedup.json and summary.md.
void write_bench_outputs(const std::filesystem::path& dir, const std::vector<BenchResult>& results,
                         const std::string& baseline_policy);

}  // namespace stdec
