#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stdec {

using TokenId = std::int32_t;
// Index into the generation window (0 .. L-1). Full-window indices are
// prompt_len + position.
using Position = std::int64_t;

using VectorXs = Eigen::VectorXd;

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

/// Invalid user-supplied configuration or input data.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Broken precondition inside the engine (hard failure).
class LogicError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A trace, preset or config file failed validation on load.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scripted replay asked for a prediction the recorded run never made.
class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A denoiser returned a prediction that violates its contract.
class DenoiserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------------
// Domain types
// ----------------------------------------------------------------------------

struct Vocab {
  std::int64_t size = 512;
  TokenId mask_id = 511;

  void validate() const;
  bool valid_token(TokenId id) const { return id >= 0 && id < size; }
};

enum class KernelKind { gaussian, mean, triangular };
enum class BoundaryPolicy { replicate, reflect };

std::string_view to_string(KernelKind kind);
std::string_view to_string(BoundaryPolicy policy);
KernelKind parse_kernel_kind(std::string_view name);
BoundaryPolicy parse_boundary_policy(std::string_view name);

/// Decoder hyperparameters. Defaults are the published STDec settings with the
/// GSM8K generation schedule (L = T = 256, B = 32).
struct DecoderConfig {
  double tau_high = 0.9;
  double tau_low = 0.3;
  double alpha = 0.85;
  KernelKind kernel_kind = KernelKind::gaussian;
  double sigma = 1.0;
  int radius = 2;
  std::int64_t gen_length = 256;
  std::int64_t max_steps = 256;
  std::int64_t block_size = 32;
  BoundaryPolicy boundary_policy = BoundaryPolicy::replicate;
  std::uint64_t seed = 0;
  // Query every masked position of the window, not only the active block.
  bool query_full_window = false;

  void validate() const;
  std::int64_t num_blocks() const { return gen_length / block_size; }
};

/// Per masked position: argmax id and its confidence.
struct StepPrediction {
  std::vector<Position> positions;
  std::vector<TokenId> ids;
  std::vector<double> confs;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
};

enum class ThresholdStage { initial, spatial, spatio_temporal };

/// Per-position thresholds over the full token window (prompt + generation).
struct ThresholdMap {
  VectorXs values;
  ThresholdStage stage = ThresholdStage::initial;
  std::int64_t prompt_len = 0;

  double at(Position pos) const { return values(prompt_len + pos); }
  auto generation() const { return values.tail(values.size() - prompt_len); }
};

}  // namespace stdec
