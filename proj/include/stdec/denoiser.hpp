#pragma once

// The denoiser contract and two reference denoisers that stand in for a
// masked-diffusion language model:
//
//  - ScriptedDenoiser replays the predictions recorded in a trace.
//  - SyntheticDenoiser reconstructs a hidden ground-truth id sequence with
//    confidences that grow with decoded neighbors and with id stability.

#include "stdec/state.hpp"
#include "stdec/trace.hpp"
#include "stdec/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stdec {

/// Predicts (argmax id, confidence) for each queried masked position.
/// Implementations are deterministic in (inputs, seed); one instance per
/// decode.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual StepPrediction predict(const DecodeState& state, std::span<const Position> query) = 0;
  virtual std::int64_t vocab_size() const = 0;
};

class ScriptedDenoiser final : public Denoiser {
 public:
  explicit ScriptedDenoiser(std::shared_ptr<const DecodeTrace> trace);

  StepPrediction predict(const DecodeState& state, std::span<const Position> query) override;
  std::int64_t vocab_size() const override { return trace_->header.vocab_size; }

 private:
  std::shared_ptr<const DecodeTrace> trace_;
};

struct SyntheticPreset {
  std::string name;
  std::vector<TokenId> ground_truth;
  double flip_prob = 0.0;
  double conf_base = 1.0;
  double conf_neighbor_gain = 0.0;
  double conf_streak_gain = 0.0;
  double noise_scale = 0.0;
  std::uint64_t seed = 0;

  void validate(const Vocab& vocab) const;
};

/// Names of the built-in presets: stable-95, unstable, degenerate-oracle.
std::vector<std::string> builtin_preset_names();

/// Built-in preset with a ground truth of length `gen_length` drawn from
/// `seed` (the preset's own default seed when absent).
SyntheticPreset builtin_preset(std::string_view name, std::int64_t gen_length, const Vocab& vocab,
                               std::optional<std::uint64_t> seed = std::nullopt);

/// Preset from JSON. Missing "ground_truth" is generated from the seed.
SyntheticPreset preset_from_json(const nlohmann::json& j, std::int64_t gen_length, const Vocab& vocab,
                                 std::optional<std::uint64_t> seed = std::nullopt);
nlohmann::json preset_to_json(const SyntheticPreset& preset);

/// Built-in name or path to a JSON preset file.
SyntheticPreset resolve_preset(const std::string& name_or_path, std::int64_t gen_length,
                               const Vocab& vocab, std::optional<std::uint64_t> seed = std::nullopt);

std::vector<TokenId> make_ground_truth(std::uint64_t seed, std::int64_t gen_length, const Vocab& vocab);

/// Fraction of existing window neighbors within +-radius of `pos` that are
/// decoded (prompt positions count as decoded).
double decoded_neighbor_fraction(const DecodeState& state, Position pos, int radius = 2);

/// Counter-based random stream keyed by (seed, step, position, lane), so a
/// draw never depends on which policy is driving the decode.
double keyed_uniform(std::uint64_t seed, std::int64_t step, Position pos, std::uint64_t lane);
double keyed_normal(std::uint64_t seed, std::int64_t step, Position pos);

class SyntheticDenoiser final : public Denoiser {
 public:
  SyntheticDenoiser(SyntheticPreset preset, Vocab vocab);

  StepPrediction predict(const DecodeState& state, std::span<const Position> query) override;
  std::int64_t vocab_size() const override { return vocab_.size; }

  const SyntheticPreset& preset() const { return preset_; }

  /// Clipped confidence for a decoded-neighbor fraction, streak (capped at 3)
  /// and standard-normal draw.
  double confidence(double neighbor_fraction, int streak, double normal_draw) const;

 private:
  SyntheticPreset preset_;
  Vocab vocab_;
};

}  // namespace stdec
