#pragma once

#include "stdec/denoiser.hpp"
#include "stdec/trace.hpp"

#include <functional>
#include <random>
#include <string>

namespace stdec::fixtures {

/// Prompt [1, 2], L = B = 6, vocab 10 (mask 9), five steps with hand-counted
/// stability statistics (see analyzer tests).
DecodeTrace five_step_trace();

/// Denoiser driven by a callback (state, position) -> (id, conf).
class FunctionDenoiser final : public Denoiser {
 public:
  using Fn = std::function<std::pair<TokenId, double>(const DecodeState&, Position)>;
  FunctionDenoiser(std::int64_t vocab_size, Fn fn) : vocab_size_(vocab_size), fn_(std::move(fn)) {}

  StepPrediction predict(const DecodeState& state, std::span<const Position> query) override;
  std::int64_t vocab_size() const override { return vocab_size_; }

 private:
  std::int64_t vocab_size_;
  Fn fn_;
};

/// A valid random trace: random L/B/prompt, random predictions over the active
/// block and random non-empty commits until complete.
DecodeTrace random_trace(std::mt19937_64& rng);

std::string data_dir();

}  // namespace stdec::fixtures
