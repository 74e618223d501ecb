#pragma once

#include "stdec/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace stdec {

/// Evolving decode state: token window, mask flags and per-position temporal
/// history. Prompt positions live in the same window and are never masked.
struct DecodeState {
  std::int64_t t = 0;
  std::int64_t prompt_len = 0;
  std::int64_t gen_length = 0;
  std::int64_t block_size = 0;
  std::int64_t block_index = 0;

  // Full window, length prompt_len + gen_length.
  std::vector<TokenId> tokens;
  std::vector<bool> masked;

  // Generation window only.
  std::vector<int> streak;
  std::vector<std::optional<TokenId>> prev_id;
  std::vector<std::optional<double>> prev_conf;
  // Confidence from the step before the latest streak update (c_{t-1} while
  // step t is being decided). Read by the relaxation gate.
  std::vector<std::optional<double>> gate_conf;

  std::int64_t window_size() const { return prompt_len + gen_length; }
  std::int64_t num_blocks() const { return gen_length / block_size; }
  std::int64_t window_index(Position pos) const { return prompt_len + pos; }

  bool is_masked(Position pos) const { return masked[static_cast<std::size_t>(window_index(pos))]; }
  TokenId token(Position pos) const { return tokens[static_cast<std::size_t>(window_index(pos))]; }

  Position block_begin(std::int64_t block) const { return block * block_size; }
  Position block_end(std::int64_t block) const { return (block + 1) * block_size; }
  bool in_block(Position pos, std::int64_t block) const {
    return pos >= block_begin(block) && pos < block_end(block);
  }

  std::int64_t masked_count() const;
  bool finished() const { return masked_count() == 0; }

  /// Masked positions of the active block, ascending.
  std::vector<Position> eligible() const;
  /// All masked generation positions, ascending.
  std::vector<Position> masked_positions() const;

  bool operator==(const DecodeState&) const = default;
};

/// Builds the fully masked starting state for `prompt`.
DecodeState new_state(std::span<const TokenId> prompt, const DecoderConfig& cfg,
                      const Vocab& vocab);

/// Fixes `ids` at `positions`, advances t and, once the active block is empty,
/// the block index. Throws LogicError for unmasked or out-of-block positions.
DecodeState commit(DecodeState state, std::span<const Position> positions,
                   std::span<const TokenId> ids);

}  // namespace stdec
