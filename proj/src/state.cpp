#include "stdec/state.hpp"

#include <algorithm>
#include <string>

namespace stdec {

std::int64_t DecodeState::masked_count() const {
  return std::count(masked.begin() + prompt_len, masked.end(), true);
}

std::vector<Position> DecodeState::eligible() const {
  std::vector<Position> out;
  if (finished()) return out;
  for (Position p = block_begin(block_index); p < block_end(block_index); ++p)
    if (is_masked(p)) out.push_back(p);
  return out;
}

std::vector<Position> DecodeState::masked_positions() const {
  std::vector<Position> out;
  for (Position p = 0; p < gen_length; ++p)
    if (is_masked(p)) out.push_back(p);
  return out;
}

DecodeState new_state(std::span<const TokenId> prompt, const DecoderConfig& cfg,
                      const Vocab& vocab) {
  cfg.validate();
  vocab.validate();
  if (prompt.empty()) throw ConfigError("prompt must be non-empty");
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    if (!vocab.valid_token(prompt[i]) || prompt[i] == vocab.mask_id)
      throw ConfigError("invalid prompt token at index " + std::to_string(i));
  }

  DecodeState s;
  s.prompt_len = static_cast<std::int64_t>(prompt.size());
  s.gen_length = cfg.gen_length;
  s.block_size = cfg.block_size;

  const auto window = static_cast<std::size_t>(s.window_size());
  const auto L = static_cast<std::size_t>(cfg.gen_length);
  s.tokens.assign(window, vocab.mask_id);
  std::copy(prompt.begin(), prompt.end(), s.tokens.begin());
  s.masked.assign(window, true);
  std::fill(s.masked.begin(), s.masked.begin() + s.prompt_len, false);

  s.streak.assign(L, 0);
  s.prev_id.assign(L, std::nullopt);
  s.prev_conf.assign(L, std::nullopt);
  s.gate_conf.assign(L, std::nullopt);
  return s;
}

DecodeState commit(DecodeState state, std::span<const Position> positions,
                   std::span<const TokenId> ids) {
  if (positions.size() != ids.size()) throw LogicError("commit: positions/ids length mismatch");
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const Position p = positions[k];
    if (p < 0 || p >= state.gen_length)
      throw LogicError("commit: position " + std::to_string(p) + " outside generation window");
    if (!state.in_block(p, state.block_index))
      throw LogicError("commit: position " + std::to_string(p) + " outside active block " +
                       std::to_string(state.block_index));
    if (!state.is_masked(p))
      throw LogicError("commit: position " + std::to_string(p) + " already decoded");
    const auto w = static_cast<std::size_t>(state.window_index(p));
    state.masked[w] = false;
    state.tokens[w] = ids[k];
  }
  ++state.t;

  // Skip over every block that has been fully decoded.
  while (state.block_index + 1 < state.num_blocks()) {
    bool any = false;
    for (Position p = state.block_begin(state.block_index);
         p < state.block_end(state.block_index) && !any; ++p)
      any = state.is_masked(p);
    if (any) break;
    ++state.block_index;
  }
  return state;
}

}  // namespace stdec
