#include "stdec/decoder.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace stdec;

namespace {

const Vocab kVocab{512, 511};
const std::vector<TokenId> kPrompt{1, 2, 3, 4};

DecoderConfig cfg_for(std::int64_t L, std::int64_t B, std::int64_t T = 0) {
  DecoderConfig cfg;
  cfg.gen_length = L;
  cfg.max_steps = T ? T : L;
  cfg.block_size = B;
  return cfg;
}

DecodeResult run(const std::string& preset, const DecoderConfig& cfg, const PolicySpec& policy,
                 std::uint64_t seed = 7) {
  SyntheticDenoiser d(builtin_preset(preset, cfg.gen_length, kVocab, seed), kVocab);
  return decode(d, kPrompt, cfg, kVocab, policy);
}

struct CountingCache : StepCache {
  int calls = 0;
  std::size_t committed = 0;
  void on_commit(const DecodeState&, std::span<const Position> c) override {
    ++calls;
    committed += c.size();
  }
};

}  // namespace

TEST_CASE("policy labels and parsing") {
  CHECK(PolicySpec::stdec().label() == "stdec");
  CHECK(PolicySpec::top_k(1).label() == "top_k(k=1)");
  CHECK(PolicySpec::fixed(0.9).label() == "fixed(tau=0.9)");
  CHECK(PolicySpec::half_step().label() == "half_step");
  CHECK(PolicySpec::anchor_dual(0.9, 0.7, 1).label() == "anchor_dual(anchor=0.9,neighbor=0.7,radius=1)");
  CHECK(parse_policy_kind("fixed") == PolicyKind::fixed_threshold);
  CHECK_THROWS_AS(parse_policy_kind("greedy"), ConfigError);
}

TEST_CASE("degenerate oracle: STDec decodes a block per step") {
  const auto cfg = cfg_for(64, 16);
  const auto r = run("degenerate-oracle", cfg, PolicySpec::stdec());
  CHECK(r.steps_used == 4);
  CHECK(r.nfe == 4);
  CHECK(r.tokens == builtin_preset("degenerate-oracle", 64, kVocab, 7).ground_truth);
  CHECK_FALSE(r.budget_exhausted);
}

TEST_CASE("baseline step counts") {
  const auto cfg = cfg_for(32, 8);
  CHECK(run("stable-95", cfg, PolicySpec::top_k(1)).steps_used == 32);
  CHECK(run("stable-95", cfg, PolicySpec::top_k(4)).steps_used == 8);
  CHECK(run("stable-95", cfg, PolicySpec::half_step()).steps_used == 16);
  CHECK(run("degenerate-oracle", cfg, PolicySpec::fixed(0.9)).steps_used == 4);
}

TEST_CASE("low confidence everywhere falls back to one token per step") {
  fixtures::FunctionDenoiser d(16, [](const DecodeState&, Position p) {
    return std::pair<TokenId, double>{static_cast<TokenId>(p % 10), 0.2};
  });
  const Vocab v{16, 15};
  const auto r = decode(d, kPrompt, cfg_for(8, 4), v, PolicySpec::stdec());
  CHECK(r.steps_used == 8);
  for (const auto& s : r.trace.steps) {
    CHECK(s.fallback_used);
    CHECK(s.committed.size() == 1);
  }
  // fallback commits the lowest position on ties
  CHECK(r.trace.steps[0].committed[0].pos == 0);
}

TEST_CASE("stable predictions get relaxed thresholds") {
  // conf 0.86 never clears tau_high next to masked tokens; after a streak of two
  // the relaxed threshold admits it.
  fixtures::FunctionDenoiser d(16, [](const DecodeState&, Position p) {
    return std::pair<TokenId, double>{static_cast<TokenId>(p % 10), 0.86};
  });
  const Vocab v{16, 15};
  const auto r = decode(d, kPrompt, cfg_for(16, 16), v, PolicySpec::stdec());
  CHECK(r.steps_used < 16);
  bool relaxed_commit = false;
  for (std::size_t s = 0; s < r.trace.steps.size(); ++s)
    for (int k : r.commit_streaks[s])
      if (k >= 2 && !r.trace.steps[s].fallback_used) relaxed_commit = true;
  CHECK(relaxed_commit);
}

TEST_CASE("step budget: remaining blocks are flushed") {
  const auto r = run("stable-95", cfg_for(8, 4, 2), PolicySpec::top_k(1));
  CHECK(r.budget_exhausted);
  REQUIRE(r.trace.steps.size() == 4);
  CHECK_FALSE(r.trace.steps[1].budget_forced);
  CHECK(r.trace.steps[2].budget_forced);
  CHECK(r.trace.steps[2].committed.size() == 2);
  CHECK(r.trace.steps[3].committed.size() == 4);
  CHECK(r.final_state.finished());
  CHECK_NOTHROW(validate_trace(r.trace));
}

TEST_CASE("every policy makes progress and emits a valid trace") {
  const std::vector<PolicySpec> policies{PolicySpec::stdec(), PolicySpec::top_k(1), PolicySpec::top_k(3),
                                         PolicySpec::fixed(0.9), PolicySpec::half_step(),
                                         PolicySpec::anchor_dual(0.9, 0.7, 1)};
  for (const auto& preset : builtin_preset_names())
    for (const auto& policy : policies)
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto cfg = cfg_for(32, 16);
        const auto r = run(preset, cfg, policy, seed);
        CHECK(r.final_state.finished());
        CHECK(r.steps_used <= cfg.gen_length);
        CHECK(r.steps_used == static_cast<std::int64_t>(r.trace.steps.size()));
        for (const auto& s : r.trace.steps) CHECK_FALSE(s.committed.empty());
        CHECK_NOTHROW(validate_trace(r.trace));
        if (policy.kind == PolicyKind::stdec)
          for (const auto& s : r.trace.steps) {
            REQUIRE(s.thresholds.has_value());
            for (const auto& th : *s.thresholds) {
              CHECK(th.value <= cfg.tau_high);
              CHECK(th.value >= cfg.tau_low * cfg.alpha);
            }
          }
      }
}

TEST_CASE("decoding is deterministic and replays from its own trace") {
  const auto cfg = cfg_for(64, 32);
  const auto a = run("unstable", cfg, PolicySpec::stdec(), 3);
  const auto b = run("unstable", cfg, PolicySpec::stdec(), 3);
  CHECK(a.trace == b.trace);

  ScriptedDenoiser replay(std::make_shared<const DecodeTrace>(a.trace));
  const auto c = decode(replay, kPrompt, cfg, kVocab, PolicySpec::stdec());
  CHECK(c.tokens == a.tokens);
  CHECK(c.trace.steps == a.trace.steps);
}

TEST_CASE("replaying under a different policy diverges with a replay error") {
  const auto cfg = cfg_for(32, 32);
  const auto a = run("stable-95", cfg, PolicySpec::half_step());
  ScriptedDenoiser replay(std::make_shared<const DecodeTrace>(a.trace));
  // one token per step needs more steps than were recorded
  CHECK_THROWS_AS(decode(replay, kPrompt, cfg, kVocab, PolicySpec::top_k(1)), ReplayError);
}

TEST_CASE("full-window queries predict every masked position") {
  auto cfg = cfg_for(32, 8);
  cfg.query_full_window = true;
  const auto r = run("stable-95", cfg, PolicySpec::stdec());
  CHECK(r.trace.steps[0].predictions.size() == 32);
  CHECK_NOTHROW(validate_trace(r.trace));
  for (const auto& s : r.trace.steps)
    for (const auto& c : s.committed) CHECK(c.pos / 8 == s.block);
}

TEST_CASE("cache hook sees every commit") {
  CountingCache cache;
  SyntheticDenoiser d(builtin_preset("stable-95", 32, kVocab), kVocab);
  const auto r = decode(d, kPrompt, cfg_for(32, 16), kVocab, PolicySpec::stdec(), &cache);
  CHECK(cache.calls == r.steps_used);
  CHECK(cache.committed == 32);
}

TEST_CASE("invalid denoiser output and configuration are rejected") {
  const Vocab v{16, 15};
  fixtures::FunctionDenoiser masky(16, [](const DecodeState&, Position) { return std::pair<TokenId, double>{15, 0.5}; });
  CHECK_THROWS_AS(decode(masky, kPrompt, cfg_for(4, 4), v), DenoiserError);
  fixtures::FunctionDenoiser hot(16, [](const DecodeState&, Position) { return std::pair<TokenId, double>{3, 1.5}; });
  CHECK_THROWS_AS(decode(hot, kPrompt, cfg_for(4, 4), v), DenoiserError);
  fixtures::FunctionDenoiser other(32, [](const DecodeState&, Position) { return std::pair<TokenId, double>{3, 0.5}; });
  CHECK_THROWS_AS(decode(other, kPrompt, cfg_for(4, 4), v), ConfigError);
  CHECK_THROWS_AS(decode(hot, kPrompt, cfg_for(4, 4), v, PolicySpec::top_k(0)), ConfigError);
}

TEST_CASE("stable-95 seed 7: STDec needs strictly fewer steps than fixed(0.9)") {
  // measured step counts, frozen as regression fixtures
  const auto small = cfg_for(64, 32);
  CHECK(run("stable-95", small, PolicySpec::stdec()).steps_used == 63);
  CHECK(run("stable-95", small, PolicySpec::fixed(0.9)).steps_used == 64);
  const DecoderConfig dflt;
  CHECK(run("stable-95", dflt, PolicySpec::stdec()).steps_used == 238);
  CHECK(run("stable-95", dflt, PolicySpec::fixed(0.9)).steps_used == 256);
}
