#include "fixtures.hpp"

#include <cstdlib>

namespace stdec::fixtures {

DecodeTrace five_step_trace() {
  DecodeTrace tr;
  tr.header.prompt = {1, 2};
  tr.header.gen_length = 6;
  tr.header.block_size = 6;
  tr.header.vocab_size = 10;
  tr.header.mask_id = 9;
  tr.header.policy = "hand";
  tr.header.seed = 0;

  auto step = [](std::int64_t t, std::vector<TracePrediction> preds, std::vector<TraceCommit> commits) {
    TraceStep s;
    s.t = t;
    s.block = 0;
    s.predictions = std::move(preds);
    s.committed = std::move(commits);
    return s;
  };
  tr.steps.push_back(step(0, {{0, 3, 0.5}, {1, 4, 0.2}, {2, 5, 0.3}, {3, 6, 0.1}, {4, 7, 0.2}, {5, 8, 0.4}}, {{0, 3}}));
  tr.steps.push_back(step(1, {{1, 4, 0.6}, {2, 1, 0.3}, {3, 6, 0.2}, {4, 7, 0.3}, {5, 8, 0.5}}, {{1, 4}, {5, 8}}));
  tr.steps.push_back(step(2, {{2, 5, 0.4}, {3, 6, 0.5}, {4, 2, 0.3}}, {{3, 6}}));
  tr.steps.push_back(step(3, {{2, 5, 0.7}, {4, 7, 0.4}}, {{2, 5}}));
  tr.steps.push_back(step(4, {{4, 7, 0.8}}, {{4, 7}}));
  return tr;
}

StepPrediction FunctionDenoiser::predict(const DecodeState& state, std::span<const Position> query) {
  StepPrediction pred;
  for (Position p : query) {
    auto [id, conf] = fn_(state, p);
    pred.positions.push_back(p);
    pred.ids.push_back(id);
    pred.confs.push_back(conf);
  }
  return pred;
}

DecodeTrace random_trace(std::mt19937_64& rng) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  DecodeTrace tr;
  const std::int64_t B = pick(1, 8);
  tr.header.block_size = B;
  tr.header.gen_length = B * pick(1, 4);
  tr.header.vocab_size = pick(3, 50);
  tr.header.mask_id = static_cast<TokenId>(pick(0, tr.header.vocab_size - 1));
  for (std::int64_t i = pick(1, 5); i > 0; --i) {
    TokenId id;
    do id = static_cast<TokenId>(pick(0, tr.header.vocab_size - 1)); while (id == tr.header.mask_id);
    tr.header.prompt.push_back(id);
  }
  tr.header.policy = "random";
  tr.header.seed = rng();
  tr.header.config = {{"tau_high", unit(rng)}, {"note", "random"}};
  if (pick(0, 1)) tr.header.meta = {{"model", "toy"}, {"temperature", 1.0}};

  const std::int64_t L = tr.header.gen_length;
  std::vector<bool> done(static_cast<std::size_t>(L), false);
  std::int64_t remaining = L;
  for (std::int64_t t = 0; remaining > 0; ++t) {
    std::int64_t block = 0;
    while (done[static_cast<std::size_t>(block * B)] && [&] {
      for (std::int64_t p = block * B; p < (block + 1) * B; ++p)
        if (!done[static_cast<std::size_t>(p)]) return false;
      return true;
    }())
      ++block;
    TraceStep s;
    s.t = t;
    s.block = block;
    std::vector<TraceThreshold> th;
    for (std::int64_t p = block * B; p < (block + 1) * B; ++p) {
      if (done[static_cast<std::size_t>(p)]) continue;
      TokenId id;
      do id = static_cast<TokenId>(pick(0, tr.header.vocab_size - 1)); while (id == tr.header.mask_id);
      s.predictions.push_back({p, id, unit(rng)});
      th.push_back({p, unit(rng)});
    }
    if (pick(0, 1)) s.thresholds = th;
    for (const auto& pr : s.predictions)
      if (unit(rng) < 0.4) s.committed.push_back({pr.pos, pr.id});
    if (s.committed.empty()) {
      s.committed.push_back({s.predictions.front().pos, s.predictions.front().id});
      s.fallback_used = true;
    }
    for (const auto& c : s.committed) done[static_cast<std::size_t>(c.pos)] = true;
    remaining -= static_cast<std::int64_t>(s.committed.size());
    tr.steps.push_back(std::move(s));
  }
  return tr;
}

std::string data_dir() {
  const char* d = std::getenv("STDEC_TEST_DATA");
  return d ? d : "tests/data";
}

}  // namespace stdec::fixtures
