#include "stdec/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <unordered_map>

namespace stdec {

using nlohmann::json;

// ----------------------------------------------------------------------------
// Scripted replay
// ----------------------------------------------------------------------------

ScriptedDenoiser::ScriptedDenoiser(std::shared_ptr<const DecodeTrace> trace) : trace_(std::move(trace)) {
  if (!trace_) throw ConfigError("scripted denoiser requires a trace");
}

StepPrediction ScriptedDenoiser::predict(const DecodeState& state, std::span<const Position> query) {
  if (state.t < 0 || state.t >= static_cast<std::int64_t>(trace_->steps.size()))
    throw ReplayError("replay: step " + std::to_string(state.t) + " is beyond the end of the trace (" +
                      std::to_string(trace_->steps.size()) + " steps)");
  const TraceStep& step = trace_->steps[static_cast<std::size_t>(state.t)];
  std::unordered_map<Position, const TracePrediction*> recorded;
  for (const auto& p : step.predictions) recorded.emplace(p.pos, &p);

  StepPrediction pred;
  for (Position p : query) {
    auto it = recorded.find(p);
    if (it == recorded.end())
      throw ReplayError("replay: position " + std::to_string(p) + " has no recorded prediction at step " +
                        std::to_string(state.t) + " (policy diverged from the recorded mask schedule)");
    pred.positions.push_back(p);
    pred.ids.push_back(it->second->id);
    pred.confs.push_back(it->second->conf);
  }
  return pred;
}

// ----------------------------------------------------------------------------
// Keyed random stream
// ----------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t key(std::uint64_t seed, std::int64_t step, Position pos, std::uint64_t lane) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(step));
  h = splitmix64(h ^ static_cast<std::uint64_t>(pos));
  return splitmix64(h ^ lane);
}

enum Lane : std::uint64_t { kFlip = 1, kAltId = 2, kNormalA = 3, kNormalB = 4, kTruth = 5 };

}  // namespace

double keyed_uniform(std::uint64_t seed, std::int64_t step, Position pos, std::uint64_t lane) {
  return static_cast<double>(key(seed, step, pos, lane) >> 11) * 0x1.0p-53;
}

double keyed_normal(std::uint64_t seed, std::int64_t step, Position pos) {
  const double u1 = 1.0 - keyed_uniform(seed, step, pos, kNormalA);  // (0, 1]
  const double u2 = keyed_uniform(seed, step, pos, kNormalB);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

// Uniform id in [0, vocab) excluding up to two ids.
TokenId draw_excluding(std::uint64_t bits, std::int64_t vocab, TokenId a, TokenId b) {
  const TokenId lo = std::min(a, b), hi = std::max(a, b);
  const std::int64_t excluded = (a == b) ? 1 : 2;
  auto id = static_cast<TokenId>(bits % static_cast<std::uint64_t>(vocab - excluded));
  if (id >= lo) ++id;
  if (excluded == 2 && id >= hi) ++id;
  return id;
}

}  // namespace

std::vector<TokenId> make_ground_truth(std::uint64_t seed, std::int64_t gen_length, const Vocab& vocab) {
  vocab.validate();
  std::vector<TokenId> truth(static_cast<std::size_t>(gen_length));
  for (Position p = 0; p < gen_length; ++p)
    truth[static_cast<std::size_t>(p)] = draw_excluding(key(seed, -1, p, kTruth), vocab.size, vocab.mask_id, vocab.mask_id);
  return truth;
}

// ----------------------------------------------------------------------------
// Presets
// ----------------------------------------------------------------------------

void SyntheticPreset::validate(const Vocab& vocab) const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(flip_prob) || flip_prob < 0.0 || flip_prob >= 1.0)
    throw ValidationError("preset '" + name + "': flip_prob must be in [0, 1)");
  if (!finite(conf_base) || !finite(conf_neighbor_gain) || !finite(conf_streak_gain) || !finite(noise_scale))
    throw ValidationError("preset '" + name + "': non-finite parameter");
  if (conf_base < 0.0 || conf_neighbor_gain < 0.0 || conf_streak_gain < 0.0 || noise_scale < 0.0)
    throw ValidationError("preset '" + name + "': confidence parameters must be non-negative");
  if (conf_base + conf_neighbor_gain + conf_streak_gain + 3.0 * noise_scale > 1.0 + 1e-12)
    throw ValidationError("preset '" + name + "': conf_base + gains + 3*noise_scale exceeds 1");
  if (ground_truth.empty()) throw ValidationError("preset '" + name + "': empty ground truth");
  for (TokenId id : ground_truth)
    if (!vocab.valid_token(id) || id == vocab.mask_id)
      throw ValidationError("preset '" + name + "': invalid ground-truth id " + std::to_string(id));
  if (flip_prob > 0.0 && vocab.size < 3)
    throw ValidationError("preset '" + name + "': flips need a vocabulary of at least 3 ids");
}

std::vector<std::string> builtin_preset_names() { return {"stable-95", "unstable", "degenerate-oracle"}; }

SyntheticPreset builtin_preset(std::string_view name, std::int64_t gen_length, const Vocab& vocab,
                               std::optional<std::uint64_t> seed) {
  SyntheticPreset p;
  p.name = std::string(name);
  if (name == "stable-95") {
    p.flip_prob = 0.05;
    p.conf_base = 0.4;
    p.conf_neighbor_gain = 0.3;
    p.conf_streak_gain = 0.2;
    p.noise_scale = 0.02;
    p.seed = 7;
  } else if (name == "unstable") {
    p.flip_prob = 0.5;
    p.conf_base = 0.3;
    p.conf_neighbor_gain = 0.2;
    p.conf_streak_gain = 0.1;
    p.noise_scale = 0.1;
    p.seed = 11;
  } else if (name == "degenerate-oracle") {
    p.flip_prob = 0.0;
    p.conf_base = 1.0;
    p.seed = 0;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  if (seed) p.seed = *seed;
  p.ground_truth = make_ground_truth(p.seed, gen_length, vocab);
  p.validate(vocab);
  return p;
}

SyntheticPreset preset_from_json(const json& j, std::int64_t gen_length, const Vocab& vocab,
                                 std::optional<std::uint64_t> seed) {
  if (!j.is_object()) throw ValidationError("preset: not a JSON object");
  SyntheticPreset p;
  try {
    p.name = j.value("name", std::string("custom"));
    p.flip_prob = j.at("flip_prob").get<double>();
    p.conf_base = j.at("conf_base").get<double>();
    p.conf_neighbor_gain = j.at("conf_neighbor_gain").get<double>();
    p.conf_streak_gain = j.at("conf_streak_gain").get<double>();
    p.noise_scale = j.at("noise_scale").get<double>();
    p.seed = j.value("seed", std::uint64_t{0});
    if (seed) p.seed = *seed;
    if (j.contains("ground_truth"))
      p.ground_truth = j.at("ground_truth").get<std::vector<TokenId>>();
    else
      p.ground_truth = make_ground_truth(p.seed, gen_length, vocab);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("preset: ") + e.what());
  }
  if (static_cast<std::int64_t>(p.ground_truth.size()) != gen_length)
    throw ValidationError("preset '" + p.name + "': ground_truth length differs from L");
  p.validate(vocab);
  return p;
}

json preset_to_json(const SyntheticPreset& p) {
  return {{"name", p.name},
          {"ground_truth", p.ground_truth},
          {"flip_prob", p.flip_prob},
          {"conf_base", p.conf_base},
          {"conf_neighbor_gain", p.conf_neighbor_gain},
          {"conf_streak_gain", p.conf_streak_gain},
          {"noise_scale", p.noise_scale},
          {"seed", p.seed}};
}

SyntheticPreset resolve_preset(const std::string& name_or_path, std::int64_t gen_length, const Vocab& vocab,
                               std::optional<std::uint64_t> seed) {
  const auto names = builtin_preset_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end())
    return builtin_preset(name_or_path, gen_length, vocab, seed);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("unknown preset '" + name_or_path + "' (not a built-in name or readable file)");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("preset " + name_or_path + ": " + e.what());
  }
  return preset_from_json(j, gen_length, vocab, seed);
}

// ----------------------------------------------------------------------------
// Synthetic denoiser
// ----------------------------------------------------------------------------

double decoded_neighbor_fraction(const DecodeState& state, Position pos, int radius) {
  const std::int64_t center = state.window_index(pos);
  int total = 0, decoded = 0;
  for (int u = -radius; u <= radius; ++u) {
    if (u == 0) continue;
    const std::int64_t w = center + u;
    if (w < 0 || w >= state.window_size()) continue;
    ++total;
    if (!state.masked[static_cast<std::size_t>(w)]) ++decoded;
  }
  return total == 0 ? 0.0 : static_cast<double>(decoded) / total;
}

SyntheticDenoiser::SyntheticDenoiser(SyntheticPreset preset, Vocab vocab)
    : preset_(std::move(preset)), vocab_(vocab) {
  vocab_.validate();
  preset_.validate(vocab_);
}

double SyntheticDenoiser::confidence(double neighbor_fraction, int streak, double normal_draw) const {
  const double c = preset_.conf_base + preset_.conf_neighbor_gain * neighbor_fraction +
                   preset_.conf_streak_gain * std::min(streak, 3) / 3.0 + preset_.noise_scale * normal_draw;
  return std::clamp(c, 0.0, 1.0);
}

StepPrediction SyntheticDenoiser::predict(const DecodeState& state, std::span<const Position> query) {
  if (static_cast<std::int64_t>(preset_.ground_truth.size()) != state.gen_length)
    throw DenoiserError("synthetic preset ground truth length differs from the decode length");

  const double half = static_cast<double>(state.gen_length) / 2.0;
  const double decay = std::max(0.0, 1.0 - static_cast<double>(state.t) / half);
  const double flip = preset_.flip_prob * decay;

  StepPrediction pred;
  pred.positions.reserve(query.size());
  pred.ids.reserve(query.size());
  pred.confs.reserve(query.size());
  for (Position p : query) {
    if (p < 0 || p >= state.gen_length || !state.is_masked(p))
      throw DenoiserError("synthetic denoiser queried at non-masked position " + std::to_string(p));
    const TokenId truth = preset_.ground_truth[static_cast<std::size_t>(p)];
    TokenId id = truth;
    if (flip > 0.0 && keyed_uniform(preset_.seed, state.t, p, kFlip) < flip)
      id = draw_excluding(key(preset_.seed, state.t, p, kAltId), vocab_.size, truth, vocab_.mask_id);
    const double frac = decoded_neighbor_fraction(state, p, 2);
    const int streak = state.streak[static_cast<std::size_t>(p)];
    const double noise = preset_.noise_scale > 0.0 ? keyed_normal(preset_.seed, state.t, p) : 0.0;
    pred.positions.push_back(p);
    pred.ids.push_back(id);
    pred.confs.push_back(confidence(frac, streak, noise));
  }
  return pred;
}

}  // namespace stdec
