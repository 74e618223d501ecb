#include "stdec/denoiser.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace stdec;

namespace {

const Vocab kVocab{512, 511};

DecoderConfig cfg_for(std::int64_t L, std::int64_t B) {
  DecoderConfig cfg;
  cfg.gen_length = L;
  cfg.max_steps = L;
  cfg.block_size = B;
  return cfg;
}

std::vector<Position> range(Position lo, Position hi) {
  std::vector<Position> v;
  for (Position p = lo; p < hi; ++p) v.push_back(p);
  return v;
}

}  // namespace

TEST_CASE("keyed draws are reproducible and roughly uniform / normal") {
  CHECK(keyed_uniform(1, 2, 3, 4) == keyed_uniform(1, 2, 3, 4));
  CHECK(keyed_uniform(1, 2, 3, 4) != keyed_uniform(1, 2, 3, 5));
  CHECK(keyed_uniform(1, 2, 3, 4) != keyed_uniform(2, 2, 3, 4));
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = keyed_uniform(9, i, i % 17, 1);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    su += u;
    const double z = keyed_normal(9, i, i % 17);
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(sn / n) < 0.03);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("ground truth avoids the mask id and depends on the seed") {
  const auto a = make_ground_truth(1, 64, Vocab{4, 2});
  for (TokenId id : a) {
    CHECK(id != 2);
    CHECK(id >= 0);
    CHECK(id < 4);
  }
  CHECK(make_ground_truth(1, 64, kVocab) == make_ground_truth(1, 64, kVocab));
  CHECK(make_ground_truth(1, 64, kVocab) != make_ground_truth(2, 64, kVocab));
}

TEST_CASE("built-in presets") {
  CHECK(builtin_preset_names() == std::vector<std::string>{"stable-95", "unstable", "degenerate-oracle"});
  const auto s = builtin_preset("stable-95", 64, kVocab);
  CHECK(s.flip_prob == 0.05);
  CHECK(s.ground_truth.size() == 64);
  CHECK(builtin_preset("stable-95", 64, kVocab, 3).ground_truth != s.ground_truth);
  CHECK_THROWS_AS(builtin_preset("nope", 64, kVocab), ConfigError);
  for (const auto& name : builtin_preset_names()) CHECK_NOTHROW(builtin_preset(name, 32, kVocab).validate(kVocab));
}

TEST_CASE("preset validation") {
  auto p = builtin_preset("unstable", 8, kVocab);
  p.conf_base = 0.9;
  CHECK_THROWS_AS(p.validate(kVocab), ValidationError);
  p = builtin_preset("unstable", 8, kVocab);
  p.flip_prob = 1.0;
  CHECK_THROWS_AS(p.validate(kVocab), ValidationError);
  p = builtin_preset("unstable", 8, kVocab);
  p.ground_truth[0] = 511;
  CHECK_THROWS_AS(p.validate(kVocab), ValidationError);
}

TEST_CASE("preset JSON round-trip and file resolution") {
  const auto p = builtin_preset("unstable", 16, kVocab);
  const auto back = preset_from_json(preset_to_json(p), 16, kVocab);
  CHECK(back.ground_truth == p.ground_truth);
  CHECK(back.noise_scale == p.noise_scale);
  CHECK_THROWS_AS(preset_from_json(preset_to_json(p), 8, kVocab), ValidationError);

  const auto path = std::filesystem::temp_directory_path() / "stdec_denoiser_test_preset.json";
  {
    std::ofstream f(path);
    f << R"({"name":"mine","flip_prob":0.1,"conf_base":0.5,"conf_neighbor_gain":0.2,)"
         R"("conf_streak_gain":0.2,"noise_scale":0.0,"seed":5})";
  }
  const auto r = resolve_preset(path.string(), 12, kVocab);
  CHECK(r.name == "mine");
  CHECK(r.ground_truth == make_ground_truth(5, 12, kVocab));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(resolve_preset("/nonexistent/preset.json", 12, kVocab), ConfigError);
}

TEST_CASE("confidence model") {
  auto p = builtin_preset("stable-95", 8, kVocab);
  SyntheticDenoiser d(p, kVocab);
  CHECK(d.confidence(0.0, 0, 0.0) == doctest::Approx(0.4));
  CHECK(d.confidence(1.0, 3, 0.0) == doctest::Approx(0.9));
  CHECK(d.confidence(1.0, 10, 0.0) == doctest::Approx(0.9));  // streak capped at 3
  CHECK(d.confidence(0.5, 1, 0.0) == doctest::Approx(0.4 + 0.15 + 0.2 / 3.0));
  CHECK(d.confidence(1.0, 3, 1e6) == 1.0);
  CHECK(d.confidence(0.0, 0, -1e6) == 0.0);
}

TEST_CASE("decoded neighbor fraction counts prompt positions") {
  const std::vector<TokenId> prompt{1};
  auto s = new_state(prompt, cfg_for(8, 8), kVocab);
  CHECK(decoded_neighbor_fraction(s, 0, 2) == doctest::Approx(1.0 / 3.0));
  CHECK(decoded_neighbor_fraction(s, 4, 2) == 0.0);
  const std::vector<Position> c{3, 5};
  const std::vector<TokenId> id{4, 4};
  s = commit(s, c, id);
  CHECK(decoded_neighbor_fraction(s, 4, 2) == 0.5);
  CHECK(decoded_neighbor_fraction(s, 7, 2) == 0.5);
}

TEST_CASE("synthetic denoiser is deterministic and never predicts the mask id") {
  const auto p = builtin_preset("unstable", 32, kVocab);
  SyntheticDenoiser a(p, kVocab), b(p, kVocab);
  const std::vector<TokenId> prompt{1, 2};
  const auto s = new_state(prompt, cfg_for(32, 32), kVocab);
  const auto q = range(0, 32);
  const auto pa = a.predict(s, q), pb = b.predict(s, q);
  CHECK(pa.ids == pb.ids);
  CHECK(pa.confs == pb.confs);
  int flips = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(pa.ids[i] != kVocab.mask_id);
    CHECK(pa.confs[i] >= 0.0);
    CHECK(pa.confs[i] <= 1.0);
    flips += pa.ids[i] != p.ground_truth[i];
  }
  CHECK(flips > 0);

  // a draw depends only on (seed, step, position): querying a subset changes nothing
  const std::vector<Position> sub{3, 17};
  const auto ps = a.predict(s, sub);
  CHECK(ps.ids[0] == pa.ids[3]);
  CHECK(ps.ids[1] == pa.ids[17]);
  CHECK(ps.confs[1] == pa.confs[17]);
}

TEST_CASE("flips stop after half the horizon") {
  const auto p = builtin_preset("unstable", 16, kVocab);
  SyntheticDenoiser d(p, kVocab);
  const std::vector<TokenId> prompt{1};
  auto s = new_state(prompt, cfg_for(16, 16), kVocab);
  s.t = 8;
  const auto pred = d.predict(s, range(0, 16));
  for (std::size_t i = 0; i < 16; ++i) CHECK(pred.ids[i] == p.ground_truth[i]);
}

TEST_CASE("degenerate oracle predicts the truth at full confidence") {
  const auto p = builtin_preset("degenerate-oracle", 16, kVocab);
  SyntheticDenoiser d(p, kVocab);
  const std::vector<TokenId> prompt{1};
  const auto s = new_state(prompt, cfg_for(16, 16), kVocab);
  const auto pred = d.predict(s, range(0, 16));
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(pred.ids[i] == p.ground_truth[i]);
    CHECK(pred.confs[i] == 1.0);
  }
}

TEST_CASE("synthetic denoiser rejects decoded positions and mismatched lengths") {
  SyntheticDenoiser d(builtin_preset("stable-95", 8, kVocab), kVocab);
  const std::vector<TokenId> prompt{1};
  auto s = new_state(prompt, cfg_for(8, 8), kVocab);
  const std::vector<Position> c{2};
  const std::vector<TokenId> id{4};
  s = commit(s, c, id);
  CHECK_THROWS_AS(d.predict(s, c), DenoiserError);
  const auto s16 = new_state(prompt, cfg_for(16, 16), kVocab);
  CHECK_THROWS_AS(d.predict(s16, range(0, 2)), DenoiserError);
}

TEST_CASE("scripted denoiser replays the trace") {
  auto tr = std::make_shared<const DecodeTrace>(fixtures::five_step_trace());
  ScriptedDenoiser d(tr);
  CHECK(d.vocab_size() == 10);
  const Vocab v{10, 9};
  const std::vector<TokenId> prompt{1, 2};
  auto s = new_state(prompt, cfg_for(6, 6), v);
  const auto pred = d.predict(s, range(0, 6));
  CHECK(pred.ids == std::vector<TokenId>{3, 4, 5, 6, 7, 8});
  CHECK(pred.confs[5] == 0.4);

  s.t = 4;
  const std::vector<Position> missing{0};
  CHECK_THROWS_AS(d.predict(s, missing), ReplayError);
  s.t = 5;
  const std::vector<Position> any{4};
  CHECK_THROWS_AS(d.predict(s, any), ReplayError);
}
