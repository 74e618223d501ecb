#include "stdec/cli.hpp"
#include "stdec/trace.hpp"

#include "fixtures.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stdec;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path tmp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("no arguments is a usage error") {
  const auto r = cli_run({});
  CHECK(r.code == 1);
  CHECK(r.err.find("decode") != std::string::npos);
  CHECK(cli_run({"frobnicate"}).code == 1);
  CHECK(cli_run({"decode", "--policy", "greedy"}).code == 1);
}

TEST_CASE("kernel-dump prints normalized weights") {
  const auto r = cli_run({"kernel-dump", "--kind", "gaussian", "--sigma", "1", "--radius", "2"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  REQUIRE(j["weights"].size() == 5);
  CHECK(j["weights"][2].get<double>() == doctest::Approx(0.4026199468942474).epsilon(1e-12));
  CHECK(cli_run({"kernel-dump", "--radius", "0"}).code == 2);
}

TEST_CASE("trace-validate reports the offending step") {
  auto tr = fixtures::five_step_trace();
  const auto good = tmp("stdec_cli_good.dtrace.jsonl");
  write_trace(tr, good);
  const auto ok = cli_run({"trace-validate", good.string()});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("5 steps") != std::string::npos);

  // write an invalid step by hand: step 3 commits a position it never predicted
  std::ostringstream os;
  os << header_to_json(tr.header).dump() << '\n';
  tr.steps[3].committed = {{0, 3}};
  for (const auto& s : tr.steps) os << step_to_json(s).dump() << '\n';
  const auto bad = tmp("stdec_cli_bad.dtrace.jsonl");
  std::ofstream(bad) << os.str();
  const auto r = cli_run({"trace-validate", bad.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("step 3") != std::string::npos);

  CHECK(cli_run({"trace-validate", "/nonexistent.jsonl"}).code == 2);
  std::filesystem::remove(good);
  std::filesystem::remove(bad);
}

TEST_CASE("decode, replay and analyze through the CLI") {
  const auto trace = tmp("stdec_cli_decode.dtrace.jsonl");
  const auto r = cli_run({"decode", "--preset", "stable-95", "--set", "gen_length=64", "--set", "max_steps=64",
                          "--set", "block_size=32", "--seed", "7", "--trace-out", trace.string()});
  REQUIRE(r.code == 0);
  const auto summary = json::parse(r.out);
  CHECK(summary["tokens"].size() == 64);
  CHECK(summary["policy"] == "stdec");

  const auto recorded = read_trace(trace);
  CHECK(recorded.header.seed == 7);
  CHECK(recorded.header.gen_length == 64);
  CHECK(recorded.header.meta["overrides"].size() == 3);

  const auto replay = cli_run({"decode", "--denoiser", "scripted", "--trace-in", trace.string()});
  REQUIRE(replay.code == 0);
  CHECK(json::parse(replay.out)["tokens"] == summary["tokens"]);

  const auto csv = cli_run({"analyze", "--trace", trace.string(), "--out", "csv", "--kmax", "4"});
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("table,index,fraction,count,mean_first_stable_conf,mean_commit_conf,gap\n", 0) == 0);
  CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 1 + 5 + 5);

  const auto js = cli_run({"analyze", "--trace", trace.string()});
  REQUIRE(js.code == 0);
  CHECK(json::parse(js.out)["temporal"]["rows"].size() == 9);
  std::filesystem::remove(trace);
}

TEST_CASE("config precedence: file < --set < --seed") {
  const auto cfg = tmp("stdec_cli_cfg.json");
  std::ofstream(cfg) << R"({"gen_length": 32, "max_steps": 32, "block_size": 16, "seed": 1, "tau_high": 0.8})";
  const auto trace = tmp("stdec_cli_prec.dtrace.jsonl");
  const auto r = cli_run({"decode", "--config", cfg.string(), "--set", "tau_high=0.95", "--set", "seed=2", "--seed",
                          "3", "--trace-out", trace.string()});
  REQUIRE(r.code == 0);
  const auto tr = read_trace(trace);
  CHECK(tr.header.config["tau_high"] == 0.95);
  CHECK(tr.header.config["gen_length"] == 32);
  CHECK(tr.header.seed == 3);
  std::filesystem::remove(cfg);
  std::filesystem::remove(trace);
}

TEST_CASE("bad configuration exits with 2") {
  CHECK(cli_run({"decode", "--set", "tau_low=0.95"}).code == 2);
  CHECK(cli_run({"decode", "--set", "block_size=7"}).code == 2);
  CHECK(cli_run({"decode", "--set", "bogus=1"}).code == 2);
  CHECK(cli_run({"decode", "--preset", "no-such-preset"}).code == 2);
  CHECK(cli_run({"decode", "--denoiser", "scripted"}).code == 2);
}

TEST_CASE("bench writes its outputs") {
  const auto matrix = tmp("stdec_cli_matrix.json");
  std::ofstream(matrix) << R"js({"policies": ["stdec", {"name": "top_k", "k": 1}], "presets": ["stable-95"],
                               "seeds": [0, 1], "decoder": {"L": 32, "T": 32, "B": 16}, "baseline": "top_k(k=1)"})js";
  const auto dir = tmp("stdec_cli_bench");
  std::filesystem::remove_all(dir);
  const auto r = cli_run({"bench", "--matrix", matrix.string(), "--out-dir", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("| stdec | stable-95 |") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "speedup.csv"));
  std::filesystem::remove_all(dir);
  std::filesystem::remove(matrix);
}
