#include "stdec/cli.hpp"

#include "stdec/analyzer.hpp"
#include "stdec/bench.hpp"
#include "stdec/config.hpp"
#include "stdec/decoder.hpp"
#include "stdec/denoiser.hpp"
#include "stdec/smoothing.hpp"
#include "stdec/trace.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

namespace stdec::cli {

using nlohmann::json;

namespace {

struct DecodeArgs {
  std::string denoiser = "synthetic";
  std::string trace_in;
  std::string preset = "stable-95";
  std::string config;
  std::string trace_out;
  std::vector<std::string> overrides;
  std::string policy = "stdec";
  int k = 1;
  double tau = 0.9;
  double tau_anchor = 0.9;
  double tau_neighbor = 0.7;
  int neighbor_radius = 1;
  std::vector<TokenId> prompt{1, 2, 3, 4, 5, 6, 7, 8};
  std::int64_t vocab_size = 512;
  std::optional<TokenId> mask_id;
  std::optional<std::uint64_t> seed;
};

struct AnalyzeArgs {
  std::string trace;
  int radius = 2;
  int kmax = 8;
  std::string format = "json";
  bool no_prompt_neighbors = false;
};

struct KernelArgs {
  std::string kind = "gaussian";
  double sigma = 1.0;
  int radius = 2;
};

PolicySpec policy_from_args(const DecodeArgs& a) {
  json j{{"name", a.policy}};
  switch (parse_policy_kind(a.policy)) {
    case PolicyKind::top_k: j["k"] = a.k; break;
    case PolicyKind::fixed_threshold: j["tau"] = a.tau; break;
    case PolicyKind::anchor_dual:
      j["tau_anchor"] = a.tau_anchor;
      j["tau_neighbor"] = a.tau_neighbor;
      j["neighbor_radius"] = a.neighbor_radius;
      break;
    default: break;
  }
  return policy_from_json(j);
}

// defaults (or `base`) < config file < --set overrides < --seed
DecoderConfig resolve_config(const DecodeArgs& a, json base) {
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw ConfigError("cannot open config " + a.config);
    json file;
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config " + a.config + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    base.update(file);
  }
  for (const auto& o : a.overrides) apply_override(base, o);
  if (a.seed) base["seed"] = *a.seed;
  return decoder_config_from_json(base);
}

int do_decode(const DecodeArgs& a, std::ostream& out) {
  const PolicySpec policy = policy_from_args(a);
  std::unique_ptr<Denoiser> denoiser;
  DecoderConfig cfg;
  Vocab vocab;
  std::vector<TokenId> prompt = a.prompt;

  if (a.denoiser == "scripted") {
    if (a.trace_in.empty()) throw ConfigError("--trace-in is required for the scripted denoiser");
    auto trace = std::make_shared<const DecodeTrace>(read_trace(std::filesystem::path(a.trace_in)));
    const auto& h = trace->header;
    vocab = {h.vocab_size, h.mask_id};
    prompt = h.prompt;
    json base = to_json(DecoderConfig{});
    if (h.config.is_object()) base.update(h.config);
    base["gen_length"] = h.gen_length;
    base["block_size"] = h.block_size;
    base["seed"] = h.seed;
    cfg = resolve_config(a, base);
    if (cfg.gen_length != h.gen_length || cfg.block_size != h.block_size)
      throw ConfigError("scripted replay must keep the recorded L and B");
    denoiser = std::make_unique<ScriptedDenoiser>(std::move(trace));
  } else if (a.denoiser == "synthetic") {
    vocab = {a.vocab_size, a.mask_id.value_or(static_cast<TokenId>(a.vocab_size - 1))};
    cfg = resolve_config(a, to_json(DecoderConfig{}));
    denoiser = std::make_unique<SyntheticDenoiser>(resolve_preset(a.preset, cfg.gen_length, vocab, cfg.seed), vocab);
  } else {
    throw ConfigError("unknown denoiser '" + a.denoiser + "'");
  }

  DecodeResult result = decode(*denoiser, prompt, cfg, vocab, policy);
  if (!a.overrides.empty()) result.trace.header.meta["overrides"] = a.overrides;
  result.trace.header.meta["denoiser"] = a.denoiser == "synthetic" ? json(a.preset) : json("scripted");
  if (!a.trace_out.empty()) write_trace(result.trace, std::filesystem::path(a.trace_out));

  json summary{{"policy", policy.label()},
               {"steps_used", result.steps_used},
               {"nfe", result.nfe},
               {"tokens_per_step", static_cast<double>(cfg.gen_length) / static_cast<double>(result.steps_used)},
               {"budget_exhausted", result.budget_exhausted},
               {"tokens", result.tokens}};
  out << summary.dump() << '\n';
  return kOk;
}

int do_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const DecodeTrace trace = read_trace(std::filesystem::path(a.trace));
  const auto spatial = spatial_stability(trace, {a.radius, !a.no_prompt_neighbors});
  const auto temporal = temporal_stability(trace, a.kmax);
  if (a.format == "csv") {
    out << to_csv(spatial, temporal);
  } else if (a.format == "json") {
    out << json{{"spatial", to_json(spatial)}, {"temporal", to_json(temporal)}}.dump(2) << '\n';
  } else {
    throw ConfigError("--out must be csv or json");
  }
  return kOk;
}

int do_kernel_dump(const KernelArgs& a, std::ostream& out) {
  const auto k = build_kernel<double>(parse_kernel_kind(a.kind), a.sigma, a.radius);
  std::vector<double> w(k.weights.data(), k.weights.data() + k.weights.size());
  out << json{{"kind", a.kind}, {"sigma", a.sigma}, {"radius", a.radius}, {"weights", w}}.dump() << '\n';
  return kOk;
}

int do_bench(const std::string& matrix_path, const std::string& out_dir, std::ostream& out) {
  const BenchMatrix m = load_matrix(matrix_path);
  const auto results = run_matrix(m);
  write_bench_outputs(out_dir, results, m.baseline);
  out << summary_markdown(results, speedup_report(results, m.baseline), m.baseline);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatio-temporal adaptive-threshold decoding for masked-diffusion language models", "stdec"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "Increase diagnostic output");

  DecodeArgs dec;
  auto* decode_cmd = app.add_subcommand("decode", "Run a decode and optionally write its trace");
  decode_cmd->add_option("--denoiser", dec.denoiser, "scripted | synthetic")->check(CLI::IsMember({"scripted", "synthetic"}));
  decode_cmd->add_option("--trace-in", dec.trace_in, "Trace replayed by the scripted denoiser");
  decode_cmd->add_option("--preset", dec.preset, "Synthetic preset name or JSON file");
  decode_cmd->add_option("--config", dec.config, "Decoder config JSON");
  decode_cmd->add_option("--trace-out", dec.trace_out, "Where to write the decode trace");
  decode_cmd->add_option("--set", dec.overrides, "Config override key=value (repeatable)");
  decode_cmd->add_option("--policy", dec.policy, "stdec | top_k | fixed | half_step | anchor_dual")
      ->check(CLI::IsMember({"stdec", "top_k", "fixed", "half_step", "anchor_dual"}));
  decode_cmd->add_option("--k", dec.k, "top_k: tokens per step");
  decode_cmd->add_option("--tau", dec.tau, "fixed: global threshold");
  decode_cmd->add_option("--tau-anchor", dec.tau_anchor, "anchor_dual: anchor threshold");
  decode_cmd->add_option("--tau-neighbor", dec.tau_neighbor, "anchor_dual: neighbor threshold");
  decode_cmd->add_option("--neighbor-radius", dec.neighbor_radius, "anchor_dual: neighbor radius");
  decode_cmd->add_option("--prompt", dec.prompt, "Prompt token ids")->delimiter(',');
  decode_cmd->add_option("--vocab-size", dec.vocab_size, "Synthetic vocabulary size");
  decode_cmd->add_option("--mask-id", dec.mask_id, "Mask token id (default vocab-size - 1)");
  decode_cmd->add_option("--seed", dec.seed, "Denoiser seed");

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Spatial and temporal stability statistics of a trace");
  analyze_cmd->add_option("--trace", an.trace, "Trace file")->required();
  analyze_cmd->add_option("--radius", an.radius, "Neighborhood radius");
  analyze_cmd->add_option("--kmax", an.kmax, "Largest streak bucket");
  analyze_cmd->add_option("--out", an.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  analyze_cmd->add_flag("--no-prompt-neighbors", an.no_prompt_neighbors, "Do not count prompt tokens as decoded");

  std::string matrix_path, out_dir;
  auto* bench_cmd = app.add_subcommand("bench", "Run a policy x preset x seed matrix");
  bench_cmd->add_option("--matrix", matrix_path, "Matrix JSON")->required();
  bench_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

  KernelArgs ka;
  auto* kernel_cmd = app.add_subcommand("kernel-dump", "Print normalized smoothing weights as JSON");
  kernel_cmd->add_option("--kind", ka.kind, "gaussian | mean | triangular")
      ->check(CLI::IsMember({"gaussian", "mean", "triangular"}));
  kernel_cmd->add_option("--sigma", ka.sigma, "Gaussian sigma");
  kernel_cmd->add_option("--radius", ka.radius, "Kernel radius");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("trace-validate", "Validate a trace file");
  validate_cmd->add_option("path", validate_path, "Trace file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (!args.empty()) err << "error: " << e.what() << '\n';
    err << app.help();
    return kUsage;
  }

  try {
    if (*decode_cmd) return do_decode(dec, out);
    if (*analyze_cmd) return do_analyze(an, out);
    if (*bench_cmd) return do_bench(matrix_path, out_dir, out);
    if (*kernel_cmd) return do_kernel_dump(ka, out);
    if (*validate_cmd) {
      const DecodeTrace trace = read_trace(std::filesystem::path(validate_path));
      out << "ok: " << trace.steps.size() << " steps, L=" << trace.header.gen_length << '\n';
      return kOk;
    }
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  err << app.help();
  return kUsage;
}

}  // namespace stdec::cli
