#include "stdec/bench.hpp"

#include "stdec/config.hpp"
#include "stdec/denoiser.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

namespace stdec {

using nlohmann::json;

void BenchMatrix::validate() const {
  if (policies.empty()) throw ConfigError("bench: at least one policy is required");
  if (presets.empty()) throw ConfigError("bench: at least one preset is required");
  if (seeds.empty()) throw ConfigError("bench: at least one seed is required");
  if (workers < 1) throw ConfigError("bench: workers must be positive");
  cfg.validate();
  vocab.validate();
  for (const auto& p : policies) p.validate();
}

BenchMatrix matrix_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("bench matrix must be a JSON object");
  BenchMatrix m;
  try {
    if (auto it = j.find("vocab"); it != j.end()) {
      m.vocab.size = it->at("size").get<std::int64_t>();
      m.vocab.mask_id = it->value("mask_id", static_cast<TokenId>(m.vocab.size - 1));
    }
    if (auto it = j.find("decoder"); it != j.end()) m.cfg = decoder_config_from_json(*it, m.cfg);
    for (const auto& p : j.at("policies")) m.policies.push_back(policy_from_json(p));
    m.presets = j.at("presets").get<std::vector<std::string>>();
    const json& seeds = j.at("seeds");
    if (seeds.is_array()) {
      m.seeds = seeds.get<std::vector<std::uint64_t>>();
    } else {
      const auto start = seeds.value("start", std::uint64_t{0});
      const auto count = seeds.at("count").get<std::uint64_t>();
      for (std::uint64_t s = 0; s < count; ++s) m.seeds.push_back(start + s);
    }
    if (j.contains("prompt")) m.prompt = j.at("prompt").get<std::vector<TokenId>>();
    if (m.policies.empty()) throw ConfigError("bench: at least one policy is required");
    m.baseline = j.value("baseline", m.policies.front().label());
    m.workers = j.value("workers", 1);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bench matrix: ") + e.what());
  }
  if (const char* env = std::getenv("STDEC_BENCH_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) m.workers = w;
  }
  m.validate();
  return m;
}

BenchMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bench matrix " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("bench matrix " + path.string() + ": " + e.what());
  }
  return matrix_from_json(j);
}

BenchResult run_cell(const BenchMatrix& m, const PolicySpec& policy, const std::string& preset_name,
                     std::uint64_t seed) {
  BenchResult r;
  r.policy = policy.label();
  r.preset = preset_name;
  r.seed = seed;
  try {
    DecoderConfig cfg = m.cfg;
    cfg.seed = seed;
    SyntheticDenoiser denoiser(resolve_preset(preset_name, cfg.gen_length, m.vocab, seed), m.vocab);

    const auto start = std::chrono::steady_clock::now();
    const DecodeResult out = decode(denoiser, m.prompt, cfg, m.vocab, policy);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    r.steps_used = out.steps_used;
    r.nfe = out.nfe;
    r.budget_exhausted = out.budget_exhausted;
    std::int64_t fallbacks = 0;
    const double lo = cfg.tau_low * cfg.alpha;
    for (const auto& step : out.trace.steps) {
      r.committed_total += static_cast<std::int64_t>(step.committed.size());
      if (step.committed.empty()) ++r.progress_violations;
      if (step.fallback_used) ++fallbacks;
      if (step.thresholds)
        for (const auto& th : *step.thresholds)
          if (th.value < lo || th.value > cfg.tau_high) ++r.threshold_violations;
    }
    if (r.steps_used > cfg.gen_length) ++r.progress_violations;
    r.tokens_per_step = static_cast<double>(cfg.gen_length) / static_cast<double>(r.steps_used);
    r.tps = r.wall_seconds > 0.0 ? static_cast<double>(cfg.gen_length) / r.wall_seconds : 0.0;
    r.fallback_rate = static_cast<double>(fallbacks) / static_cast<double>(r.steps_used);

    const auto& truth = denoiser.preset().ground_truth;
    std::int64_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += (out.tokens[i] == truth[i]);
    r.score = static_cast<double>(hits) / static_cast<double>(truth.size());
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

std::vector<BenchResult> run_matrix(const BenchMatrix& m) {
  m.validate();
  struct Cell {
    const PolicySpec* policy;
    const std::string* preset;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& p : m.policies)
    for (const auto& pr : m.presets)
      for (std::uint64_t s : m.seeds) cells.push_back({&p, &pr, s});

  std::vector<BenchResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++)
      results[i] = run_cell(m, *cells[i].policy, *cells[i].preset, cells[i].seed);
  };
  const int n = std::min<int>(m.workers, static_cast<int>(cells.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n; ++w) pool.emplace_back(worker);
  }

  std::sort(results.begin(), results.end(), [](const BenchResult& a, const BenchResult& b) {
    return std::tie(a.policy, a.preset, a.seed) < std::tie(b.policy, b.preset, b.seed);
  });
  return results;
}

std::vector<SpeedupRow> speedup_report(const std::vector<BenchResult>& results,
                                       const std::string& baseline_policy) {
  std::map<std::pair<std::string, std::uint64_t>, const BenchResult*> base;
  for (const auto& r : results)
    if (r.policy == baseline_policy) base[{r.preset, r.seed}] = &r;

  struct Acc {
    std::int64_t n = 0, scored = 0;
    double log_steps = 0.0, log_tps = 0.0, tps_cells = 0.0, tokens_per_step = 0.0, score = 0.0, delta = 0.0;
  };
  std::map<std::pair<std::string, std::string>, Acc> acc;
  for (const auto& r : results) {
    if (r.error) continue;
    auto it = base.find({r.preset, r.seed});
    if (it == base.end() || it->second->error)
      throw ValidationError("speedup report: missing baseline '" + baseline_policy + "' cell for preset " +
                            r.preset + ", seed " + std::to_string(r.seed));
    const BenchResult& b = *it->second;
    Acc& a = acc[{r.policy, r.preset}];
    ++a.n;
    a.log_steps += std::log(static_cast<double>(b.steps_used) / static_cast<double>(r.steps_used));
    if (r.tps > 0.0 && b.tps > 0.0) {
      a.log_tps += std::log(r.tps / b.tps);
      a.tps_cells += 1.0;
    }
    a.tokens_per_step += r.tokens_per_step;
    if (r.score && b.score) {
      ++a.scored;
      a.score += *r.score;
      a.delta += *r.score - *b.score;
    }
  }

  std::vector<SpeedupRow> rows;
  for (const auto& [key, a] : acc) {
    SpeedupRow row;
    row.policy = key.first;
    row.preset = key.second;
    row.cells = a.n;
    row.steps_speedup = std::exp(a.log_steps / static_cast<double>(a.n));
    row.tps_speedup = a.tps_cells > 0.0 ? std::exp(a.log_tps / a.tps_cells) : 1.0;
    row.mean_tokens_per_step = a.tokens_per_step / static_cast<double>(a.n);
    if (a.scored > 0) {
      row.mean_score = a.score / static_cast<double>(a.scored);
      row.score_delta = a.delta / static_cast<double>(a.scored);
    }
    rows.push_back(row);
  }
  return rows;
}

json to_json(const BenchResult& r, bool include_wall_clock) {
  json j{{"policy", r.policy},
         {"preset", r.preset},
         {"seed", r.seed},
         {"steps_used", r.steps_used},
         {"nfe", r.nfe},
         {"committed_total", r.committed_total},
         {"tokens_per_step", r.tokens_per_step},
         {"score", r.score ? json(*r.score) : json(nullptr)},
         {"fallback_rate", r.fallback_rate},
         {"budget_exhausted", r.budget_exhausted},
         {"progress_violations", r.progress_violations},
         {"threshold_violations", r.threshold_violations},
         {"error", r.error ? json(*r.error) : json(nullptr)}};
  if (include_wall_clock) {
    j["wall_seconds"] = r.wall_seconds;
    j["tps"] = r.tps;
  }
  return j;
}

json results_to_json(const std::vector<BenchResult>& results, bool include_wall_clock) {
  json arr = json::array();
  for (const auto& r : results) arr.push_back(to_json(r, include_wall_clock));
  return arr;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::string results_to_csv(const std::vector<BenchResult>& results) {
  std::ostringstream os;
  os << "policy,preset,seed,steps_used,nfe,committed_total,tokens_per_step,wall_seconds,tps,score,"
        "fallback_rate,budget_exhausted,progress_violations,threshold_violations,error\n";
  for (const auto& r : results) {
    os << csv_escape(r.policy) << ',' << csv_escape(r.preset) << ',' << r.seed << ',' << r.steps_used << ','
       << r.nfe << ',' << r.committed_total << ',' << num(r.tokens_per_step) << ',' << num(r.wall_seconds) << ','
       << num(r.tps) << ',' << (r.score ? num(*r.score) : "") << ',' << num(r.fallback_rate) << ','
       << (r.budget_exhausted ? 1 : 0) << ',' << r.progress_violations << ',' << r.threshold_violations << ','
       << csv_escape(r.error.value_or("")) << '\n';
  }
  return os.str();
}

json report_to_json(const std::vector<SpeedupRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"policy", r.policy},
                   {"preset", r.preset},
                   {"cells", r.cells},
                   {"steps_speedup", r.steps_speedup},
                   {"tps_speedup", r.tps_speedup},
                   {"mean_tokens_per_step", r.mean_tokens_per_step},
                   {"mean_score", r.mean_score ? json(*r.mean_score) : json(nullptr)},
                   {"score_delta", r.score_delta ? json(*r.score_delta) : json(nullptr)}});
  return arr;
}

std::string report_to_csv(const std::vector<SpeedupRow>& rows) {
  std::ostringstream os;
  os << "policy,preset,cells,steps_speedup,tps_speedup,mean_tokens_per_step,mean_score,score_delta\n";
  for (const auto& r : rows)
    os << csv_escape(r.policy) << ',' << csv_escape(r.preset) << ',' << r.cells << ',' << num(r.steps_speedup)
       << ',' << num(r.tps_speedup) << ',' << num(r.mean_tokens_per_step) << ','
       << (r.mean_score ? num(*r.mean_score) : "") << ',' << (r.score_delta ? num(*r.score_delta) : "") << '\n';
  return os.str();
}

std::string summary_markdown(const std::vector<BenchResult>& results, const std::vector<SpeedupRow>& rows,
                             const std::string& baseline_policy) {
  std::int64_t failed = 0;
  for (const auto& r : results) failed += r.error.has_value();
  std::ostringstream os;
  char buf[256];
  os << "# Benchmark summary\n\n";
  os << "Baseline: `" << baseline_policy << "`. " << results.size() << " cells, " << failed << " failed.\n\n";
  os << "Step speedup is the paired geometric mean of baseline steps / policy steps. TPS comes from the "
        "synthetic denoiser and is not comparable to real-model throughput.\n\n";
  os << "| Policy | Preset | Cells | Tokens/step | Step speedup | TPS speedup | Score | Score delta |\n";
  os << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "| %s | %s | %lld | %.3f | %.2fx | %.2fx | %s | %s |\n", r.policy.c_str(),
                  r.preset.c_str(), static_cast<long long>(r.cells), r.mean_tokens_per_step, r.steps_speedup,
                  r.tps_speedup, r.mean_score ? num(*r.mean_score).substr(0, 6).c_str() : "-",
                  r.score_delta ? num(*r.score_delta).substr(0, 7).c_str() : "-");
    os << buf;
  }
  return os.str();
}

void write_bench_outputs(const std::filesystem::path& dir, const std::vector<BenchResult>& results,
                         const std::string& baseline_policy) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
  };
  const auto rows = speedup_report(results, baseline_policy);
  write("results.json", results_to_json(results).dump(2) + "\n");
  write("results.csv", results_to_csv(results));
  write("speedup.json", report_to_json(rows).dump(2) + "\n");
  write("speedup.csv", report_to_csv(rows));
  write("summary.md", summary_markdown(results, rows, baseline_policy));
}

}  // namespace stdec
