#include "stdec/trace.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace stdec {

using nlohmann::json;

namespace {

[[noreturn]] void fail_step(std::int64_t step, const std::string& what) {
  throw ValidationError("step " + std::to_string(step) + ": " + what);
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

json header_to_json(const TraceHeader& h) {
  json j;
  j["format_version"] = h.format_version;
  j["prompt"] = h.prompt;
  j["L"] = h.gen_length;
  j["B"] = h.block_size;
  j["vocab_size"] = h.vocab_size;
  j["mask_id"] = h.mask_id;
  j["config"] = h.config;
  j["policy"] = h.policy;
  j["seed"] = h.seed;
  if (!h.meta.empty()) j["meta"] = h.meta;
  return j;
}

json step_to_json(const TraceStep& s) {
  json j;
  j["t"] = s.t;
  j["block"] = s.block;
  json preds = json::array();
  for (const auto& p : s.predictions) preds.push_back(json::array({p.pos, p.id, p.conf}));
  j["predictions"] = std::move(preds);
  if (s.thresholds) {
    json th = json::array();
    for (const auto& v : *s.thresholds) th.push_back(json::array({v.pos, v.value}));
    j["thresholds"] = std::move(th);
  }
  json com = json::array();
  for (const auto& c : s.committed) com.push_back(json::array({c.pos, c.id}));
  j["committed"] = std::move(com);
  j["fallback_used"] = s.fallback_used;
  j["budget_forced"] = s.budget_forced;
  return j;
}

namespace {

TraceHeader header_from_json(const json& j) {
  const std::string where = "header";
  if (!j.is_object()) throw ValidationError("header: not a JSON object");
  TraceHeader h;
  h.format_version = field<int>(j, "format_version", where);
  if (h.format_version != kTraceFormatVersion)
    throw ValidationError("header: unsupported format_version " + std::to_string(h.format_version) +
                          " (expected " + std::to_string(kTraceFormatVersion) + ")");
  h.prompt = field<std::vector<TokenId>>(j, "prompt", where);
  h.gen_length = field<std::int64_t>(j, "L", where);
  h.block_size = field<std::int64_t>(j, "B", where);
  h.vocab_size = field<std::int64_t>(j, "vocab_size", where);
  h.mask_id = field<TokenId>(j, "mask_id", where);
  h.config = j.value("config", json::object());
  h.policy = field<std::string>(j, "policy", where);
  h.seed = field<std::uint64_t>(j, "seed", where);
  h.meta = j.value("meta", json::object());
  return h;
}

TraceStep step_from_json(const json& j, std::int64_t index) {
  const std::string where = "step " + std::to_string(index);
  if (!j.is_object()) throw ValidationError(where + ": not a JSON object");
  TraceStep s;
  s.t = field<std::int64_t>(j, "t", where);
  s.block = field<std::int64_t>(j, "block", where);
  try {
    for (const auto& p : j.at("predictions")) {
      if (!p.is_array() || p.size() != 3) throw ValidationError(where + ": malformed prediction record");
      s.predictions.push_back({p[0].get<Position>(), p[1].get<TokenId>(), p[2].get<double>()});
    }
    if (auto it = j.find("thresholds"); it != j.end() && !it->is_null()) {
      std::vector<TraceThreshold> th;
      for (const auto& v : *it) {
        if (!v.is_array() || v.size() != 2) throw ValidationError(where + ": malformed threshold record");
        th.push_back({v[0].get<Position>(), v[1].get<double>()});
      }
      s.thresholds = std::move(th);
    }
    for (const auto& c : j.at("committed")) {
      if (!c.is_array() || c.size() != 2) throw ValidationError(where + ": malformed commit record");
      s.committed.push_back({c[0].get<Position>(), c[1].get<TokenId>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError(where + ": malformed record (" + e.what() + ")");
  }
  s.fallback_used = field<bool>(j, "fallback_used", where);
  s.budget_forced = j.value("budget_forced", false);
  return s;
}

}  // namespace

void validate_trace(const DecodeTrace& trace) {
  const TraceHeader& h = trace.header;
  if (h.format_version != kTraceFormatVersion)
    throw ValidationError("header: unsupported format_version " + std::to_string(h.format_version));
  if (h.gen_length < 1) throw ValidationError("header: L must be positive");
  if (h.block_size < 1 || h.gen_length % h.block_size != 0)
    throw ValidationError("header: B must divide L");
  if (h.vocab_size < 2 || h.mask_id < 0 || h.mask_id >= h.vocab_size)
    throw ValidationError("header: invalid vocabulary");
  if (h.prompt.empty()) throw ValidationError("header: empty prompt");
  for (TokenId id : h.prompt)
    if (id < 0 || id >= h.vocab_size || id == h.mask_id)
      throw ValidationError("header: invalid prompt token " + std::to_string(id));

  const bool full_window = h.config.is_object() && h.config.value("query_full_window", false);
  const std::int64_t L = h.gen_length;
  const std::int64_t B = h.block_size;
  std::vector<bool> decoded(static_cast<std::size_t>(L), false);
  std::int64_t remaining = L;

  auto active_block = [&] {
    for (std::int64_t p = 0; p < L; ++p)
      if (!decoded[static_cast<std::size_t>(p)]) return p / B;
    return L / B;
  };
  auto valid_id = [&](TokenId id) { return id >= 0 && id < h.vocab_size && id != h.mask_id; };

  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const TraceStep& s = trace.steps[k];
    const auto step = static_cast<std::int64_t>(k);
    if (s.t != step) fail_step(step, "t = " + std::to_string(s.t) + " out of sequence");
    if (remaining == 0) fail_step(step, "step recorded after every position was committed");
    const std::int64_t block = active_block();
    if (s.block != block)
      fail_step(step, "block " + std::to_string(s.block) + " is not the active block " + std::to_string(block));

    std::unordered_map<Position, TokenId> predicted;
    for (const auto& p : s.predictions) {
      if (p.pos < 0 || p.pos >= L) fail_step(step, "prediction position " + std::to_string(p.pos) + " out of range");
      if (decoded[static_cast<std::size_t>(p.pos)])
        fail_step(step, "committed position " + std::to_string(p.pos) + " reappears in predictions");
      if (!full_window && p.pos / B != block)
        fail_step(step, "prediction position " + std::to_string(p.pos) + " outside active block");
      if (!valid_id(p.id)) fail_step(step, "invalid predicted id " + std::to_string(p.id));
      if (!std::isfinite(p.conf) || p.conf < 0.0 || p.conf > 1.0)
        fail_step(step, "confidence out of [0, 1] at position " + std::to_string(p.pos));
      if (!predicted.emplace(p.pos, p.id).second)
        fail_step(step, "duplicate prediction for position " + std::to_string(p.pos));
    }
    if (s.thresholds) {
      std::set<Position> seen;
      for (const auto& v : *s.thresholds) {
        if (!predicted.contains(v.pos))
          fail_step(step, "threshold for unpredicted position " + std::to_string(v.pos));
        if (!std::isfinite(v.value) || v.value < 0.0 || v.value > 1.0)
          fail_step(step, "threshold out of [0, 1] at position " + std::to_string(v.pos));
        if (!seen.insert(v.pos).second) fail_step(step, "duplicate threshold for position " + std::to_string(v.pos));
      }
    }
    if (s.committed.empty()) fail_step(step, "empty commit set");
    for (const auto& c : s.committed) {
      if (c.pos < 0 || c.pos >= L) fail_step(step, "commit position " + std::to_string(c.pos) + " out of range");
      if (c.pos / B != block) fail_step(step, "commit position " + std::to_string(c.pos) + " outside active block");
      auto it = predicted.find(c.pos);
      if (it == predicted.end()) fail_step(step, "commit of unpredicted position " + std::to_string(c.pos));
      if (it->second != c.id) fail_step(step, "committed id differs from prediction at " + std::to_string(c.pos));
      if (decoded[static_cast<std::size_t>(c.pos)])
        fail_step(step, "position " + std::to_string(c.pos) + " committed twice");
      decoded[static_cast<std::size_t>(c.pos)] = true;
      --remaining;
    }
  }
  if (remaining != 0)
    throw ValidationError("trace incomplete: " + std::to_string(remaining) + " positions never committed");
}

void write_trace(const DecodeTrace& trace, std::ostream& out) {
  out << header_to_json(trace.header).dump() << '\n';
  for (const auto& s : trace.steps) out << step_to_json(s).dump() << '\n';
}

void write_trace(const DecodeTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_trace(trace, out);
}

DecodeTrace read_trace(std::istream& in) {
  DecodeTrace trace;
  std::string line;
  std::int64_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      const std::string where = have_header ? "step " + std::to_string(trace.steps.size()) : "header";
      throw ValidationError(where + ": malformed JSON on line " + std::to_string(line_no) + " (" + e.what() + ")");
    }
    if (!have_header) {
      trace.header = header_from_json(j);
      have_header = true;
    } else {
      trace.steps.push_back(step_from_json(j, static_cast<std::int64_t>(trace.steps.size())));
    }
  }
  if (!have_header) throw ValidationError("header: trace is empty");
  validate_trace(trace);
  return trace;
}

DecodeTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace " + path.string());
  return read_trace(in);
}

}  // namespace stdec
