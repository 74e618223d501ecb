#include "stdec/config.hpp"

#include <fstream>

namespace stdec {

using nlohmann::json;

json to_json(const DecoderConfig& c) {
  return {{"tau_high", c.tau_high},
          {"tau_low", c.tau_low},
          {"alpha", c.alpha},
          {"kernel", std::string(to_string(c.kernel_kind))},
          {"sigma", c.sigma},
          {"radius", c.radius},
          {"gen_length", c.gen_length},
          {"max_steps", c.max_steps},
          {"block_size", c.block_size},
          {"boundary", std::string(to_string(c.boundary_policy))},
          {"seed", c.seed},
          {"query_full_window", c.query_full_window}};
}

DecoderConfig decoder_config_from_json(const json& j, DecoderConfig c) {
  if (!j.is_object()) throw ConfigError("decoder config must be a JSON object");
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "tau_high") c.tau_high = v.get<double>();
      else if (k == "tau_low") c.tau_low = v.get<double>();
      else if (k == "alpha") c.alpha = v.get<double>();
      else if (k == "kernel" || k == "kernel_kind") c.kernel_kind = parse_kernel_kind(v.get<std::string>());
      else if (k == "sigma") c.sigma = v.get<double>();
      else if (k == "radius") c.radius = v.get<int>();
      else if (k == "gen_length" || k == "L") c.gen_length = v.get<std::int64_t>();
      else if (k == "max_steps" || k == "T") c.max_steps = v.get<std::int64_t>();
      else if (k == "block_size" || k == "B") c.block_size = v.get<std::int64_t>();
      else if (k == "boundary" || k == "boundary_policy") c.boundary_policy = parse_boundary_policy(v.get<std::string>());
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "query_full_window") c.query_full_window = v.get<bool>();
      else throw ConfigError("unknown decoder config key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("decoder config: ") + e.what());
  }
  c.validate();
  return c;
}

DecoderConfig load_decoder_config(const std::filesystem::path& path, DecoderConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return decoder_config_from_json(j, base);
}

void apply_override(json& target, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;
  target[key] = std::move(value);
}

json to_json(const PolicySpec& p) {
  json j{{"name", p.name()}};
  switch (p.kind) {
    case PolicyKind::top_k: j["k"] = p.baseline.k; break;
    case PolicyKind::fixed_threshold: j["tau"] = p.baseline.tau; break;
    case PolicyKind::anchor_dual:
      j["tau_anchor"] = p.baseline.tau_anchor;
      j["tau_neighbor"] = p.baseline.tau_neighbor;
      j["neighbor_radius"] = p.baseline.neighbor_radius;
      break;
    default: break;
  }
  return j;
}

PolicySpec policy_from_json(const json& j) {
  PolicySpec p;
  try {
    const std::string name = j.is_string() ? j.get<std::string>() : j.at("name").get<std::string>();
    p.kind = parse_policy_kind(name);
    switch (p.kind) {
      case PolicyKind::stdec: break;
      case PolicyKind::top_k: p.baseline.kind = BaselineKind::top_k; break;
      case PolicyKind::fixed_threshold: p.baseline.kind = BaselineKind::fixed_threshold; break;
      case PolicyKind::half_step: p.baseline.kind = BaselineKind::half_step; break;
      case PolicyKind::anchor_dual: p.baseline.kind = BaselineKind::anchor_dual; break;
    }
    if (j.is_object()) {
      for (const auto& [k, v] : j.items()) {
        if (k == "name") continue;
        if (k == "k") p.baseline.k = v.get<int>();
        else if (k == "tau") p.baseline.tau = v.get<double>();
        else if (k == "tau_anchor") p.baseline.tau_anchor = v.get<double>();
        else if (k == "tau_neighbor") p.baseline.tau_neighbor = v.get<double>();
        else if (k == "neighbor_radius") p.baseline.neighbor_radius = v.get<int>();
        else throw ConfigError("unknown policy key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("policy: ") + e.what());
  }
  p.validate();
  return p;
}

json to_json(const Vocab& v) { return {{"size", v.size}, {"mask_id", v.mask_id}}; }

}  // namespace stdec
