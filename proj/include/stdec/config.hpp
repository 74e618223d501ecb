#pragma once

// JSON (de)serialization for configuration objects and `key=value` overrides.

#include "stdec/decoder.hpp"
#include "stdec/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace stdec {

nlohmann::json to_json(const DecoderConfig& cfg);
/// Starts from `base` and applies the keys present in `j`. Unknown keys are
/// rejected.
DecoderConfig decoder_config_from_json(const nlohmann::json& j, DecoderConfig base = {});
DecoderConfig load_decoder_config(const std::filesystem::path& path, DecoderConfig base = {});

/// Applies `key=value` to a JSON object; the value is parsed as JSON when
/// possible and kept as a string otherwise.
void apply_override(nlohmann::json& target, std::string_view assignment);

nlohmann::json to_json(const PolicySpec& policy);
/// {"name": "fixed", "tau": 0.9} style objects; a bare string is also
/// accepted.
PolicySpec policy_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Vocab& vocab);

}  // namespace stdec
