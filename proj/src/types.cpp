#include "stdec/types.hpp"

#include <cmath>
#include <string>

namespace stdec {

void Vocab::validate() const {
  if (size < 2) throw ConfigError("vocab size must be at least 2");
  if (mask_id < 0 || mask_id >= size) throw ConfigError("mask_id must lie inside the vocabulary");
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::mean: return "mean";
    case KernelKind::triangular: return "triangular";
  }
  return "?";
}

std::string_view to_string(BoundaryPolicy policy) {
  switch (policy) {
    case BoundaryPolicy::replicate: return "replicate";
    case BoundaryPolicy::reflect: return "reflect";
  }
  return "?";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "mean") return KernelKind::mean;
  if (name == "triangular") return KernelKind::triangular;
  throw ConfigError("unknown kernel kind '" + std::string(name) + "'");
}

BoundaryPolicy parse_boundary_policy(std::string_view name) {
  if (name == "replicate") return BoundaryPolicy::replicate;
  if (name == "reflect") return BoundaryPolicy::reflect;
  throw ConfigError("unknown boundary policy '" + std::string(name) + "'");
}

void DecoderConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(tau_high) || tau_high <= 0.0 || tau_high > 1.0)
    throw ConfigError("tau_high must be in (0, 1]");
  if (!finite(tau_low) || tau_low < 0.0 || tau_low >= tau_high)
    throw ConfigError("tau_low must be in [0, tau_high)");
  if (!finite(alpha) || alpha <= 0.0 || alpha > 1.0) throw ConfigError("alpha must be in (0, 1]");
  if (!finite(sigma) || sigma <= 0.0) throw ConfigError("sigma must be positive");
  if (radius < 1) throw ConfigError("radius must be at least 1");
  if (gen_length < 1) throw ConfigError("gen_length must be positive");
  if (max_steps < 1) throw ConfigError("max_steps must be positive");
  if (block_size < 1 || block_size > gen_length || gen_length % block_size != 0)
    throw ConfigError("block_size must divide gen_length");
}

}  // namespace stdec
