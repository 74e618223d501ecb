#include "stdec/stdec.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

namespace stdec {

SmoothingKernel<double> kernel_for(const DecoderConfig& cfg) {
  return build_kernel<double>(cfg.kernel_kind, cfg.sigma, cfg.radius);
}

ThresholdMap initial_threshold_map(const DecodeState& state, const DecoderConfig& cfg) {
  ThresholdMap map;
  map.stage = ThresholdStage::initial;
  map.prompt_len = state.prompt_len;
  map.values.resize(state.window_size());
  for (Eigen::Index i = 0; i < map.values.size(); ++i)
    map.values(i) = state.masked[static_cast<std::size_t>(i)] ? cfg.tau_high : cfg.tau_low;
  return map;
}

ThresholdMap spatial_thresholds(const DecodeState& state, const DecoderConfig& cfg,
                                const SmoothingKernel<double>& kernel) {
  ThresholdMap map = initial_threshold_map(state, cfg);
  map.values = smooth(map.values, kernel, cfg.boundary_policy);
  map.stage = ThresholdStage::spatial;
  return map;
}

DecodeState update_streaks(DecodeState state, const StepPrediction& pred) {
  if (pred.ids.size() != pred.size() || pred.confs.size() != pred.size())
    throw LogicError("update_streaks: ragged prediction");
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const Position p = pred.positions[k];
    if (p < 0 || p >= state.gen_length || !state.is_masked(p))
      throw LogicError("update_streaks: prediction for unmasked position " + std::to_string(p));
    const auto g = static_cast<std::size_t>(p);
    const TokenId id = pred.ids[k];
    state.streak[g] = (state.prev_id[g] && *state.prev_id[g] == id) ? state.streak[g] + 1 : 0;
    state.prev_id[g] = id;
    state.gate_conf[g] = state.prev_conf[g];
    state.prev_conf[g] = pred.confs[k];
  }
  return state;
}

RelaxationVector relaxation_factors(const DecodeState& state, const DecoderConfig& cfg) {
  RelaxationVector r;
  r.factors = VectorXs::Ones(state.gen_length);
  for (Position p = 0; p < state.gen_length; ++p) {
    const auto g = static_cast<std::size_t>(p);
    if (state.streak[g] >= 2 && state.gate_conf[g] && *state.gate_conf[g] >= cfg.tau_low)
      r.factors(p) = cfg.alpha;
  }
  return r;
}

ThresholdMap adaptive_thresholds(const DecodeState& state, const DecoderConfig& cfg,
                                 const SmoothingKernel<double>& kernel) {
  ThresholdMap map = spatial_thresholds(state, cfg, kernel);
  RelaxationVector r = relaxation_factors(state, cfg);
  // Decoded positions keep their smoothed value; relaxation only applies to
  // masked ones.
  for (Position p = 0; p < state.gen_length; ++p)
    if (!state.is_masked(p)) r.factors(p) = 1.0;
  auto gen = map.values.tail(state.gen_length);
  gen = gen.cwiseProduct(r.factors);
  map.stage = ThresholdStage::spatio_temporal;
  return map;
}

std::vector<std::size_t> eligible_rows(const StepPrediction& pred,
                                       std::span<const Position> eligible) {
  std::unordered_map<Position, std::size_t> row;
  row.reserve(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) row.emplace(pred.positions[k], k);
  std::vector<std::size_t> out;
  out.reserve(eligible.size());
  for (Position p : eligible) {
    auto it = row.find(p);
    if (it == row.end())
      throw DenoiserError("prediction missing eligible position " + std::to_string(p));
    out.push_back(it->second);
  }
  return out;
}

std::size_t argmax_eligible(const StepPrediction& pred, std::span<const Position> eligible) {
  if (eligible.empty()) throw LogicError("no eligible positions");
  const auto rows = eligible_rows(pred, eligible);
  std::size_t best = rows.front();
  for (std::size_t r : rows) {
    const bool better = pred.confs[r] > pred.confs[best] ||
                        (pred.confs[r] == pred.confs[best] && pred.positions[r] < pred.positions[best]);
    if (better) best = r;
  }
  return best;
}

StepOutcome select_commit_set(const StepPrediction& pred, const ThresholdMap& thresholds,
                              std::span<const Position> eligible) {
  if (eligible.empty()) throw LogicError("select_commit_set: eligible set is empty");
  StepOutcome out;
  out.prediction = pred;
  out.thresholds = thresholds;

  std::vector<std::size_t> rows = eligible_rows(pred, eligible);
  std::sort(rows.begin(), rows.end(),
            [&](std::size_t a, std::size_t b) { return pred.positions[a] < pred.positions[b]; });
  for (std::size_t r : rows) {
    const Position p = pred.positions[r];
    if (pred.confs[r] >= thresholds.at(p)) {
      out.committed.push_back(p);
      out.committed_ids.push_back(pred.ids[r]);
    }
  }
  if (out.committed.empty()) {
    const std::size_t r = argmax_eligible(pred, eligible);
    out.committed.push_back(pred.positions[r]);
    out.committed_ids.push_back(pred.ids[r]);
    out.fallback_used = true;
  }
  return out;
}

}  // namespace stdec
