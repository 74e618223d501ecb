#include "stdec/baselines.hpp"

#include "stdec/stdec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stdec {

void BaselineConfig::validate() const {
  auto unit = [](double v) { return std::isfinite(v) && v > 0.0 && v <= 1.0; };
  switch (kind) {
    case BaselineKind::top_k:
      if (k < 1) throw ConfigError("top_k requires k >= 1");
      break;
    case BaselineKind::fixed_threshold:
      // tau = 0 is allowed: it commits every eligible position.
      if (!std::isfinite(tau) || tau < 0.0 || tau > 1.0) throw ConfigError("tau must be in [0, 1]");
      break;
    case BaselineKind::half_step:
      break;
    case BaselineKind::anchor_dual:
      if (!unit(tau_anchor) || !unit(tau_neighbor)) throw ConfigError("anchor thresholds must be in (0, 1]");
      if (tau_neighbor > tau_anchor) throw ConfigError("tau_neighbor must not exceed tau_anchor");
      if (neighbor_radius < 1) throw ConfigError("neighbor_radius must be at least 1");
      break;
  }
}

namespace {

CommitSelection fallback(const StepPrediction& pred, std::span<const Position> eligible) {
  return {{pred.positions[argmax_eligible(pred, eligible)]}, true};
}

}  // namespace

CommitSelection topk_commit(const StepPrediction& pred, int k, std::span<const Position> eligible) {
  if (eligible.empty()) throw LogicError("topk_commit: eligible set is empty");
  std::vector<std::size_t> rows = eligible_rows(pred, eligible);
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    if (pred.confs[a] != pred.confs[b]) return pred.confs[a] > pred.confs[b];
    return pred.positions[a] < pred.positions[b];
  });
  rows.resize(std::min<std::size_t>(rows.size(), static_cast<std::size_t>(std::max(k, 0))));
  CommitSelection out;
  for (std::size_t r : rows) out.positions.push_back(pred.positions[r]);
  std::sort(out.positions.begin(), out.positions.end());
  return out;
}

CommitSelection fixed_threshold_commit(const StepPrediction& pred, double tau,
                                       std::span<const Position> eligible) {
  if (eligible.empty()) throw LogicError("fixed_threshold_commit: eligible set is empty");
  CommitSelection out;
  for (std::size_t r : eligible_rows(pred, eligible))
    if (pred.confs[r] >= tau) out.positions.push_back(pred.positions[r]);
  if (out.positions.empty()) return fallback(pred, eligible);
  std::sort(out.positions.begin(), out.positions.end());
  return out;
}

CommitSelection anchor_dual_commit(const StepPrediction& pred, const BaselineConfig& cfg,
                                   std::span<const Position> eligible) {
  if (eligible.empty()) throw LogicError("anchor_dual_commit: eligible set is empty");
  const auto rows = eligible_rows(pred, eligible);

  std::vector<Position> anchors;
  for (std::size_t r : rows)
    if (pred.confs[r] >= cfg.tau_anchor) anchors.push_back(pred.positions[r]);
  std::sort(anchors.begin(), anchors.end());

  auto near_anchor = [&](Position p) {
    auto it = std::lower_bound(anchors.begin(), anchors.end(), p);
    Position best = std::numeric_limits<Position>::max();
    if (it != anchors.end()) best = *it - p;
    if (it != anchors.begin()) best = std::min(best, p - *std::prev(it));
    return best <= cfg.neighbor_radius;
  };

  CommitSelection out;
  for (std::size_t r : rows) {
    const Position p = pred.positions[r];
    const double c = pred.confs[r];
    if (c >= cfg.tau_anchor || (c >= cfg.tau_neighbor && !anchors.empty() && near_anchor(p)))
      out.positions.push_back(p);
  }
  if (out.positions.empty()) return fallback(pred, eligible);
  std::sort(out.positions.begin(), out.positions.end());
  return out;
}

int half_step_k(std::int64_t gen_length, std::int64_t max_steps) {
  if (max_steps < 2 || max_steps % 2 != 0) throw ConfigError("half_step requires an even step budget");
  return static_cast<int>((2 * gen_length + max_steps - 1) / max_steps);
}

CommitSelection half_step_commit(const StepPrediction& pred, std::span<const Position> eligible,
                                 std::int64_t gen_length, std::int64_t max_steps) {
  return topk_commit(pred, half_step_k(gen_length, max_steps), eligible);
}

}  // namespace stdec
