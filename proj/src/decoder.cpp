#include "stdec/decoder.hpp"

#include "stdec/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace stdec {

PolicySpec PolicySpec::top_k(int k) {
  PolicySpec p;
  p.kind = PolicyKind::top_k;
  p.baseline.kind = BaselineKind::top_k;
  p.baseline.k = k;
  return p;
}

PolicySpec PolicySpec::fixed(double tau) {
  PolicySpec p;
  p.kind = PolicyKind::fixed_threshold;
  p.baseline.kind = BaselineKind::fixed_threshold;
  p.baseline.tau = tau;
  return p;
}

PolicySpec PolicySpec::half_step() {
  PolicySpec p;
  p.kind = PolicyKind::half_step;
  p.baseline.kind = BaselineKind::half_step;
  return p;
}

PolicySpec PolicySpec::anchor_dual(double tau_anchor, double tau_neighbor, int radius) {
  PolicySpec p;
  p.kind = PolicyKind::anchor_dual;
  p.baseline.kind = BaselineKind::anchor_dual;
  p.baseline.tau_anchor = tau_anchor;
  p.baseline.tau_neighbor = tau_neighbor;
  p.baseline.neighbor_radius = radius;
  return p;
}

std::string PolicySpec::name() const {
  switch (kind) {
    case PolicyKind::stdec: return "stdec";
    case PolicyKind::top_k: return "top_k";
    case PolicyKind::fixed_threshold: return "fixed";
    case PolicyKind::half_step: return "half_step";
    case PolicyKind::anchor_dual: return "anchor_dual";
  }
  return "?";
}

std::string PolicySpec::label() const {
  std::ostringstream os;
  os << name();
  switch (kind) {
    case PolicyKind::top_k: os << "(k=" << baseline.k << ")"; break;
    case PolicyKind::fixed_threshold: os << "(tau=" << baseline.tau << ")"; break;
    case PolicyKind::anchor_dual:
      os << "(anchor=" << baseline.tau_anchor << ",neighbor=" << baseline.tau_neighbor
         << ",radius=" << baseline.neighbor_radius << ")";
      break;
    default: break;
  }
  return os.str();
}

void PolicySpec::validate() const {
  if (kind != PolicyKind::stdec) baseline.validate();
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "stdec") return PolicyKind::stdec;
  if (name == "top_k" || name == "topk") return PolicyKind::top_k;
  if (name == "fixed" || name == "fixed_threshold") return PolicyKind::fixed_threshold;
  if (name == "half_step") return PolicyKind::half_step;
  if (name == "anchor_dual") return PolicyKind::anchor_dual;
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

void check_prediction(const StepPrediction& pred, std::span<const Position> query, const Vocab& vocab) {
  if (pred.ids.size() != pred.size() || pred.confs.size() != pred.size())
    throw DenoiserError("denoiser returned a ragged prediction");
  if (pred.size() != query.size())
    throw DenoiserError("denoiser returned " + std::to_string(pred.size()) + " predictions for " +
                        std::to_string(query.size()) + " queried positions");
  std::unordered_set<Position> wanted(query.begin(), query.end());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const Position p = pred.positions[k];
    if (wanted.erase(p) == 0) throw DenoiserError("denoiser predicted unqueried position " + std::to_string(p));
    if (!vocab.valid_token(pred.ids[k]) || pred.ids[k] == vocab.mask_id)
      throw DenoiserError("denoiser predicted invalid id " + std::to_string(pred.ids[k]) + " at " +
                          std::to_string(p));
    if (!std::isfinite(pred.confs[k]) || pred.confs[k] < 0.0 || pred.confs[k] > 1.0)
      throw DenoiserError("denoiser confidence out of [0, 1] at " + std::to_string(p));
  }
}

namespace {

StepOutcome from_selection(const CommitSelection& sel, const StepPrediction& pred) {
  StepOutcome out;
  out.prediction = pred;
  out.fallback_used = sel.fallback_used;
  for (Position p : sel.positions) {
    const auto it = std::find(pred.positions.begin(), pred.positions.end(), p);
    out.committed.push_back(p);
    out.committed_ids.push_back(pred.ids[static_cast<std::size_t>(it - pred.positions.begin())]);
  }
  return out;
}

TraceStep to_trace_step(const DecodeState& state, const StepOutcome& out, std::span<const Position> eligible,
                        bool budget_forced) {
  TraceStep step;
  step.t = state.t;
  step.block = state.block_index;
  const StepPrediction& pred = out.prediction;
  std::vector<std::size_t> order(pred.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pred.positions[a] < pred.positions[b]; });
  for (std::size_t k : order) step.predictions.push_back({pred.positions[k], pred.ids[k], pred.confs[k]});
  if (out.thresholds) {
    std::vector<TraceThreshold> th;
    for (Position p : eligible) th.push_back({p, out.thresholds->at(p)});
    step.thresholds = std::move(th);
  }
  for (std::size_t k = 0; k < out.committed.size(); ++k)
    step.committed.push_back({out.committed[k], out.committed_ids[k]});
  step.fallback_used = out.fallback_used;
  step.budget_forced = budget_forced;
  return step;
}

}  // namespace

StepOutcome decide_step(const PolicySpec& policy, const DecodeState& state, const StepPrediction& pred,
                        std::span<const Position> eligible, const DecoderConfig& cfg,
                        const SmoothingKernel<double>& kernel) {
  switch (policy.kind) {
    case PolicyKind::stdec:
      return select_commit_set(pred, adaptive_thresholds(state, cfg, kernel), eligible);
    case PolicyKind::top_k:
      return from_selection(topk_commit(pred, policy.baseline.k, eligible), pred);
    case PolicyKind::fixed_threshold:
      return from_selection(fixed_threshold_commit(pred, policy.baseline.tau, eligible), pred);
    case PolicyKind::half_step:
      return from_selection(half_step_commit(pred, eligible, cfg.gen_length, cfg.max_steps), pred);
    case PolicyKind::anchor_dual:
      return from_selection(anchor_dual_commit(pred, policy.baseline, eligible), pred);
  }
  throw LogicError("unhandled policy kind");
}

DecodeResult decode(Denoiser& denoiser, std::span<const TokenId> prompt, const DecoderConfig& cfg,
                    const Vocab& vocab, const PolicySpec& policy, StepCache* cache) {
  policy.validate();
  DecodeState state = new_state(prompt, cfg, vocab);
  if (denoiser.vocab_size() != vocab.size)
    throw ConfigError("denoiser vocabulary (" + std::to_string(denoiser.vocab_size()) +
                      ") differs from decoder vocabulary (" + std::to_string(vocab.size) + ")");
  const auto kernel = kernel_for(cfg);

  DecodeResult result;
  TraceHeader& h = result.trace.header;
  h.prompt.assign(prompt.begin(), prompt.end());
  h.gen_length = cfg.gen_length;
  h.block_size = cfg.block_size;
  h.vocab_size = vocab.size;
  h.mask_id = vocab.mask_id;
  h.config = to_json(cfg);
  h.meta["policy_spec"] = to_json(policy);
  h.policy = policy.name();
  h.seed = cfg.seed;

  auto record = [&](const StepOutcome& out, std::span<const Position> eligible, bool forced) {
    std::vector<int> streaks;
    for (Position p : out.committed) streaks.push_back(state.streak[static_cast<std::size_t>(p)]);
    result.commit_streaks.push_back(std::move(streaks));
    result.trace.steps.push_back(to_trace_step(state, out, eligible, forced));
    state = commit(std::move(state), out.committed, out.committed_ids);
    if (cache) cache->on_commit(state, out.committed);
  };

  while (!state.finished()) {
    const std::vector<Position> eligible = state.eligible();
    const bool forced = state.t >= cfg.max_steps;
    const std::vector<Position> query =
        (cfg.query_full_window && !forced) ? state.masked_positions() : eligible;

    StepPrediction pred = denoiser.predict(state, query);
    ++result.nfe;
    check_prediction(pred, query, vocab);
    state = update_streaks(std::move(state), pred);

    if (forced) {
      // Step budget spent: flush the active block with its argmax ids.
      result.budget_exhausted = true;
      StepOutcome out;
      out.prediction = pred;
      const auto rows = eligible_rows(pred, eligible);
      for (std::size_t r : rows) {
        out.committed.push_back(pred.positions[r]);
        out.committed_ids.push_back(pred.ids[r]);
      }
      record(out, eligible, true);
      continue;
    }
    record(decide_step(policy, state, pred, eligible, cfg, kernel), eligible, false);
  }

  result.final_state = state;
  result.steps_used = state.t;
  result.tokens.assign(state.tokens.begin() + state.prompt_len, state.tokens.end());
  return result;
}

}  // namespace stdec
