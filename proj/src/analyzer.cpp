#include "stdec/analyzer.hpp"

#include <cstdio>
#include <sstream>
#include <unordered_map>

namespace stdec {

using nlohmann::json;

namespace {

void require_steps(const DecodeTrace& trace) {
  if (trace.steps.empty()) throw ValidationError("trace has no steps");
  validate_trace(trace);
}

}  // namespace

SpatialStabilityReport spatial_stability(const DecodeTrace& trace, const SpatialOptions& opts) {
  if (opts.radius < 1) throw ConfigError("radius must be at least 1");
  require_steps(trace);

  const std::int64_t L = trace.header.gen_length;
  const auto prompt_len = static_cast<std::int64_t>(trace.header.prompt.size());
  std::vector<bool> decoded(static_cast<std::size_t>(L), false);
  auto is_decoded = [&](std::int64_t p) {
    if (p < 0) return opts.prompt_counts && -p <= prompt_len;
    return p < L && decoded[static_cast<std::size_t>(p)];
  };

  SpatialStabilityReport rep;
  rep.radius = opts.radius;
  std::vector<std::int64_t> hist(static_cast<std::size_t>(2 * opts.radius + 1), 0);
  for (const auto& step : trace.steps) {
    // Neighbors committed in the same step do not count.
    for (const auto& c : step.committed) {
      int n = 0;
      for (int u = -opts.radius; u <= opts.radius; ++u)
        if (u != 0 && is_decoded(c.pos + u)) ++n;
      ++hist[static_cast<std::size_t>(n)];
      ++rep.committed_total;
    }
    for (const auto& c : step.committed) decoded[static_cast<std::size_t>(c.pos)] = true;
  }

  rep.count.assign(hist.size(), 0);
  rep.fraction.assign(hist.size(), 0.0);
  std::int64_t at_least = 0;
  for (std::size_t s = hist.size(); s-- > 0;) {
    at_least += hist[s];
    rep.count[s] = at_least;
    rep.fraction[s] = static_cast<double>(at_least) / static_cast<double>(rep.committed_total);
  }
  return rep;
}

namespace {

struct History {
  std::optional<TokenId> id;
  int streak = 0;
  double first_stable_conf = 0.0;
};

// Calls on_commit(step index, commit index, history, commit conf) for every
// committed token after replaying streaks through that step.
template <typename OnCommit>
void replay(const DecodeTrace& trace, OnCommit&& on_commit) {
  const std::int64_t L = trace.header.gen_length;
  const std::int64_t B = trace.header.block_size;
  std::vector<History> hist(static_cast<std::size_t>(L));
  std::vector<bool> decoded(static_cast<std::size_t>(L), false);

  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const TraceStep& step = trace.steps[s];
    std::unordered_map<Position, double> conf;
    for (const auto& p : step.predictions) {
      History& h = hist[static_cast<std::size_t>(p.pos)];
      if (h.id && *h.id == p.id) {
        ++h.streak;
      } else {
        h.streak = 0;
        h.first_stable_conf = p.conf;
      }
      h.id = p.id;
      conf.emplace(p.pos, p.conf);
    }
    for (Position p = step.block * B; p < (step.block + 1) * B; ++p)
      if (!decoded[static_cast<std::size_t>(p)] && !conf.contains(p))
        throw ValidationError("step " + std::to_string(step.t) + ": missing per-step prediction for masked position " +
                              std::to_string(p));
    for (std::size_t k = 0; k < step.committed.size(); ++k) {
      const Position p = step.committed[k].pos;
      on_commit(s, k, hist[static_cast<std::size_t>(p)], conf.at(p));
      decoded[static_cast<std::size_t>(p)] = true;
    }
  }
}

}  // namespace

std::vector<std::vector<int>> replay_commit_streaks(const DecodeTrace& trace) {
  require_steps(trace);
  std::vector<std::vector<int>> out(trace.steps.size());
  replay(trace, [&](std::size_t s, std::size_t, const History& h, double) { out[s].push_back(h.streak); });
  return out;
}

TemporalStabilityReport temporal_stability(const DecodeTrace& trace, int k_max) {
  if (k_max < 0) throw ConfigError("k_max must be non-negative");
  require_steps(trace);

  struct Acc {
    std::int64_t n = 0;
    double first = 0.0;
    double commit = 0.0;
  };
  std::vector<Acc> acc(static_cast<std::size_t>(k_max + 1));
  TemporalStabilityReport rep;
  rep.k_max = k_max;
  replay(trace, [&](std::size_t, std::size_t, const History& h, double c) {
    ++rep.committed_total;
    for (int k = 0; k <= std::min(h.streak, k_max); ++k) {
      Acc& a = acc[static_cast<std::size_t>(k)];
      ++a.n;
      a.first += h.first_stable_conf;
      a.commit += c;
    }
  });

  for (const Acc& a : acc) {
    TemporalBucket b;
    b.count = a.n;
    b.fraction = static_cast<double>(a.n) / static_cast<double>(rep.committed_total);
    if (a.n > 0) {
      b.mean_first_stable_conf = a.first / static_cast<double>(a.n);
      b.mean_commit_conf = a.commit / static_cast<double>(a.n);
      b.gap = *b.mean_commit_conf - *b.mean_first_stable_conf;
    }
    rep.buckets.push_back(b);
  }
  return rep;
}

json to_json(const SpatialStabilityReport& r) {
  json rows = json::array();
  for (std::size_t s = 0; s < r.fraction.size(); ++s)
    rows.push_back({{"S", s}, {"fraction", r.fraction[s]}, {"count", r.count[s]}});
  return {{"radius", r.radius}, {"committed_total", r.committed_total}, {"rows", rows}};
}

json to_json(const TemporalStabilityReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json rows = json::array();
  for (std::size_t k = 0; k < r.buckets.size(); ++k) {
    const auto& b = r.buckets[k];
    rows.push_back({{"K", k},
                    {"fraction", b.fraction},
                    {"count", b.count},
                    {"mean_first_stable_conf", opt(b.mean_first_stable_conf)},
                    {"mean_commit_conf", opt(b.mean_commit_conf)},
                    {"gap", opt(b.gap)}});
  }
  return {{"k_max", r.k_max}, {"committed_total", r.committed_total}, {"rows", rows}};
}

std::string to_csv(const SpatialStabilityReport& spatial, const TemporalStabilityReport& temporal) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  std::ostringstream os;
  os << "table,index,fraction,count,mean_first_stable_conf,mean_commit_conf,gap\n";
  for (std::size_t s = 0; s < spatial.fraction.size(); ++s)
    os << "spatial," << s << ',' << num(spatial.fraction[s]) << ',' << spatial.count[s] << ",,,\n";
  for (std::size_t k = 0; k < temporal.buckets.size(); ++k) {
    const auto& b = temporal.buckets[k];
    os << "temporal," << k << ',' << num(b.fraction) << ',' << b.count << ',' << opt(b.mean_first_stable_conf)
       << ',' << opt(b.mean_commit_conf) << ',' << opt(b.gap) << '\n';
  }
  return os.str();
}

}  // namespace stdec
