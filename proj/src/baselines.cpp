#include "mddra/baselines.hpp"

namespace mddra::baselines {

std::string_view tag(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kOfflineComplete: return "offline-admm-complete";
    case BaselineKind::kLyapunovTruth: return "lyapunov-truth";
    case BaselineKind::kGreedyPredicted: return "greedy-predicted";
    case BaselineKind::kGreedyHistoryAvg: return "greedy-history-avg";
  }
  return "unknown";
}

BaselineKind parse_kind(std::string_view text) {
  for (int k = 1; k <= 4; ++k) {
    const auto kind = static_cast<BaselineKind>(k);
    if (text == tag(kind) || text == std::to_string(k) || text == "baseline" + std::to_string(k)) {
      return kind;
    }
  }
  throw ConfigError("unknown baseline '" + std::string(text) + "'");
}

SchemeSpec scheme_for(BaselineKind kind, const MddraConfig& config) {
  SchemeSpec s;
  s.name = std::string(tag(kind));
  switch (kind) {
    case BaselineKind::kOfflineComplete:
      s.traffic = TrafficView::kTruth;
      s.queues = false;
      s.xi_weight = static_cast<double>(config.window);
      s.oracle_channel = true;
      s.graf_warm_start = false;
      break;
    case BaselineKind::kLyapunovTruth:
      s.traffic = TrafficView::kTruth;
      break;
    case BaselineKind::kGreedyPredicted:
      s.queues = false;
      s.xi_weight = 1.0;
      break;
    case BaselineKind::kGreedyHistoryAvg:
      s.traffic = TrafficView::kHistoryMean;
      s.queues = false;
      s.xi_weight = 1.0;
      s.graf_warm_start = false;
      break;
  }
  return s;
}

RunResult run_baseline(BaselineKind kind, const World& world, const MddraConfig& config) {
  return run_horizon(world, scheme_for(kind, config), config);
}

}  // namespace mddra::baselines
