#pragma once

#include <string>
#include <string_view>

#include "mddra/mddra.hpp"

namespace mddra::baselines {

enum class BaselineKind {
  kOfflineComplete = 1,   // truth traffic, known shadowing, divergence weighted by the window
  kLyapunovTruth = 2,     // the queue-based scheme with true current traffic
  kGreedyPredicted = 3,   // transient objective on GRAF predictions, no queues
  kGreedyHistoryAvg = 4,  // transient objective on the running mean of samples
};

std::string_view tag(BaselineKind kind);
/// Accepts the tag or the number 1-4.
BaselineKind parse_kind(std::string_view text);

SchemeSpec scheme_for(BaselineKind kind, const MddraConfig& config);

RunResult run_baseline(BaselineKind kind, const World& world, const MddraConfig& config);

}  // namespace mddra::baselines
