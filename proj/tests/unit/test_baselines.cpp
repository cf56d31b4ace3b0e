#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mddra/baselines.hpp"
#include "world_fixtures.hpp"

using namespace mddra;
using namespace mddra::baselines;

TEST_CASE("kind tags round-trip") {
  for (int k = 1; k <= 4; ++k) {
    const auto kind = static_cast<BaselineKind>(k);
    CHECK(parse_kind(tag(kind)) == kind);
    CHECK(parse_kind(std::to_string(k)) == kind);
    CHECK(parse_kind("baseline" + std::to_string(k)) == kind);
  }
  CHECK(tag(BaselineKind::kGreedyHistoryAvg) == "greedy-history-avg");
  CHECK_THROWS_AS(parse_kind("5"), ConfigError);
  CHECK_THROWS_AS(parse_kind("mddra"), ConfigError);
}

TEST_CASE("scheme knowledge per kind") {
  const MddraConfig c;
  const auto b1 = scheme_for(BaselineKind::kOfflineComplete, c);
  CHECK(b1.traffic == TrafficView::kTruth);
  CHECK(b1.oracle_channel);
  CHECK(!b1.queues);
  CHECK(b1.xi_weight == static_cast<double>(c.window));
  const auto b2 = scheme_for(BaselineKind::kLyapunovTruth, c);
  CHECK(b2.traffic == TrafficView::kTruth);
  CHECK(b2.queues);
  CHECK(!b2.oracle_channel);
  const auto b3 = scheme_for(BaselineKind::kGreedyPredicted, c);
  CHECK(b3.traffic == TrafficView::kPredicted);
  CHECK(!b3.queues);
  const auto b4 = scheme_for(BaselineKind::kGreedyHistoryAvg, c);
  CHECK(b4.traffic == TrafficView::kHistoryMean);
  CHECK(!b4.graf_warm_start);
}

TEST_CASE("all schemes see the same truth") {
  const auto w = make_world(fixtures::tiny_world());
  const auto cfg = fixtures::tiny_mddra();
  std::vector<RunResult> runs;
  for (int k = 1; k <= 4; ++k) runs.push_back(run_baseline(static_cast<BaselineKind>(k), w, cfg));
  runs.push_back(run_horizon(w, mddra_scheme(), cfg));
  for (const auto& r : runs) {
    REQUIRE(r.slots.size() == runs.front().slots.size());
    for (std::size_t t = 0; t < r.slots.size(); ++t) {
      CHECK(r.slots[t].truth.d_tot == runs.front().slots[t].truth.d_tot);
      for (std::size_t i = 0; i + 1 < r.slots[t].eta_sequence.size(); ++i) {
        CHECK(r.slots[t].eta_sequence[i + 1] >= r.slots[t].eta_sequence[i]);
      }
    }
    CHECK(r.scheme == r.rows.front().scheme);
  }
}

TEST_CASE("history mean equals constant traffic on reported cells") {
  auto w = make_world(fixtures::tiny_world(2));
  fixtures::make_stationary(w);
  const auto cfg = fixtures::tiny_mddra();
  const auto spec = scheme_for(BaselineKind::kGreedyHistoryAvg, cfg);
  RunState st = initial_state(w, spec, cfg);
  for (int tau = 0; tau < w.horizon(); ++tau) {
    Field view;
    run_timestamp(tau, w, spec, cfg, st, nullptr, &view);
    for (const auto& e : w.samples[0].entries) {
      CHECK(std::abs(view[e.cell] - w.evolution.traffic[0][e.cell]) <= 1e-12 * w.evolution.traffic[0][e.cell]);
    }
  }
}

TEST_CASE("offline baseline per-slot optimum on a one-BS toy") {
  auto wc = fixtures::tiny_world(13);
  wc.n_bs = 1;
  const auto w = make_world(wc);
  auto cfg = fixtures::tiny_mddra();
  cfg.max_inner_iters = 20;
  cfg.finetune_epochs = 300;
  cfg.epsilon = 1e-9;
  const auto spec = scheme_for(BaselineKind::kOfflineComplete, cfg);
  RunState st = initial_state(w, spec, cfg);
  const auto out = run_timestamp(0, w, spec, cfg, st, nullptr);
  const SlotObjective obj(w.true_gains, w.evolution.traffic[0].values, w.grid().cell_area(), w.config.channel,
                          w.config.limits, st.scale, CapacityModel::kExact);
  double best = 0.0;
  const int n = 300;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      const network::NetworkConfig c(1, w.config.limits.b_max * i / n, w.config.limits.p_max * j / n);
      const auto t = obj.evaluate(c, false).terms;
      best = std::max(best, std::max(0.0, 1.0 - spec.xi_weight * t.xi) * t.matched() / t.p_t);
    }
  }
  REQUIRE(best > 0.0);
  CHECK(out.eta_tau >= 0.99 * best);
}

TEST_CASE("desk-scale: stationary traffic, all baselines agree within 2%") {
  auto wc = fixtures::tiny_world(3);
  wc.scenario.horizon = 12;
  auto w = make_world(wc);
  fixtures::make_stationary(w);
  MddraConfig cfg;
  cfg.horizon = 12;
  cfg.window = 5;
  std::vector<double> eta;
  for (int k = 1; k <= 4; ++k) eta.push_back(run_baseline(static_cast<BaselineKind>(k), w, cfg).final_eta_T);
  const double hi = *std::max_element(eta.begin(), eta.end());
  const double lo = *std::min_element(eta.begin(), eta.end());
  INFO("final eta_T per baseline: " << eta[0] << " " << eta[1] << " " << eta[2] << " " << eta[3]);
  CHECK(lo > 0.0);
  CHECK(hi <= 1.02 * lo);
}
