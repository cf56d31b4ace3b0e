#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mddra/graf.hpp"
#include "mddra/lyapunov.hpp"
#include "mddra/metrics.hpp"
#include "mddra/network.hpp"
#include "mddra/objective.hpp"
#include "mddra/scenario.hpp"

namespace mddra {

struct WorldConfig {
  scenario::ScenarioConfig scenario;
  scenario::TrafficParams traffic;
  std::size_t n_bs = 25;
  double users_ratio = 0.5;  // N_U / M
  network::ChannelParams channel;
  network::ResourceLimits limits;
  network::DeployOptions deploy;
  int substeps = 0;  // 0: smallest stable count
  std::uint64_t seed = 1;

  [[nodiscard]] std::size_t n_users() const;
  void validate() const;
};

/// Ground truth shared by every scheme of one seed.
struct World {
  WorldConfig config;
  scenario::Scenario scenario;
  scenario::Evolution evolution;
  network::Deployment deployment;
  std::vector<double> shadow_db;
  network::ChannelGains true_gains;   // shadowed, on the grid
  network::ChannelGains model_gains;  // unshadowed, on the grid
  std::vector<scenario::TrafficSample> samples;  // reported at the end of each slot

  [[nodiscard]] const Grid& grid() const { return scenario.initial.grid; }
  [[nodiscard]] int horizon() const { return static_cast<int>(evolution.traffic.size()); }
};

/// Traffic-weighted deploy over the red-phase average of the evolved traffic.
network::Deployment default_deployment(const WorldConfig& config);

/// `deployment` overrides the traffic-weighted placement (used to share BS
/// sites across sweep points).
World make_world(const WorldConfig& config,
                 const std::optional<network::Deployment>& deployment = std::nullopt);

struct MddraConfig {
  double epsilon = 1e-3;
  int max_inner_iters = 20;
  int window = 5;
  int horizon = 30;
  double zeta_min = 0.8;
  double rho = 10.0;
  std::size_t fgo_layers = 3;
  int warm_start_epochs = 400;    // direct config fit on the first sample
  int pretrain_epochs_first = 2000;
  int pretrain_epochs = 200;      // per later timestamp, warm-started
  int finetune_epochs = 40;       // per inner iteration
  bool pretrain_each_iteration = false;  // extra pretrain_epochs at every inner iteration
  double pretrain_lr = 1e-3;
  double finetune_lr = 1e-2;
  std::array<double, 6> residual_eps{1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3};
  bool record_timing = false;     // wall_ms stays 0 unless set, keeping traces reproducible
  int kappa_divisor = 0;          // T in xi + nu Q = kappa_tau / T; 0: the window length

  [[nodiscard]] int kappa_span() const { return kappa_divisor > 0 ? kappa_divisor : window; }

  void validate() const;
};

enum class TrafficView { kPredicted, kTruth, kHistoryMean };

/// What a scheme knows and optimizes.
struct SchemeSpec {
  std::string name = "mddra";
  TrafficView traffic = TrafficView::kPredicted;
  bool queues = true;        // Lyapunov/ADMM inner loop; otherwise a transient objective
  double xi_weight = 1.0;    // transient objective (1 - w xi) min{C, D} - eta P
  bool oracle_channel = false;  // optimizer sees the shadowed channel and exact capacity
  bool graf_warm_start = true;  // fine-tune starts from the FGO prediction
};

SchemeSpec mddra_scheme();

struct StationarityResiduals {
  std::array<double, 6> l{};
  [[nodiscard]] bool within(const std::array<double, 6>& eps) const;
};

/// l1: projected gradient of Lambda in (u, v) (max norm); l2..l6: kappa_tau,
/// h, nu_kappa, nu_eta, nu_zeta.
StationarityResiduals residuals(const SlotObjective& objective,
                                const network::NetworkConfig& config,
                                const lyapunov::LyapunovState& state,
                                const lyapunov::DualState& duals,
                                const lyapunov::LongTermTargets& targets, double eta);

/// One record per (tau, k); k = 0 is the warm start. Units: eta in bits/J,
/// C_tot and D_tot as area integrals, P_T in W, lambda and queues normalized.
struct TraceRow {
  std::string scheme;
  std::uint64_t seed = 0;
  int tau = 0;
  int k = 0;
  double eta_tau = 0.0;
  double eta_T = 0.0;
  double lambda = 0.0;
  double q_zeta = 0.0;
  double q_kappa = 0.0;
  double q_eta = 0.0;
  double xi = 0.0;
  double kappa = 0.0;
  double c_tot = 0.0;
  double d_tot = 0.0;
  double p_t = 0.0;
  double zeta = 0.0;
  double wall_ms = 0.0;
};

struct SlotOutcome {
  int tau = 0;
  network::NetworkConfig config;
  metrics::SlotAggregates truth;  // exact capacity on the shadowed channel vs true traffic
  lyapunov::SlotTerms view;       // normalized, as seen by the optimizer
  double eta_tau = 0.0;           // normalized transient IREE of the chosen iterate
  int iterations = 0;
  bool converged = false;
  std::vector<double> eta_sequence;  // normalized, per inner iteration
  StationarityResiduals stationarity;
};

/// Sliding-window horizon quantities over the last `window` slots.
struct WindowEstimate {
  double eta = 0.0;    // (1 - kappa) sum min / sum P
  double kappa = 0.0;  // sum of xi
  double zeta = 0.0;
};
WindowEstimate window_estimate(std::span<const metrics::SlotAggregates> slots, int window);

struct RunResult {
  std::string scheme;
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;
  std::vector<SlotOutcome> slots;
  metrics::IreeReport report;  // whole-horizon metrics on the truth
  double final_eta_T = 0.0;    // window estimate at the last slot, bits/J
  double final_kappa = 0.0;
  double final_zeta = 0.0;
  double final_queue_max = 0.0;
  double running_queue_max = 0.0;
  std::vector<Field> predictions;  // traffic estimates used per slot
  int non_converged = 0;
};

/// Mutable per-run state carried across timestamps.
struct RunState {
  graf::FgoStack stack;
  graf::TrainState pretrain_state;
  std::vector<network::NetworkConfig> history;  // last `window` fitted configs
  network::NetworkConfig previous;              // last chosen config
  lyapunov::LyapunovState lyapunov;
  std::vector<metrics::SlotAggregates> truth_slots;
  std::vector<lyapunov::SlotTerms> view_slots;
  std::vector<double> mean_sum;    // history-mean view: cell sums
  std::vector<double> mean_count;
  Scale scale;
  bool scale_set = false;
  double queue_running_max = 0.0;
};

RunState initial_state(const World& world, const SchemeSpec& scheme, const MddraConfig& config);

/// One timestamp: traffic estimate, inner loop, queue and window updates.
SlotOutcome run_timestamp(int tau, const World& world, const SchemeSpec& scheme,
                          const MddraConfig& config, RunState& state,
                          std::vector<TraceRow>* rows, Field* prediction = nullptr);

/// Dinkelbach parameter (1 - kappa_tau) min{C, D} / P.
double dinkelbach_update(const lyapunov::SlotTerms& terms, double kappa_tau);

RunResult run_horizon(const World& world, const SchemeSpec& scheme, const MddraConfig& config);

}  // namespace mddra
