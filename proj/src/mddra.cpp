#include "mddra/mddra.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

namespace mddra {

namespace {

metrics::SlotAggregates as_aggregates(const lyapunov::SlotTerms& t, int tau) {
  metrics::SlotAggregates a;
  a.c_tot = t.c_tot;
  a.d_tot = t.d_tot;
  a.p_t = t.p_t;
  a.xi = t.xi;
  a.tau = tau;
  return a;
}

scenario::TrafficSample mean_sample(const Grid& grid, const std::vector<double>& sum,
                                    const std::vector<double>& count, int tau) {
  scenario::TrafficSample s;
  s.timestamp = tau;
  for (std::size_t j = 0; j < sum.size(); ++j) {
    if (count[j] > 0.0) s.entries.push_back({grid.center(j), j, sum[j] / count[j]});
  }
  return s;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::size_t WorldConfig::n_users() const {
  const double m = static_cast<double>(scenario.grid.size());
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(users_ratio * m)));
}

void WorldConfig::validate() const {
  scenario.validate();
  traffic.validate();
  channel.validate();
  limits.validate();
  if (n_bs < 1) throw ConfigError("network.n_bs must be >= 1");
  if (!(users_ratio > 0.0 && users_ratio <= 1.0)) throw ConfigError("scenario.users_ratio must lie in (0, 1]");
  if (substeps < 0) throw ConfigError("scenario.substeps must be >= 0");
}

void MddraConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("mddra.epsilon must be > 0");
  if (max_inner_iters < 1) throw ConfigError("mddra.max_inner_iters must be >= 1");
  if (window < 1 || window > horizon) throw ConfigError("mddra.window must lie in [1, horizon]");
  if (!(zeta_min >= 0.0 && zeta_min <= 1.0)) throw ConfigError("mddra.zeta_min must lie in [0, 1]");
  if (!(rho > 0.0)) throw ConfigError("mddra.rho must be > 0");
  if (fgo_layers < 1) throw ConfigError("mddra.fgo_layers must be >= 1");
  if (kappa_divisor < 0) throw ConfigError("mddra.kappa_divisor must be >= 0");
  if (warm_start_epochs < 0 || pretrain_epochs_first < 0 || pretrain_epochs < 0 || finetune_epochs < 0) {
    throw ConfigError("mddra epoch budgets must be >= 0");
  }
  if (!(pretrain_lr > 0.0) || !(finetune_lr > 0.0)) throw ConfigError("mddra learning rates must be > 0");
}

SchemeSpec mddra_scheme() { return SchemeSpec{}; }

namespace {

struct Evolved {
  scenario::Scenario scenario;
  scenario::Evolution evolution;
};

Evolved evolve(const WorldConfig& config) {
  Evolved e;
  e.scenario = scenario::build_intersection_scenario(config.scenario);
  const int substeps = config.substeps > 0 ? config.substeps : scenario::min_substeps(config.traffic);
  e.evolution = scenario::simulate(e.scenario, config.traffic, config.scenario.horizon, substeps);
  return e;
}

network::Deployment deploy_over(const WorldConfig& config, const scenario::Evolution& ev) {
  const std::size_t end = static_cast<std::size_t>(
      std::clamp(config.scenario.red_until, 1, static_cast<int>(ev.traffic.size())));
  Field avg = scenario::time_average(ev.traffic, 0, end);
  if (!(avg.integral() > 0.0)) avg = Field(avg.grid, 1.0);
  return network::deploy(config.n_bs, avg, derive_seed(config.seed, 1), config.deploy);
}

}  // namespace

network::Deployment default_deployment(const WorldConfig& config) {
  config.validate();
  return deploy_over(config, evolve(config).evolution);
}

World make_world(const WorldConfig& config, const std::optional<network::Deployment>& deployment) {
  config.validate();
  World w;
  w.config = config;
  Evolved e = evolve(config);
  w.scenario = std::move(e.scenario);
  w.evolution = std::move(e.evolution);
  w.deployment = deployment ? *deployment : deploy_over(config, w.evolution);
  if (w.deployment.size() != config.n_bs) throw ConfigError("make_world: deployment BS count differs from n_bs");
  const Grid& g = w.grid();
  w.shadow_db = network::sample_shadowing(w.deployment, g, config.channel.chi_db, derive_seed(config.seed, 2));
  w.true_gains = network::ChannelGains(w.deployment, g, config.channel, w.shadow_db);
  w.model_gains = network::ChannelGains(w.deployment, g, config.channel);
  const std::size_t n_users = config.n_users();
  for (int t = 0; t < w.horizon(); ++t) {
    const auto ts = static_cast<std::size_t>(t);
    w.samples.push_back(scenario::sample_profile(w.evolution.traffic[ts], w.evolution.density[ts],
                                                 n_users, derive_seed(config.seed, 3, ts)));
  }
  return w;
}

bool StationarityResiduals::within(const std::array<double, 6>& eps) const {
  for (std::size_t i = 0; i < 6; ++i) {
    if (!(l[i] <= eps[i])) return false;
  }
  return true;
}

StationarityResiduals residuals(const SlotObjective& objective,
                                const network::NetworkConfig& config,
                                const lyapunov::LyapunovState& state,
                                const lyapunov::DualState& duals,
                                const lyapunov::LongTermTargets& targets, double eta) {
  StationarityResiduals r;
  const auto ev = evaluate_lagrangian(objective, config, state, duals, targets, eta, true);
  const auto& lim = objective.limits();
  network::NetworkConfig moved = config;
  for (std::size_t n = 0; n < config.size(); ++n) {
    moved.bandwidth[n] += ev.grad_u[n] * lim.b_max;
    moved.power[n] += ev.grad_v[n] * lim.p_max;
  }
  network::project_feasible(moved, lim);
  double l1 = 0.0;
  for (std::size_t n = 0; n < config.size(); ++n) {
    l1 = std::max(l1, std::abs(moved.bandwidth[n] - config.bandwidth[n]) / lim.b_max);
    l1 = std::max(l1, std::abs(moved.power[n] - config.power[n]) / lim.p_max);
  }
  r.l[0] = l1;
  const auto s = lyapunov::scalar_stationarity(state, duals, targets, ev.slot.terms);
  for (std::size_t i = 0; i < 5; ++i) r.l[i + 1] = s[i];
  return r;
}

WindowEstimate window_estimate(std::span<const metrics::SlotAggregates> slots, int window) {
  WindowEstimate w;
  if (slots.empty() || window < 1) return w;
  const std::size_t n = std::min(slots.size(), static_cast<std::size_t>(window));
  double matched = 0.0, p = 0.0, d = 0.0;
  for (std::size_t i = slots.size() - n; i < slots.size(); ++i) {
    matched += slots[i].matched();
    p += slots[i].p_t;
    d += slots[i].d_tot;
    w.kappa += slots[i].xi;
  }
  const double k = std::clamp(w.kappa, 0.0, 1.0);
  w.eta = p > 0.0 ? (1.0 - k) * matched / p : 0.0;
  w.zeta = d > 0.0 ? (1.0 - k) * matched / d : 0.0;
  return w;
}

double dinkelbach_update(const lyapunov::SlotTerms& terms, double kappa_tau) {
  if (!(terms.p_t > 0.0)) throw NumericError("dinkelbach_update: total power is zero");
  return (1.0 - std::clamp(kappa_tau, 0.0, 1.0)) * terms.matched() / terms.p_t;
}

namespace {
bool degenerate(const network::NetworkConfig& cfg) {
  const double b = std::accumulate(cfg.bandwidth.begin(), cfg.bandwidth.end(), 0.0);
  const double p = std::accumulate(cfg.power.begin(), cfg.power.end(), 0.0);
  return !(b > 0.0) || !(p > 0.0);
}
}  // namespace

RunState initial_state(const World& world, const SchemeSpec& scheme, const MddraConfig& config) {
  config.validate();
  RunState st;
  st.stack = graf::FgoStack::initial(config.fgo_layers);
  st.pretrain_state.lr = config.pretrain_lr;
  const auto& lim = world.config.limits;
  network::NetworkConfig warm = network::full_power_config(world.deployment.size(), lim);
  if (!world.samples.empty() && world.samples.front().count() > 0) {
    const auto& s0 = world.samples.front();
    const auto sg = graf::sample_gains(s0, world.deployment, world.config.channel);
    warm = graf::fit_config(s0, sg, lim, warm, config.warm_start_epochs, config.finetune_lr);
  }
  st.history.assign(static_cast<std::size_t>(config.window), warm);
  st.previous = warm;
  st.mean_sum.assign(world.grid().size(), 0.0);
  st.mean_count.assign(world.grid().size(), 0.0);
  (void)scheme;
  return st;
}

SlotOutcome run_timestamp(int tau, const World& world, const SchemeSpec& scheme,
                          const MddraConfig& config, RunState& state,
                          std::vector<TraceRow>* rows, Field* prediction) {
  const auto t_start = std::chrono::steady_clock::now();
  if (tau < 0 || tau >= world.horizon()) throw DomainError("run_timestamp: tau outside the horizon");
  const auto ts = static_cast<std::size_t>(tau);
  const Grid& grid = world.grid();
  const auto& lim = world.config.limits;
  const auto& ch = world.config.channel;
  const auto& dep = world.deployment;
  const auto& obs = world.samples[tau == 0 ? 0 : ts - 1];
  const bool use_graf = scheme.traffic == TrafficView::kPredicted || scheme.graf_warm_start;

  // Traffic estimate and warm start.
  network::NetworkConfig predicted_cfg = state.previous;
  Field view(grid, 0.0, tau);
  auto graf_step = [&](int epochs) {
    const auto graph = graf::build_graph(state.history, dep, dep.adjacency_threshold, lim);
    if (obs.count() > 0) {
      const auto sg = graf::sample_gains(obs, dep, ch);
      graf::pretrain(state.stack, graph, obs, sg, lim, epochs, state.pretrain_state);
    }
    return graph;
  };
  if (use_graf) {
    const auto graph = graf_step(tau == 0 ? config.pretrain_epochs_first : config.pretrain_epochs);
    auto fitted = graf::fgo_forward(graph, state.stack, lim, tau - 1);
    if (degenerate(fitted)) {
      // Dead output units: restart the stack from the persistence map.
      state.stack = graf::FgoStack::initial(config.fgo_layers);
      state.pretrain_state.reset();
      fitted = state.history.back();
      fitted.timestamp = tau - 1;
    }
    state.history.erase(state.history.begin());
    state.history.push_back(fitted);
    const auto next = graf::build_graph(state.history, dep, dep.adjacency_threshold, lim);
    predicted_cfg = graf::fgo_forward(next, state.stack, lim, tau);
    if (degenerate(predicted_cfg)) {
      predicted_cfg = state.history.back();
      predicted_cfg.timestamp = tau;
    }
  }
  switch (scheme.traffic) {
    case TrafficView::kPredicted:
      view = graf::rbf_forward(predicted_cfg, world.model_gains, grid, lim, tau);
      break;
    case TrafficView::kTruth:
      view = world.evolution.traffic[ts];
      break;
    case TrafficView::kHistoryMean: {
      if (tau != 1) {
        for (const auto& e : obs.entries) {
          state.mean_sum[e.cell] += e.demand;
          state.mean_count[e.cell] += 1.0;
        }
      }
      const auto ms = mean_sample(grid, state.mean_sum, state.mean_count, tau);
      network::NetworkConfig fill = state.previous;
      if (ms.count() > 0) {
        const auto sg = graf::sample_gains(ms, dep, ch);
        fill = graf::fit_config(ms, sg, lim, state.previous, config.warm_start_epochs / 2,
                                config.finetune_lr);
      }
      const auto filled = network::capacity_lb_points(fill, world.model_gains, lim);
      for (std::size_t j = 0; j < grid.size(); ++j) {
        view.values[j] = state.mean_count[j] > 0.0 ? state.mean_sum[j] / state.mean_count[j] : filled[j];
      }
      break;
    }
  }
  view.timestamp = tau;
  if (prediction) *prediction = view;

  if (!state.scale_set) {
    const double d0 = view.integral();
    state.scale.traffic = d0 > 0.0 ? d0 : 1.0;
    state.scale.power = static_cast<double>(dep.size()) * (ch.lambda * lim.p_max + ch.p_circuit);
    state.scale_set = true;
  }
  const SlotObjective objective(scheme.oracle_channel ? world.true_gains : world.model_gains,
                                view.values, grid.cell_area(), ch, lim, state.scale,
                                scheme.oracle_channel ? CapacityModel::kExact : CapacityModel::kLowerBound);
  const Field& truth_traffic = world.evolution.traffic[ts];
  const double eta_unit = state.scale.traffic / state.scale.power;

  auto truth_of = [&](const network::NetworkConfig& cfg) {
    const Field cap = network::capacity_exact_field(cfg, world.true_gains, grid, tau);
    return metrics::aggregate(cap, truth_traffic, network::total_power(cfg, ch));
  };

  SlotOutcome out;
  out.tau = tau;
  const network::NetworkConfig warm = scheme.graf_warm_start ? predicted_cfg : state.previous;

  // Long-term targets from the last window of the scheme's own view.
  lyapunov::LongTermTargets targets;
  targets.zeta_min = config.zeta_min;
  targets.horizon = config.kappa_span();
  targets.window = config.window;
  const SlotEval warm_eval = objective.evaluate(warm, false);
  if (state.view_slots.empty()) {
    targets.eta_horizon = warm_eval.terms.p_t > 0.0 ? warm_eval.terms.matched() / warm_eval.terms.p_t : 0.0;
    targets.kappa_horizon = 0.0;
  } else {
    std::vector<metrics::SlotAggregates> v;
    for (const auto& t : state.view_slots) v.push_back(as_aggregates(t, 0));
    const auto w = window_estimate(v, config.window);
    targets.eta_horizon = w.eta;
    targets.kappa_horizon = metrics::clamp_kappa(w.kappa);
  }

  // Optional repeat of pretraining inside the inner loop; the slot's own
  // prediction stays fixed so the Dinkelbach objective does not move.
  auto inner_pretrain = [&] {
    if (use_graf && config.pretrain_each_iteration) graf_step(config.pretrain_epochs);
  };

  auto emit = [&](int k, const network::NetworkConfig& cfg, double eta, double lambda,
                  const lyapunov::LyapunovState& s) {
    if (!rows) return;
    const auto agg = truth_of(cfg);
    std::vector<metrics::SlotAggregates> win = state.truth_slots;
    win.push_back(agg);
    const auto w = window_estimate(win, config.window);
    TraceRow r;
    r.scheme = scheme.name;
    r.seed = world.config.seed;
    r.tau = tau;
    r.k = k;
    r.eta_tau = eta * eta_unit;
    r.eta_T = w.eta;
    r.lambda = lambda;
    r.q_zeta = s.q_zeta;
    r.q_kappa = s.q_kappa;
    r.q_eta = s.q_eta;
    r.xi = agg.xi;
    r.kappa = std::clamp(w.kappa, 0.0, 1.0);
    r.c_tot = agg.c_tot;
    r.d_tot = agg.d_tot;
    r.p_t = agg.p_t;
    r.zeta = w.zeta;
    r.wall_ms = config.record_timing ? elapsed_ms(t_start) : 0.0;
    rows->push_back(r);
  };

  graf::TrainState ft;
  ft.lr = config.finetune_lr;
  network::NetworkConfig cfg = warm;
  lyapunov::SlotTerms chosen_terms;
  network::NetworkConfig chosen_cfg = warm;
  lyapunov::LyapunovState chosen_state = state.lyapunov;

  if (scheme.queues) {
    lyapunov::LyapunovState s = state.lyapunov;
    s.nu_zeta = s.nu_kappa = s.nu_eta = 1.0;
    s.h = 0.0;
    s.kappa_tau = std::clamp(static_cast<double>(targets.horizon) * warm_eval.terms.xi, 0.0,
                             metrics::kKappaCeiling);
    lyapunov::DualState duals;
    duals.rho_zeta = duals.rho_kappa = duals.rho_eta = config.rho;
    lyapunov::SlotTerms terms = warm_eval.terms;
    double eta = dinkelbach_update(terms, s.kappa_tau);
    terms.eta = eta;
    double lambda = lyapunov::lagrangian(s, duals, targets, terms);
    emit(0, cfg, eta, lambda, s);
    out.eta_sequence.push_back(eta);
    chosen_terms = terms;
    chosen_state = s;
    double chosen_eta = eta;
    int k = 0;
    do {
      ++k;
      inner_pretrain();
      const graf::Evaluator ev = [&](const network::NetworkConfig& c) {
        const auto l = evaluate_lagrangian(objective, c, s, duals, targets, eta, true);
        return graf::Ascent{l.value, l.grad_u, l.grad_v};
      };
      cfg = graf::finetune(cfg, ev, config.finetune_epochs, ft, lim).config;
      terms = objective.evaluate(cfg, false).terms;
      terms.eta = eta;
      s.kappa_tau = lyapunov::solve_kappa(s, duals, targets, terms);
      s.h = lyapunov::solve_h(s, duals, targets, terms).h;
      const auto nu = lyapunov::solve_corrections(s, duals, targets, terms);
      s.nu_zeta = nu.nu_zeta;
      s.nu_kappa = nu.nu_kappa;
      s.nu_eta = nu.nu_eta;
      duals = lyapunov::update_duals(duals, lyapunov::residuals(s, targets, terms));
      const double eta_new = dinkelbach_update(terms, s.kappa_tau);
      if (eta_new >= chosen_eta) {
        chosen_eta = eta_new;
        chosen_cfg = cfg;
        chosen_state = s;
        chosen_terms = terms;
        chosen_terms.eta = eta_new;
      }
      eta = chosen_eta;
      terms.eta = eta;
      lambda = lyapunov::lagrangian(s, duals, targets, terms);
      emit(k, chosen_cfg, eta, lambda, s);
      out.eta_sequence.push_back(eta);
    } while (std::abs(lambda) > config.epsilon && k < config.max_inner_iters);
    out.iterations = k;
    out.converged = std::abs(lambda) <= config.epsilon;
    out.stationarity = residuals(objective, cfg, s, duals, targets, eta);
    out.eta_tau = chosen_eta;

    // Queue update at the chosen iterate, then the next slot starts from it.
    lyapunov::LyapunovState next = lyapunov::update_queues(chosen_state, chosen_terms, targets);
    state.lyapunov = next;
    const double qmax = std::max({std::abs(next.q_zeta), std::abs(next.q_kappa), std::abs(next.q_eta)});
    state.queue_running_max = std::max(state.queue_running_max, qmax);
  } else {
    const double w = scheme.xi_weight;
    auto ratio = [&](const lyapunov::SlotTerms& t) {
      if (!(t.p_t > 0.0)) throw NumericError("transient objective: total power is zero");
      return std::max(0.0, 1.0 - w * t.xi) * t.matched() / t.p_t;
    };
    lyapunov::SlotTerms terms = warm_eval.terms;
    double eta = ratio(terms);
    terms.eta = eta;
    emit(0, cfg, eta, 0.0, state.lyapunov);
    out.eta_sequence.push_back(eta);
    chosen_terms = terms;
    double value = 0.0;
    int k = 0;
    do {
      ++k;
      inner_pretrain();
      const graf::Evaluator ev = [&](const network::NetworkConfig& c) {
        const auto l = evaluate_transient(objective, c, w, eta, true);
        return graf::Ascent{l.value, l.grad_u, l.grad_v};
      };
      const auto res = graf::finetune(cfg, ev, config.finetune_epochs, ft, lim);
      cfg = res.config;
      value = res.value;
      terms = objective.evaluate(cfg, false).terms;
      const double eta_new = ratio(terms);
      if (eta_new >= eta) {
        eta = eta_new;
        chosen_cfg = cfg;
        chosen_terms = terms;
      }
      chosen_terms.eta = eta;
      emit(k, chosen_cfg, eta, value, state.lyapunov);
      out.eta_sequence.push_back(eta);
    } while (std::abs(value) > config.epsilon && k < config.max_inner_iters);
    out.iterations = k;
    out.converged = std::abs(value) <= config.epsilon;
    out.eta_tau = eta;
  }

  out.config = chosen_cfg;
  out.view = chosen_terms;
  out.truth = truth_of(chosen_cfg);
  state.truth_slots.push_back(out.truth);
  state.view_slots.push_back(chosen_terms);
  state.previous = chosen_cfg;
  return out;
}

RunResult run_horizon(const World& world, const SchemeSpec& scheme, const MddraConfig& config) {
  config.validate();
  if (config.horizon < config.window) throw ConfigError("run_horizon: horizon must be >= window");
  RunResult r;
  r.scheme = scheme.name;
  r.seed = world.config.seed;
  RunState st = initial_state(world, scheme, config);
  const int horizon = std::min(config.horizon, world.horizon());
  for (int tau = 0; tau < horizon; ++tau) {
    Field pred;
    r.slots.push_back(run_timestamp(tau, world, scheme, config, st, &r.rows, &pred));
    r.predictions.push_back(std::move(pred));
    if (!r.slots.back().converged) ++r.non_converged;
  }
  std::vector<Field> caps, traffic;
  std::vector<double> power;
  for (const auto& s : r.slots) {
    caps.push_back(network::capacity_exact_field(s.config, world.true_gains, world.grid(), s.tau));
    traffic.push_back(world.evolution.traffic[static_cast<std::size_t>(s.tau)]);
    power.push_back(network::total_power(s.config, world.config.channel));
  }
  r.report = metrics::report(caps, traffic, power);
  const auto w = window_estimate(st.truth_slots, config.window);
  r.final_eta_T = w.eta;
  r.final_kappa = w.kappa;
  r.final_zeta = w.zeta;
  r.final_queue_max = std::max({std::abs(st.lyapunov.q_zeta), std::abs(st.lyapunov.q_kappa),
                                std::abs(st.lyapunov.q_eta)});
  r.running_queue_max = st.queue_running_max;
  return r;
}

}  // namespace mddra
