#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mddra/harness.hpp"
#include "mddra/metrics.hpp"

namespace mddra::harness {

namespace {

// Runs fn(i) for i in [0, n) on up to thread_count() workers; rethrows the first failure.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

unsigned thread_count() {
  if (const char* env = std::getenv("MDDRA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("MDDRA_THREADS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SchemeSeedResult summarize(const RunResult& run) {
  SchemeSeedResult s;
  s.scheme = run.scheme;
  s.seed = run.seed;
  s.final_eta_T = run.final_eta_T;
  s.final_kappa = run.final_kappa;
  s.final_zeta = run.final_zeta;
  s.eta_full = run.report.eta_full;
  s.final_queue_max = run.final_queue_max;
  s.running_queue_max = run.running_queue_max;
  s.non_converged = run.non_converged;
  for (const auto& slot : run.slots) {
    s.horizon_kappa += slot.truth.xi;
    s.horizon_d_tot += slot.truth.d_tot;
  }
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const DeploymentMap& deployments) {
  config.validate();
  ExperimentResult result;
  result.config_hash = config_hash(config);
  const std::size_t n_seeds = config.seeds.size();
  const std::size_t n_schemes = config.schemes.size();

  std::vector<World> worlds(n_seeds);
  parallel_for(n_seeds, [&](std::size_t i) {
    WorldConfig wc = config.world;
    wc.seed = config.seeds[i];
    const auto it = deployments.find(wc.seed);
    worlds[i] = it == deployments.end() ? make_world(wc) : make_world(wc, it->second);
  });

  std::vector<SchemeSpec> specs;
  for (const auto& name : config.schemes) specs.push_back(resolve_scheme(name, config.mddra));
  result.runs.resize(n_seeds * n_schemes);
  parallel_for(n_seeds * n_schemes, [&](std::size_t i) {
    result.runs[i] = run_horizon(worlds[i / n_schemes], specs[i % n_schemes], config.mddra);
  });
  for (const auto& run : result.runs) result.summary.push_back(summarize(run));
  return result;
}

double seed_mean(const ExperimentResult& result, std::string_view scheme,
                 double SchemeSeedResult::*field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : result.summary) {
    if (s.scheme == scheme) {
      sum += s.*field;
      ++n;
    }
  }
  if (n == 0) throw DomainError("seed_mean: no results for scheme '" + std::string(scheme) + "'");
  return sum / n;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, const std::filesystem::path& dir) {
  config.validate();
  if (config.axes.empty()) throw ConfigError("sweep: no axes given");
  DeploymentMap sites;
  for (auto seed : config.seeds) {
    WorldConfig wc = config.world;
    wc.seed = seed;
    sites.emplace(seed, default_deployment(wc));
  }
  std::filesystem::create_directories(dir);
  std::vector<SweepPoint> points;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& axis : config.axes) {
    for (std::size_t i = 0; i < axis.values.size(); ++i) {
      ExperimentConfig c = config;
      c.axes.clear();
      apply_axis(axis.name, axis.values[i], c.world, c.mddra);
      SweepPoint p;
      p.axis = axis.name;
      p.value = axis.values[i];
      p.file = dir / ("sweep_" + axis.name + "_" + std::to_string(i) + ".csv");
      p.result = run_experiment(c, sites);
      {
        std::ofstream os(p.file, std::ios::binary);
        if (!os) throw std::runtime_error("sweep: cannot write '" + p.file.string() + "'");
        write_csv_header(os);
        for (const auto& run : p.result.runs) {
          for (const auto& r : run.rows) write_csv_row(os, r);
        }
      }
      nlohmann::json schemes = nlohmann::json::object();
      for (const auto& name : c.schemes) {
        const std::string tag = resolve_scheme(name, c.mddra).name;
        schemes[tag] = {{"mean_final_eta_T", seed_mean(p.result, tag)},
                        {"mean_horizon_kappa", seed_mean(p.result, tag, &SchemeSeedResult::horizon_kappa)},
                        {"mean_horizon_d_tot", seed_mean(p.result, tag, &SchemeSeedResult::horizon_d_tot)}};
      }
      index.push_back({{"axis", axis.name},
                       {"value", p.value},
                       {"file", p.file.filename().string()},
                       {"config_hash", p.result.config_hash},
                       {"schemes", schemes}});
      points.push_back(std::move(p));
    }
  }
  std::ofstream os(dir / "sweep.json", std::ios::binary);
  if (!os) throw std::runtime_error("sweep: cannot write sweep.json");
  os << nlohmann::json{{"version", std::string(kVersion)}, {"base_config_hash", config_hash(config)},
                       {"points", index}}
            .dump(2)
     << '\n';
  return points;
}

namespace {

CheckResult check_js_hand_value() {
  const std::vector<double> c{0.5, 0.5}, d{1.0, 0.0};
  const double xi = metrics::js_divergence(c, d).value;
  std::ostringstream os;
  os << "xi = " << xi << " (expected 0.31128)";
  return {"js-two-point", std::abs(xi - 0.31128) <= 1e-5, os.str()};
}

CheckResult check_capacity_bound(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Grid g;
  g.nx = g.ny = 4;
  g.cell_size = 100.0;
  const network::ChannelParams ch;
  network::ResourceLimits lim;
  int violations = 0;
  for (int inst = 0; inst < 100; ++inst) {
    network::Deployment dep;
    const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 5.0);
    for (std::size_t b = 0; b < n; ++b) dep.positions.push_back({uniform01(rng) * g.width(), uniform01(rng) * g.height()});
    network::NetworkConfig cfg(n, 0.0, 0.0);
    double total = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      cfg.bandwidth[b] = uniform01(rng);
      cfg.power[b] = uniform01(rng) * lim.p_max;
      total += cfg.bandwidth[b];
    }
    for (auto& b : cfg.bandwidth) b *= lim.b_max / total;
    const network::ChannelGains gains(dep, g, ch);
    const auto lb = network::capacity_lb_points(cfg, gains, lim);
    const auto ex = network::capacity_exact_points(cfg, gains);
    for (std::size_t j = 0; j < lb.size(); ++j) {
      if (lb[j] > ex[j] * (1.0 + 1e-12)) ++violations;
    }
  }
  return {"capacity-lower-bound", violations == 0, std::to_string(violations) + " violations over 100 instances"};
}

CheckResult check_queue_contraction() {
  std::string detail;
  bool ok = true;
  for (double nu : {0.1, 0.5, 1.0, 1.5, 1.9}) {
    double q = 1.0;
    int steps = 0;
    while (std::abs(q) > 1e-6 && steps < 200) {
      const auto st = lyapunov::queue_drift_step(q, nu);
      if (st.drift > 0.0) ok = false;
      q = st.next;
      ++steps;
    }
    if (std::abs(q) > 1e-6) ok = false;
    detail += (detail.empty() ? "" : ", ") + std::string("nu=") + format_double(nu) + ":" + std::to_string(steps);
  }
  return {"queue-contraction", ok, "steps to 1e-6: " + detail};
}

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.world.scenario.grid.nx = c.world.scenario.grid.ny = 8;
  c.world.scenario.n_roads = 8;
  c.world.scenario.light_positions = {100.0, 200.0, 300.0};
  c.world.scenario.horizon = 6;
  c.world.scenario.red_until = 3;
  c.world.n_bs = 4;
  c.mddra.horizon = 6;
  c.mddra.window = 2;
  c.mddra.max_inner_iters = 3;
  c.mddra.warm_start_epochs = 20;
  c.mddra.pretrain_epochs_first = 20;
  c.mddra.pretrain_epochs = 5;
  c.mddra.finetune_epochs = 5;
  c.schemes = {"mddra"};
  c.seeds = {7};
  return c;
}

CheckResult check_determinism() {
  const ExperimentConfig c = tiny_config();
  std::string out[2];
  for (auto& s : out) {
    const auto r = run_experiment(c);
    std::ostringstream os;
    write_csv(os, r.runs.front().rows);
    s = os.str();
  }
  return {"determinism", out[0] == out[1] && !out[0].empty(), std::to_string(out[0].size()) + " bytes compared"};
}

}  // namespace

std::vector<CheckResult> run_checks(const ExperimentConfig& config) {
  std::vector<CheckResult> out;
  try {
    config.validate();
    out.push_back({"config", true, "hash " + config_hash(config)});
  } catch (const std::exception& e) {
    out.push_back({"config", false, e.what()});
  }
  out.push_back(check_js_hand_value());
  out.push_back(check_capacity_bound(config.seeds.empty() ? 1 : config.seeds.front()));
  out.push_back(check_queue_contraction());
  out.push_back(check_determinism());
  return out;
}

}  // namespace mddra::harness
