#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "mddra/harness.hpp"

namespace mddra::harness {

namespace {

void require(bool ok, const char* column, double v) {
  if (!ok) throw NumericError(std::string("emit: column '") + column + "' out of range (" + format_double(v) + ")");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("emit: cannot write '" + path.string() + "'");
  return os;
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"scheme", "seed",   "tau",     "k",      "eta_tau", "eta_T",
                                             "lambda", "q_zeta", "q_kappa", "q_eta",  "xi",      "kappa",
                                             "c_tot",  "d_tot",  "p_t",     "zeta",   "wall_ms"};
  return cols;
}

std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericError("format_double: conversion failed");
  return std::string(buf, ptr);
}

void check_row(const TraceRow& r) {
  const double values[] = {r.eta_tau, r.eta_T, r.lambda, r.q_zeta, r.q_kappa, r.q_eta, r.xi,
                           r.kappa,   r.c_tot, r.d_tot,  r.p_t,    r.zeta,    r.wall_ms};
  const char* names[] = {"eta_tau", "eta_T", "lambda", "q_zeta", "q_kappa", "q_eta", "xi",
                         "kappa",   "c_tot", "d_tot",  "p_t",    "zeta",    "wall_ms"};
  for (std::size_t i = 0; i < std::size(values); ++i) require(std::isfinite(values[i]), names[i], values[i]);
  require(r.tau >= 0, "tau", r.tau);
  require(r.k >= 0, "k", r.k);
  require(r.eta_tau >= 0.0, "eta_tau", r.eta_tau);
  require(r.eta_T >= 0.0, "eta_T", r.eta_T);
  require(r.xi >= 0.0 && r.xi <= 1.0, "xi", r.xi);
  require(r.kappa >= 0.0, "kappa", r.kappa);
  require(r.zeta >= 0.0 && r.zeta <= 1.0, "zeta", r.zeta);
  require(r.c_tot >= 0.0, "c_tot", r.c_tot);
  require(r.d_tot >= 0.0, "d_tot", r.d_tot);
  require(r.p_t >= 0.0, "p_t", r.p_t);
  require(r.wall_ms >= 0.0, "wall_ms", r.wall_ms);
}

void write_csv_header(std::ostream& os) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

void write_csv_row(std::ostream& os, const TraceRow& r) {
  check_row(r);
  os << r.scheme << ',' << r.seed << ',' << r.tau << ',' << r.k;
  for (double v : {r.eta_tau, r.eta_T, r.lambda, r.q_zeta, r.q_kappa, r.q_eta, r.xi, r.kappa, r.c_tot,
                   r.d_tot, r.p_t, r.zeta, r.wall_ms}) {
    os << ',' << format_double(v);
  }
  os << '\n';
}

void write_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  write_csv_header(os);
  for (const auto& r : rows) write_csv_row(os, r);
}

void emit_results(const ExperimentResult& result, const ExperimentConfig& config,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  using nlohmann::json;
  json schemes = json::array();
  for (const auto& name : config.schemes) {
    const std::string tag = resolve_scheme(name, config.mddra).name;
    std::vector<TraceRow> rows;
    for (const auto& run : result.runs) {
      if (run.scheme == tag) rows.insert(rows.end(), run.rows.begin(), run.rows.end());
    }
    auto os = open_out(dir / (tag + ".csv"));
    write_csv(os, rows);
    json seeds = json::array();
    bool queues_ok = true;
    for (const auto& s : result.summary) {
      if (s.scheme != tag) continue;
      seeds.push_back({{"seed", s.seed},
                       {"final_eta_T", s.final_eta_T},
                       {"final_kappa", s.final_kappa},
                       {"final_zeta", s.final_zeta},
                       {"horizon_kappa", s.horizon_kappa},
                       {"horizon_d_tot", s.horizon_d_tot},
                       {"eta_full", s.eta_full},
                       {"final_queue_max", s.final_queue_max},
                       {"running_queue_max", s.running_queue_max},
                       {"non_converged", s.non_converged}});
      if (s.final_queue_max > 0.01 * s.running_queue_max) queues_ok = false;
    }
    schemes.push_back({{"scheme", tag},
                       {"mean_final_eta_T", seed_mean(result, tag)},
                       {"seeds", seeds},
                       {"queue_convergence", queues_ok}});
  }
  json summary = {{"version", std::string(kVersion)},
                  {"config_hash", result.config_hash},
                  {"columns", csv_columns()},
                  {"schemes", schemes},
                  {"invariants", {{"range_checks", true}}}};  // a failed check throws before this point
  auto os = open_out(dir / "summary.json");
  os << summary.dump(2) << '\n';
}

void emit_traffic(const World& world, std::ostream& os) {
  os << "tau,cell,x,y,density,demand\n";
  const Grid& g = world.grid();
  for (std::size_t t = 0; t < world.evolution.traffic.size(); ++t) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      const Vec2 c = g.center(j);
      os << t << ',' << j << ',' << format_double(c.x) << ',' << format_double(c.y) << ','
         << format_double(world.evolution.density[t][j]) << ',' << format_double(world.evolution.traffic[t][j])
         << '\n';
    }
  }
}

}  // namespace mddra::harness
