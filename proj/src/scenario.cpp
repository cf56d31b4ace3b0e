#include "mddra/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mddra::scenario {

namespace {

void check_density(double rho, const char* what) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    std::ostringstream os;
    os << what << ": density " << rho << " outside [0, 1]";
    throw DomainError(os.str());
  }
}

// Godunov flux for a unimodal flow curve: min(demand upstream, supply downstream).
double godunov_flux(double left, double right, double rho_c, const TrafficParams& p) {
  const double demand = flow(std::min(left, rho_c), p);
  const double supply = flow(std::max(right, rho_c), p);
  return std::min(demand, supply);
}

}  // namespace

void TrafficParams::validate() const {
  if (!(ve > 0.0 && ve <= 1.0)) throw ConfigError("traffic.ve must lie in (0, 1]");
  if (!(ta >= 0.0)) throw ConfigError("traffic.ta must be >= 0");
  if (mu1 < 0.0 || mu2 < 0.0 || theta1 < 0.0 || theta2 < 0.0) {
    throw ConfigError("traffic exponents must be >= 0");
  }
}

double velocity(double rho, const TrafficParams& params) {
  check_density(rho, "velocity");
  return std::pow(1.0 - std::pow(rho, params.mu1), params.mu2) * params.ve;
}

double diffusion(double rho, const TrafficParams& params) {
  check_density(rho, "diffusion");
  return std::pow(rho, params.theta1) * std::pow(1.0 - rho, params.theta2) * params.ta;
}

double flow(double rho, const TrafficParams& params) { return rho * velocity(rho, params); }

double critical_density(const TrafficParams& params) {
  // d/drho [rho (1 - x)^mu2] vanishes at x = rho^mu1 = 1 / (1 + mu1 mu2).
  const double k = params.mu1 * params.mu2;
  if (k <= 0.0 || params.mu1 <= 0.0) return 1.0;
  return std::pow(1.0 / (1.0 + k), 1.0 / params.mu1);
}

LightState::LightState(const Grid& grid)
    : faces_(grid.nx + 1), blocked_(grid.ny * (grid.nx + 1), 0) {}

void LightState::block(std::size_t row, std::size_t face) {
  const std::size_t i = row * faces_ + face;
  if (face >= faces_ || i >= blocked_.size()) throw DomainError("LightState::block: face out of range");
  blocked_[i] = 1;
}

bool LightState::blocked(std::size_t row, std::size_t face) const {
  const std::size_t i = row * faces_ + face;
  return i < blocked_.size() && blocked_[i] != 0;
}

std::size_t LightState::blocked_count() const {
  return static_cast<std::size_t>(std::count(blocked_.begin(), blocked_.end(), std::uint8_t{1}));
}

double max_stable_dt(const TrafficParams& params) {
  // Largest chord slope of the flow curve bounds the characteristic speed.
  constexpr int kSamples = 2000;
  double max_speed = params.ve;
  double max_g = 0.0;
  double prev = flow(0.0, params);
  for (int i = 1; i <= kSamples; ++i) {
    const double rho = static_cast<double>(i) / kSamples;
    const double q = flow(rho, params);
    max_speed = std::max(max_speed, std::abs(q - prev) * kSamples);
    prev = q;
    max_g = std::max(max_g, diffusion(rho, params));
  }
  const double denom = max_speed + 2.0 * max_g;
  return denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
}

DensityField step_density(const DensityField& field, const TrafficParams& params, double dt,
                          const LightState& lights, Boundary downstream, StepReport* report) {
  const double dt_max = max_stable_dt(params);
  if (!(dt > 0.0) || dt > dt_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "step_density: dt = " << dt << " violates the stability bound; max admissible dt = "
       << dt_max;
    throw ConfigError(os.str());
  }
  const Grid& g = field.grid;
  const double rho_c = critical_density(params);
  DensityField next = field;
  std::vector<double> flux(g.nx + 1);
  StepReport local;

  for (std::size_t row = 0; row < g.ny; ++row) {
    const double* rho = field.values.data() + row * g.nx;
    flux[0] = 0.0;
    for (std::size_t f = 1; f < g.nx; ++f) {
      if (lights.blocked(row, f)) {
        flux[f] = 0.0;
        continue;
      }
      const double l = rho[f - 1];
      const double r = rho[f];
      const double conv = godunov_flux(l, r, rho_c, params);
      const double g_face = 0.5 * (diffusion(l, params) + diffusion(r, params));
      flux[f] = conv - g_face * (r - l);
    }
    const double last = rho[g.nx - 1];
    if (downstream == Boundary::kPeriodic) {
      const bool open = !lights.blocked(row, g.nx) && !lights.blocked(row, 0);
      const double wrap = open ? godunov_flux(last, rho[0], rho_c, params) -
                                     0.5 * (diffusion(last, params) + diffusion(rho[0], params)) *
                                         (rho[0] - last)
                               : 0.0;
      flux[0] = wrap;
      flux[g.nx] = wrap;
    } else {
      flux[g.nx] = (downstream == Boundary::kOutflow && !lights.blocked(row, g.nx))
                       ? flow(std::min(last, rho_c), params)
                       : 0.0;
      local.outflow += dt * flux[g.nx];
    }

    double* out = next.values.data() + row * g.nx;
    for (std::size_t c = 0; c < g.nx; ++c) {
      double v = rho[c] - dt * (flux[c + 1] - flux[c]);
      if (v < 0.0 || v > 1.0) {
        ++local.clamp_events;
        v = std::clamp(v, 0.0, 1.0);
      }
      out[c] = v;
    }
  }
  if (report != nullptr) {
    report->clamp_events += local.clamp_events;
    report->outflow += local.outflow;
  }
  return next;
}

const std::vector<DemandComponent>& DemandSpec::components_for(std::size_t cell) const {
  const std::size_t cls = cell_class.empty() ? 0 : cell_class.at(cell);
  return classes.at(cls);
}

double demand_value(const std::vector<DemandComponent>& components, int tau) {
  double d = 0.0;
  for (const auto& c : components) d += c.amplitude * std::sin(c.frequency * tau + c.phase);
  return std::max(d, 0.0);
}

double demand_at(Vec2 location, int tau, const DemandSpec& spec) {
  return demand_value(spec.components_for(spec.grid.locate(location)), tau);
}

TrafficField traffic_at(const DensityField& density, const DemandSpec& spec, int tau) {
  if (!(density.grid == spec.grid) ||
      (!spec.cell_class.empty() && spec.cell_class.size() != density.size())) {
    throw ShapeError("traffic_at: density and demand grids differ");
  }
  TrafficField out(density.grid, 0.0, tau);
  for (std::size_t i = 0; i < density.size(); ++i) {
    out[i] = density[i] * demand_value(spec.components_for(i), tau);
  }
  return out;
}

std::size_t populated_cells(const DensityField& density) {
  return static_cast<std::size_t>(
      std::count_if(density.values.begin(), density.values.end(), [](double r) { return r > 0.0; }));
}

TrafficSample sample_profile(const TrafficField& traffic, const DensityField& density,
                             std::size_t n_users, std::uint64_t seed) {
  require_same_grid(traffic, density, "sample_profile");
  const std::size_t populated = populated_cells(density);
  if (n_users > populated) {
    std::ostringstream os;
    os << "sample_profile: n_users = " << n_users << " exceeds populated cells " << populated;
    throw DomainError(os.str());
  }
  TrafficSample sample;
  sample.timestamp = traffic.timestamp;
  if (n_users == 0) return sample;

  // Efraimidis-Spirakis keys: log(u) / w, keep the n largest.
  std::mt19937_64 rng(seed);
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(populated);
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double u = uniform01(rng);
    if (density[i] <= 0.0) continue;
    keys.emplace_back(std::log(std::max(u, 1e-300)) / density[i], i);
  }
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_users), keys.end(),
                    [](const auto& a, const auto& b) {
                      return a.first > b.first || (a.first == b.first && a.second < b.second);
                    });
  std::vector<std::size_t> cells(n_users);
  for (std::size_t k = 0; k < n_users; ++k) cells[k] = keys[k].second;
  std::sort(cells.begin(), cells.end());
  sample.entries.reserve(n_users);
  for (std::size_t cell : cells) {
    sample.entries.push_back({traffic.grid.center(cell), cell, traffic[cell]});
  }
  return sample;
}

void ScenarioConfig::validate() const {
  if (grid.nx == 0 || grid.ny == 0 || !(grid.cell_size > 0.0)) {
    throw ConfigError("scenario.grid must have positive size");
  }
  if (horizon < 1) throw ConfigError("scenario.horizon must be >= 1");
  if (red_until < 0 || red_until > horizon) {
    throw ConfigError("scenario.red_until must lie in [0, horizon]");
  }
  if (!(peak_density >= 0.0 && peak_density <= 1.0)) {
    throw ConfigError("scenario.peak_density must lie in [0, 1]");
  }
  if (n_roads * lanes_per_road > grid.ny) {
    std::ostringstream os;
    os << "scenario: area too small for " << n_roads << " roads x " << lanes_per_road
       << " lanes on " << grid.ny << " grid rows";
    throw ConfigError(os.str());
  }
  for (double x : light_positions) {
    if (x <= grid.origin.x || x > grid.origin.x + grid.width()) {
      throw ConfigError("scenario.light_positions must lie inside the area");
    }
  }
  for (const auto& c : demand) {
    if (c.amplitude < 0.0) throw ConfigError("scenario.demand amplitudes must be >= 0");
  }
}

Scenario build_intersection_scenario(const ScenarioConfig& config) {
  config.validate();
  const Grid& g = config.grid;
  Scenario s;
  s.initial = DensityField(g, 0.0, 0);
  s.demand.grid = g;
  s.demand.classes = {config.demand};
  s.downstream = config.downstream;
  s.lights.red = LightState(g);
  s.lights.green = LightState(g);
  s.lights.red_until = config.red_until;
  if (config.n_roads == 0) return s;

  std::vector<std::size_t> faces;
  for (double x : config.light_positions) {
    const auto f = static_cast<std::size_t>(std::lround((x - g.origin.x) / g.cell_size));
    faces.push_back(std::clamp<std::size_t>(f, 1, g.nx));
  }
  std::sort(faces.begin(), faces.end());
  faces.erase(std::unique(faces.begin(), faces.end()), faces.end());

  const std::size_t spacing = g.ny / config.n_roads;
  const std::size_t pad = (spacing - config.lanes_per_road) / 2;
  for (std::size_t road = 0; road < config.n_roads; ++road) {
    for (std::size_t lane = 0; lane < config.lanes_per_road; ++lane) {
      const std::size_t row = road * spacing + pad + lane;
      s.road_rows.push_back(row);
      std::size_t start = 0;
      for (std::size_t f : faces) {
        s.lights.red.block(row, f);
        // Linear ramp rising toward the light from the upstream end of the segment.
        const double len = static_cast<double>(f - start);
        for (std::size_t c = start; c < f; ++c) {
          s.initial[g.index(row, c)] =
              config.peak_density * static_cast<double>(c - start + 1) / len;
        }
        start = f;
      }
    }
  }
  return s;
}

int min_substeps(const TrafficParams& params) {
  const double dt = max_stable_dt(params);
  return std::max(1, static_cast<int>(std::ceil(1.0 / dt - 1e-12)));
}

Evolution simulate(const Scenario& scenario, const TrafficParams& params, int horizon,
                   int substeps) {
  params.validate();
  if (horizon < 1) throw ConfigError("simulate: horizon must be >= 1");
  if (substeps < 1) throw ConfigError("simulate: substeps must be >= 1");
  const double dt = 1.0 / substeps;
  Evolution ev;
  ev.substeps = substeps;
  DensityField rho = scenario.initial;
  StepReport report;
  for (int tau = 0; tau < horizon; ++tau) {
    rho.timestamp = tau;
    ev.density.push_back(rho);
    ev.traffic.push_back(traffic_at(rho, scenario.demand, tau));
    for (int k = 0; k < substeps; ++k) {
      rho = step_density(rho, params, dt, scenario.lights.at(tau), scenario.downstream, &report);
    }
  }
  ev.clamp_events = report.clamp_events;
  return ev;
}

Field time_average(const std::vector<Field>& series, std::size_t begin, std::size_t end) {
  if (series.empty() || begin >= end || end > series.size()) {
    throw DomainError("time_average: empty range");
  }
  Field avg(series[begin].grid, 0.0, series[begin].timestamp);
  for (std::size_t t = begin; t < end; ++t) {
    require_same_grid(avg, series[t], "time_average");
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += series[t][i];
  }
  const double n = static_cast<double>(end - begin);
  for (double& v : avg.values) v /= n;
  return avg;
}

}  // namespace mddra::scenario
