#pragma once

#include <cstdint>
#include <vector>

#include "mddra/common.hpp"

namespace mddra::scenario {

/// Parameters of the macroscopic traffic model. Speeds are in cells per slot,
/// so the PDE is stepped with a unit cell width.
struct TrafficParams {
  double ve = 0.5;  // normalized equilibrium speed, (0, 1]
  double ta = 0.2;  // normalized anticipation time, >= 0
  double mu1 = 2.05;
  double mu2 = 21.11;
  double theta1 = 1.0;
  double theta2 = 1.0;

  void validate() const;
};

/// f(rho) = (1 - rho^mu1)^mu2 * V_e.
double velocity(double rho, const TrafficParams& params);
/// g(rho) = rho^theta1 (1 - rho)^theta2 * T_a.
double diffusion(double rho, const TrafficParams& params);
/// Flow rho * f(rho).
double flow(double rho, const TrafficParams& params);
/// Density maximizing the flow.
double critical_density(const TrafficParams& params);

/// Normalized user density in [0, 1] per cell. Each grid row is one lane with
/// flow in the +x direction.
using DensityField = Field;
/// Traffic demand D = rho * d per cell.
using TrafficField = Field;

/// Downstream treatment of each lane: zero flux, free outflow, or a ring
/// joining the last cell back to the first.
enum class Boundary { kClosed, kOutflow, kPeriodic };

/// Blocked cell faces. Face f of a row lies between columns f-1 and f, so a
/// row has nx + 1 faces and face nx is the downstream boundary.
class LightState {
 public:
  LightState() = default;
  explicit LightState(const Grid& grid);

  void block(std::size_t row, std::size_t face);
  [[nodiscard]] bool blocked(std::size_t row, std::size_t face) const;
  [[nodiscard]] std::size_t blocked_count() const;

 private:
  std::size_t faces_ = 0;
  std::vector<std::uint8_t> blocked_;
};

struct StepReport {
  std::size_t clamp_events = 0;
  double outflow = 0.0;  // density mass that left through the downstream boundary
};

/// Largest dt for which the explicit scheme is stable (unit cell width).
double max_stable_dt(const TrafficParams& params);

/// One explicit finite-volume step: Godunov (demand/supply) upwind convection,
/// central diffusion, zero flux through blocked faces and (unless periodic) the upstream boundary.
DensityField step_density(const DensityField& field, const TrafficParams& params, double dt,
                          const LightState& lights, Boundary downstream = Boundary::kClosed,
                          StepReport* report = nullptr);

struct DemandComponent {
  double amplitude = 0.0;  // bits/s
  double frequency = 0.0;  // rad/slot
  double phase = 0.0;      // rad
};

/// Sinusoid superposition per cell class. With cell_class empty every cell uses class 0.
struct DemandSpec {
  Grid grid;
  std::vector<std::vector<DemandComponent>> classes;
  std::vector<std::size_t> cell_class;

  [[nodiscard]] const std::vector<DemandComponent>& components_for(std::size_t cell) const;
};

/// Sum of d_i sin(phi_i tau + phi0_i), clamped at zero.
double demand_at(Vec2 location, int tau, const DemandSpec& spec);
double demand_value(const std::vector<DemandComponent>& components, int tau);

TrafficField traffic_at(const DensityField& density, const DemandSpec& spec, int tau);

struct SampleEntry {
  Vec2 location;
  std::size_t cell = 0;
  double demand = 0.0;
};

/// Incomplete traffic profile reported by volunteer users.
struct TrafficSample {
  std::vector<SampleEntry> entries;
  int timestamp = 0;
  [[nodiscard]] std::size_t count() const { return entries.size(); }
};

std::size_t populated_cells(const DensityField& density);

/// Draws n_users distinct populated cells with probability proportional to
/// density (weighted sampling without replacement); entries are in cell order.
TrafficSample sample_profile(const TrafficField& traffic, const DensityField& density,
                             std::size_t n_users, std::uint64_t seed);

struct ScenarioConfig {
  Grid grid;
  std::size_t n_roads = 20;
  std::size_t lanes_per_road = 1;
  std::vector<double> light_positions{250.0, 500.0, 750.0, 1000.0};  // meters along x
  int red_until = 10;   // lights red on [0, red_until), green afterwards
  int horizon = 30;
  double peak_density = 0.9;
  Boundary downstream = Boundary::kOutflow;
  std::vector<DemandComponent> demand{{4.0e7, 0.0, 1.5707963267948966},
                                      {8.0e6, 0.20943951023931956, 0.0}};

  void validate() const;
};

struct LightSchedule {
  LightState red;
  LightState green;
  int red_until = 0;
  [[nodiscard]] const LightState& at(int tau) const { return tau < red_until ? red : green; }
};

struct Scenario {
  DensityField initial;
  DemandSpec demand;
  LightSchedule lights;
  Boundary downstream = Boundary::kOutflow;
  std::vector<std::size_t> road_rows;
};

Scenario build_intersection_scenario(const ScenarioConfig& config);

struct Evolution {
  std::vector<DensityField> density;  // one per slot, tau = 0 .. horizon-1
  std::vector<TrafficField> traffic;
  std::size_t clamp_events = 0;
  int substeps = 1;
};

/// Smallest substep count satisfying the stability bound for one-slot advances.
int min_substeps(const TrafficParams& params);

/// Evolves the scenario over the horizon, `substeps` explicit steps per slot.
/// A substep count violating the stability bound raises ConfigError.
Evolution simulate(const Scenario& scenario, const TrafficParams& params, int horizon,
                   int substeps);

/// Cell-wise time average of a series of fields.
Field time_average(const std::vector<Field>& series, std::size_t begin, std::size_t end);

}  // namespace mddra::scenario
