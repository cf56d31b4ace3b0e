#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mddra/common.hpp"

namespace mddra::network {

/// Channel and power model constants, all SI.
struct ChannelParams {
  double alpha = 3.8;                      // pathloss exponent
  double gamma = 3162.2776601683795;       // 10^3.5 per m^alpha
  double beta = 3162.2776601683795;        // 10^3.5, pathloss floor
  double sigma2 = 3.9810717055349565e-21;  // -174 dBm/Hz in W/Hz
  double chi_db = 10.0;                    // shadowing standard deviation
  double lambda = 1.0 / 0.38;              // amplifier coefficient
  double p_circuit = 5.0;                  // static circuit power per BS, W

  /// Pathloss of the form intercept_db + slope_db * log10(d): alpha = slope / 10,
  /// gamma = beta = 10^(intercept / 10).
  static ChannelParams from_db_model(double intercept_db, double slope_db);
  void validate() const;
};

struct ResourceLimits {
  double b_max = 360e6;  // Hz, total over all BSs
  double p_max = 1.0;    // W, per BS
  double b_min = 0.0;    // Hz, per BS floor used by the projection

  void validate() const;
};

/// Per-BS bandwidth and transmit power for one slot.
struct NetworkConfig {
  std::vector<double> bandwidth;  // Hz
  std::vector<double> power;      // W
  int timestamp = 0;

  NetworkConfig() = default;
  NetworkConfig(std::size_t n_bs, double b, double p, int tau = 0)
      : bandwidth(n_bs, b), power(n_bs, p), timestamp(tau) {}
  [[nodiscard]] std::size_t size() const { return bandwidth.size(); }
};

/// Even split of the bandwidth budget with every BS at maximum power.
NetworkConfig full_power_config(std::size_t n_bs, const ResourceLimits& limits, int tau = 0);
bool is_feasible(const NetworkConfig& config, const ResourceLimits& limits, double tol = 1e-9);
/// B <- max(B, b_min), excess above b_min rescaled so sum B <= B_max; P clamped to [0, P_max].
void project_feasible(NetworkConfig& config, const ResourceLimits& limits);

struct Deployment {
  std::vector<Vec2> positions;
  double adjacency_threshold = 0.0;  // meters
  [[nodiscard]] std::size_t size() const { return positions.size(); }
};

/// 1.5 x the median nearest-neighbour distance (0 for a single BS).
double default_adjacency_threshold(std::span<const Vec2> positions);

/// gamma * |L - L_n|^alpha + beta, scaled by 10^(shadow_db / 10).
double pathloss(Vec2 location, Vec2 bs, const ChannelParams& params, double shadow_db = 0.0);

/// Shannon capacity at one location (bits/s). Terms with zero bandwidth contribute 0.
double capacity_exact(const NetworkConfig& config, Vec2 location, const Deployment& deployment,
                      const ChannelParams& params);
/// Lower bound with B_max in the noise term (the RBF head form).
double capacity_lb(const NetworkConfig& config, Vec2 location, const Deployment& deployment,
                   const ChannelParams& params, const ResourceLimits& limits);

/// Sum over BSs of lambda * P_n + P_c.
double total_power(const NetworkConfig& config, const ChannelParams& params);

/// i.i.d. N(0, chi^2) dB offsets per (BS, cell), row-major by BS.
std::vector<double> sample_shadowing(const Deployment& deployment, const Grid& grid, double chi_db,
                                     std::uint64_t seed);

/// Precomputed 1 / (L * sigma^2) for every (BS, point) pair.
class ChannelGains {
 public:
  ChannelGains() = default;
  /// Gains at every cell centre of `grid`; `shadow_db` (BS-major) may be empty.
  ChannelGains(const Deployment& deployment, const Grid& grid, const ChannelParams& params,
               std::span<const double> shadow_db = {});
  /// Gains at arbitrary points, unshadowed.
  ChannelGains(const Deployment& deployment, std::span<const Vec2> points,
               const ChannelParams& params);

  [[nodiscard]] std::size_t n_bs() const { return n_bs_; }
  [[nodiscard]] std::size_t n_points() const { return n_points_; }
  [[nodiscard]] double operator()(std::size_t bs, std::size_t point) const {
    return gain_[bs * n_points_ + point];
  }
  [[nodiscard]] const double* row(std::size_t bs) const { return gain_.data() + bs * n_points_; }
  /// Gains restricted to a subset of points.
  [[nodiscard]] ChannelGains subset(std::span<const std::size_t> points) const;

 private:
  std::size_t n_bs_ = 0;
  std::size_t n_points_ = 0;
  std::vector<double> gain_;
};

/// Capacity lower bound at every point of `gains`.
std::vector<double> capacity_lb_points(const NetworkConfig& config, const ChannelGains& gains,
                                       const ResourceLimits& limits);
/// Exact capacity at every point of `gains`.
std::vector<double> capacity_exact_points(const NetworkConfig& config, const ChannelGains& gains);

Field capacity_lb_field(const NetworkConfig& config, const ChannelGains& gains, const Grid& grid,
                        const ResourceLimits& limits, int tau = 0);
Field capacity_exact_field(const NetworkConfig& config, const ChannelGains& gains,
                           const Grid& grid, int tau = 0);

struct DeployOptions {
  double min_separation = 12.5;  // meters
  std::size_t max_attempts_per_bs = 2000;
  double adjacency_threshold = 0.0;  // meters; 0 derives it from the BS spacing
};

/// Places BSs with cell probability proportional to `traffic` and a uniform
/// position inside the chosen cell, rejecting placements closer than
/// min_separation to an existing BS.
Deployment deploy(std::size_t n_bs, const Field& traffic, std::uint64_t seed,
                  const DeployOptions& options = {});

}  // namespace mddra::network
