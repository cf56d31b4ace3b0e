#include "mddra/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mddra::network {

ChannelParams ChannelParams::from_db_model(double intercept_db, double slope_db) {
  ChannelParams p;
  p.alpha = slope_db / 10.0;
  p.gamma = std::pow(10.0, intercept_db / 10.0);
  p.beta = p.gamma;
  return p;
}

void ChannelParams::validate() const {
  if (!(alpha >= 2.0)) throw ConfigError("channel.alpha must be >= 2");
  if (!(beta > 0.0) || !(gamma > 0.0)) throw ConfigError("channel.beta and channel.gamma must be > 0");
  if (!(sigma2 > 0.0)) throw ConfigError("channel.sigma2 must be > 0");
  if (!(chi_db >= 0.0)) throw ConfigError("channel.chi must be >= 0");
  if (!(lambda >= 1.0)) throw ConfigError("channel.lambda must be >= 1");
  if (!(p_circuit >= 0.0)) throw ConfigError("channel.p_circuit must be >= 0");
}

void ResourceLimits::validate() const {
  if (!(b_max > 0.0)) throw ConfigError("limits.b_max must be > 0");
  if (!(p_max > 0.0)) throw ConfigError("limits.p_max must be > 0");
  if (!(b_min >= 0.0)) throw ConfigError("limits.b_min must be >= 0");
}

NetworkConfig full_power_config(std::size_t n_bs, const ResourceLimits& limits, int tau) {
  const double b = n_bs > 0 ? limits.b_max / static_cast<double>(n_bs) : 0.0;
  return NetworkConfig(n_bs, b, limits.p_max, tau);
}

bool is_feasible(const NetworkConfig& config, const ResourceLimits& limits, double tol) {
  double sum_b = 0.0;
  for (std::size_t n = 0; n < config.size(); ++n) {
    if (config.bandwidth[n] < -tol || config.power[n] < -tol) return false;
    if (config.power[n] > limits.p_max * (1.0 + tol)) return false;
    sum_b += config.bandwidth[n];
  }
  return sum_b <= limits.b_max * (1.0 + tol);
}

void project_feasible(NetworkConfig& config, const ResourceLimits& limits) {
  const std::size_t n = config.size();
  if (static_cast<double>(n) * limits.b_min > limits.b_max) {
    std::ostringstream os;
    os << "project_feasible: " << n << " x b_min = " << static_cast<double>(n) * limits.b_min
       << " Hz exceeds b_max = " << limits.b_max << " Hz";
    throw ConfigError(os.str());
  }
  double excess = 0.0;
  for (double& b : config.bandwidth) {
    b = std::max(b, limits.b_min);
    excess += b - limits.b_min;
  }
  const double budget = limits.b_max - static_cast<double>(n) * limits.b_min;
  if (excess > budget && excess > 0.0) {
    const double scale = budget / excess;
    for (double& b : config.bandwidth) b = limits.b_min + (b - limits.b_min) * scale;
  }
  for (double& p : config.power) p = std::clamp(p, 0.0, limits.p_max);
}

double default_adjacency_threshold(std::span<const Vec2> positions) {
  if (positions.size() < 2) return 0.0;
  std::vector<double> nn(positions.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (i != j) nn[i] = std::min(nn[i], distance(positions[i], positions[j]));
    }
  }
  const auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  double median = *mid;
  if (nn.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(nn.begin(), mid));
  }
  return 1.5 * median;
}

double pathloss(Vec2 location, Vec2 bs, const ChannelParams& params, double shadow_db) {
  const double d = distance(location, bs);
  return (params.gamma * std::pow(d, params.alpha) + params.beta) * db_to_linear(shadow_db);
}

double capacity_exact(const NetworkConfig& config, Vec2 location, const Deployment& deployment,
                      const ChannelParams& params) {
  double c = 0.0;
  for (std::size_t n = 0; n < config.size(); ++n) {
    const double b = config.bandwidth[n];
    if (b <= 0.0) continue;
    const double rx = config.power[n] / pathloss(location, deployment.positions[n], params);
    c += b * std::log2(1.0 + rx / (params.sigma2 * b));
  }
  return c;
}

double capacity_lb(const NetworkConfig& config, Vec2 location, const Deployment& deployment,
                   const ChannelParams& params, const ResourceLimits& limits) {
  double c = 0.0;
  for (std::size_t n = 0; n < config.size(); ++n) {
    const double b = config.bandwidth[n];
    if (b <= 0.0) continue;
    const double rx = config.power[n] / pathloss(location, deployment.positions[n], params);
    c += b * std::log2(1.0 + rx / (params.sigma2 * limits.b_max));
  }
  return c;
}

double total_power(const NetworkConfig& config, const ChannelParams& params) {
  double p = 0.0;
  for (double pn : config.power) p += params.lambda * pn + params.p_circuit;
  return p;
}

std::vector<double> sample_shadowing(const Deployment& deployment, const Grid& grid, double chi_db,
                                     std::uint64_t seed) {
  if (chi_db < 0.0) throw DomainError("sample_shadowing: chi must be >= 0");
  std::vector<double> out(deployment.size() * grid.size(), 0.0);
  if (chi_db == 0.0) return out;
  std::mt19937_64 rng(seed);
  for (double& v : out) v = chi_db * standard_normal(rng);
  return out;
}

ChannelGains::ChannelGains(const Deployment& deployment, const Grid& grid,
                           const ChannelParams& params, std::span<const double> shadow_db)
    : n_bs_(deployment.size()), n_points_(grid.size()), gain_(n_bs_ * n_points_) {
  if (!shadow_db.empty() && shadow_db.size() != gain_.size()) {
    throw ShapeError("ChannelGains: shadowing field has wrong size");
  }
  for (std::size_t n = 0; n < n_bs_; ++n) {
    for (std::size_t j = 0; j < n_points_; ++j) {
      const std::size_t k = n * n_points_ + j;
      const double s = shadow_db.empty() ? 0.0 : shadow_db[k];
      gain_[k] = 1.0 / (pathloss(grid.center(j), deployment.positions[n], params, s) * params.sigma2);
    }
  }
}

ChannelGains::ChannelGains(const Deployment& deployment, std::span<const Vec2> points,
                           const ChannelParams& params)
    : n_bs_(deployment.size()), n_points_(points.size()), gain_(n_bs_ * n_points_) {
  for (std::size_t n = 0; n < n_bs_; ++n) {
    for (std::size_t j = 0; j < n_points_; ++j) {
      gain_[n * n_points_ + j] =
          1.0 / (pathloss(points[j], deployment.positions[n], params) * params.sigma2);
    }
  }
}

ChannelGains ChannelGains::subset(std::span<const std::size_t> points) const {
  ChannelGains out;
  out.n_bs_ = n_bs_;
  out.n_points_ = points.size();
  out.gain_.resize(n_bs_ * points.size());
  for (std::size_t n = 0; n < n_bs_; ++n) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      out.gain_[n * points.size() + j] = (*this)(n, points[j]);
    }
  }
  return out;
}

std::vector<double> capacity_lb_points(const NetworkConfig& config, const ChannelGains& gains,
                                       const ResourceLimits& limits) {
  if (config.size() != gains.n_bs()) throw ShapeError("capacity_lb_points: BS count mismatch");
  std::vector<double> c(gains.n_points(), 0.0);
  constexpr double kInvLn2 = 1.4426950408889634;
  for (std::size_t n = 0; n < config.size(); ++n) {
    const double b = config.bandwidth[n];
    if (b <= 0.0) continue;
    const double k = config.power[n] / limits.b_max;
    const double* g = gains.row(n);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += b * kInvLn2 * std::log1p(k * g[j]);
  }
  return c;
}

std::vector<double> capacity_exact_points(const NetworkConfig& config, const ChannelGains& gains) {
  if (config.size() != gains.n_bs()) throw ShapeError("capacity_exact_points: BS count mismatch");
  std::vector<double> c(gains.n_points(), 0.0);
  constexpr double kInvLn2 = 1.4426950408889634;
  for (std::size_t n = 0; n < config.size(); ++n) {
    const double b = config.bandwidth[n];
    if (b <= 0.0) continue;
    const double k = config.power[n] / b;
    const double* g = gains.row(n);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += b * kInvLn2 * std::log1p(k * g[j]);
  }
  return c;
}

Field capacity_lb_field(const NetworkConfig& config, const ChannelGains& gains, const Grid& grid,
                        const ResourceLimits& limits, int tau) {
  if (gains.n_points() != grid.size()) throw ShapeError("capacity_lb_field: grid mismatch");
  Field f(grid, 0.0, tau);
  f.values = capacity_lb_points(config, gains, limits);
  return f;
}

Field capacity_exact_field(const NetworkConfig& config, const ChannelGains& gains,
                           const Grid& grid, int tau) {
  if (gains.n_points() != grid.size()) throw ShapeError("capacity_exact_field: grid mismatch");
  Field f(grid, 0.0, tau);
  f.values = capacity_exact_points(config, gains);
  return f;
}

Deployment deploy(std::size_t n_bs, const Field& traffic, std::uint64_t seed,
                  const DeployOptions& options) {
  if (n_bs < 1) throw ConfigError("deploy: n_bs must be >= 1");
  const Grid& g = traffic.grid;
  std::vector<double> cdf(traffic.size());
  double total = 0.0;
  for (std::size_t i = 0; i < traffic.size(); ++i) {
    total += std::max(traffic[i], 0.0);
    cdf[i] = total;
  }
  if (!(total > 0.0)) throw ConfigError("deploy: traffic field has no mass");

  std::mt19937_64 rng(seed);
  Deployment d;
  const std::size_t max_attempts = options.max_attempts_per_bs * n_bs;
  std::size_t attempts = 0;
  while (d.positions.size() < n_bs) {
    if (attempts++ >= max_attempts) {
      std::ostringstream os;
      os << "deploy: could not place " << n_bs << " BSs with separation "
         << options.min_separation << " m (placed " << d.positions.size() << ")";
      throw ConfigError(os.str());
    }
    const double u = uniform01(rng) * total;
    const auto cell = static_cast<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const std::size_t idx = std::min(cell, cdf.size() - 1);
    const Vec2 c = g.center(idx);
    const Vec2 p{c.x + (uniform01(rng) - 0.5) * g.cell_size,
                 c.y + (uniform01(rng) - 0.5) * g.cell_size};
    const bool too_close = std::any_of(d.positions.begin(), d.positions.end(), [&](Vec2 q) {
      return distance(p, q) < options.min_separation;
    });
    if (!too_close) d.positions.push_back(p);
  }
  d.adjacency_threshold = options.adjacency_threshold > 0.0 ? options.adjacency_threshold
                                                            : default_adjacency_threshold(d.positions);
  return d;
}

}  // namespace mddra::network
