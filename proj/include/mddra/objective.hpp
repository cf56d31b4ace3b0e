#pragma once

#include <vector>

#include "mddra/lyapunov.hpp"
#include "mddra/network.hpp"

namespace mddra {

/// Normalization of the slot aggregates: capacity and traffic totals are
/// divided by `traffic`, total power by `power`.
struct Scale {
  double traffic = 1.0;
  double power = 1.0;
};

enum class CapacityModel { kLowerBound, kExact };

/// Normalized slot aggregates at a config and, optionally, their gradients
/// with respect to B_n (per Hz) and P_n (per W).
struct SlotEval {
  lyapunov::SlotTerms terms;  // eta left at 0
  bool degenerate = false;    // zero capacity or zero traffic: xi fixed at 1
  std::vector<double> dc_db, dc_dp;
  std::vector<double> dxi_db, dxi_dp;
  double dp_dp = 0.0;  // d P_T / d P_n, identical for every BS

  /// Gradient of min{C, D}: the capacity branch only when C < D.
  [[nodiscard]] double matched_grad(const std::vector<double>& dc, std::size_t n) const {
    return terms.c_tot < terms.d_tot ? dc[n] : 0.0;
  }
};

/// Capacity, traffic match, divergence and power of one slot as seen by an optimizer.
class SlotObjective {
 public:
  SlotObjective(network::ChannelGains gains, std::vector<double> traffic, double cell_area,
                network::ChannelParams params, network::ResourceLimits limits, Scale scale,
                CapacityModel model = CapacityModel::kLowerBound);

  [[nodiscard]] SlotEval evaluate(const network::NetworkConfig& config, bool gradient) const;
  /// Capacity at every point in bits/s.
  [[nodiscard]] std::vector<double> capacity(const network::NetworkConfig& config) const;

  [[nodiscard]] const network::ResourceLimits& limits() const { return limits_; }
  [[nodiscard]] const network::ChannelParams& params() const { return params_; }
  [[nodiscard]] const Scale& scale() const { return scale_; }
  [[nodiscard]] std::size_t n_bs() const { return gains_.n_bs(); }
  [[nodiscard]] std::size_t n_points() const { return gains_.n_points(); }
  [[nodiscard]] double traffic_total() const { return d_tot_; }

 private:
  network::ChannelGains gains_;
  std::vector<double> traffic_;
  double cell_area_;
  network::ChannelParams params_;
  network::ResourceLimits limits_;
  Scale scale_;
  CapacityModel model_;
  double d_tot_ = 0.0;  // unnormalized
};

/// Value and gradient of the augmented Lagrangian in the scaled coordinates
/// u = B / B_max, v = P / P_max.
struct LagrangianEval {
  double value = 0.0;
  SlotEval slot;
  std::vector<double> grad_u, grad_v;
};

LagrangianEval evaluate_lagrangian(const SlotObjective& objective,
                                   const network::NetworkConfig& config,
                                   const lyapunov::LyapunovState& state,
                                   const lyapunov::DualState& duals,
                                   const lyapunov::LongTermTargets& targets, double eta,
                                   bool gradient);

/// Weight of the divergence in a queue-free transient objective
/// (1 - weight * xi) min{C, D} - eta P.
LagrangianEval evaluate_transient(const SlotObjective& objective,
                                  const network::NetworkConfig& config, double xi_weight,
                                  double eta, bool gradient);

}  // namespace mddra
