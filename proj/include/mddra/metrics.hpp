#pragma once

#include <span>
#include <vector>

#include "mddra/common.hpp"

namespace mddra::metrics {

struct JsResult {
  double value = 0.0;
  /// Set when one of the totals is zero; the divergence is then defined as 1.
  bool degenerate = false;
};

/// Base-2 Jensen-Shannon divergence between the normalized versions of two
/// nonnegative mass vectors. 0 log 0 := 0; logarithm arguments are floored at
/// 1e-12 of the per-entry mean.
JsResult js_divergence(std::span<const double> a, std::span<const double> b);

/// Transient divergence between a capacity field and a traffic field on one grid.
JsResult js_transient(const Field& capacity, const Field& traffic);

/// Sum of the per-slot divergences.
double kappa_cumulative(std::span<const double> xi);

struct SlotAggregates {
  double c_tot = 0.0;  // integral of capacity over the area
  double d_tot = 0.0;  // integral of traffic over the area
  double p_t = 0.0;    // total power, W
  double xi = 0.0;     // transient divergence
  int tau = 0;
  [[nodiscard]] double matched() const { return c_tot < d_tot ? c_tot : d_tot; }
};

SlotAggregates aggregate(const Field& capacity, const Field& traffic, double p_t);

/// Clamp for terms that divide by 1 - kappa.
inline constexpr double kKappaCeiling = 1.0 - 1e-9;
double clamp_kappa(double kappa);

/// Horizon IREE with the space-time divergence: min{C^T, D^T} (1 - xi^T) / P^T.
double iree_full(std::span<const Field> capacity, std::span<const Field> traffic,
                 std::span<const double> power);
/// Lower bound (1 - kappa) sum min{C, D} / sum P, kappa clamped to [0, 1].
double iree_lower(std::span<const SlotAggregates> slots, double kappa);
/// (1 - kappa_tau) min{C, D} / P for one slot.
double iree_transient(const SlotAggregates& slot, double kappa_tau);
/// Network utility indicator (1 - kappa) sum min{C, D} / sum D.
double zeta(std::span<const SlotAggregates> slots, double kappa);

struct IreeReport {
  double eta_full = 0.0;
  double eta_lb = 0.0;
  double eta_transient = 0.0;
  double kappa = 0.0;
  double zeta = 0.0;
};

/// All horizon metrics for a capacity/traffic/power history.
IreeReport report(std::span<const Field> capacity, std::span<const Field> traffic,
                  std::span<const double> power);

}  // namespace mddra::metrics
