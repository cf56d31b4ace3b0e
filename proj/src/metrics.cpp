#include "mddra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mddra::metrics {

JsResult js_divergence(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("js_divergence: length mismatch");
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (!(sa > 0.0) || !(sb > 0.0)) return {1.0, true};
  const double floor = 1e-12 / static_cast<double>(a.size());
  double js = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double p = a[i] / sa;
    const double q = b[i] / sb;
    const double pf = std::max(p, floor);
    const double qf = std::max(q, floor);
    if (p > 0.0) js += p * std::log2(2.0 * pf / (pf + qf));
    if (q > 0.0) js += q * std::log2(2.0 * qf / (pf + qf));
  }
  return {std::clamp(0.5 * js, 0.0, 1.0), false};
}

JsResult js_transient(const Field& capacity, const Field& traffic) {
  require_same_grid(capacity, traffic, "js_transient");
  return js_divergence(capacity.values, traffic.values);
}

double kappa_cumulative(std::span<const double> xi) {
  return std::accumulate(xi.begin(), xi.end(), 0.0);
}

SlotAggregates aggregate(const Field& capacity, const Field& traffic, double p_t) {
  SlotAggregates s;
  s.c_tot = capacity.integral();
  s.d_tot = traffic.integral();
  s.p_t = p_t;
  s.xi = js_transient(capacity, traffic).value;
  s.tau = traffic.timestamp;
  return s;
}

double clamp_kappa(double kappa) { return std::clamp(kappa, 0.0, kKappaCeiling); }

double iree_full(std::span<const Field> capacity, std::span<const Field> traffic,
                 std::span<const double> power) {
  if (capacity.size() != traffic.size() || capacity.size() != power.size()) {
    throw ShapeError("iree_full: history lengths differ");
  }
  const double p_tot = std::accumulate(power.begin(), power.end(), 0.0);
  if (!(p_tot > 0.0)) throw NumericError("iree_full: total power is zero");
  std::vector<double> c_all;
  std::vector<double> d_all;
  double c_tot = 0.0;
  double d_tot = 0.0;
  for (std::size_t t = 0; t < capacity.size(); ++t) {
    require_same_grid(capacity[t], traffic[t], "iree_full");
    c_all.insert(c_all.end(), capacity[t].values.begin(), capacity[t].values.end());
    d_all.insert(d_all.end(), traffic[t].values.begin(), traffic[t].values.end());
    c_tot += capacity[t].integral();
    d_tot += traffic[t].integral();
  }
  const double xi = js_divergence(c_all, d_all).value;
  return std::min(c_tot, d_tot) * (1.0 - xi) / p_tot;
}

double iree_lower(std::span<const SlotAggregates> slots, double kappa) {
  double matched = 0.0;
  double p = 0.0;
  for (const auto& s : slots) {
    matched += s.matched();
    p += s.p_t;
  }
  if (!(p > 0.0)) throw NumericError("iree_lower: total power is zero");
  return (1.0 - std::clamp(kappa, 0.0, 1.0)) * matched / p;
}

double iree_transient(const SlotAggregates& slot, double kappa_tau) {
  if (!(slot.p_t > 0.0)) throw NumericError("iree_transient: slot power is zero");
  return (1.0 - std::clamp(kappa_tau, 0.0, 1.0)) * slot.matched() / slot.p_t;
}

double zeta(std::span<const SlotAggregates> slots, double kappa) {
  double matched = 0.0;
  double d = 0.0;
  for (const auto& s : slots) {
    matched += s.matched();
    d += s.d_tot;
  }
  if (!(d > 0.0)) throw NumericError("zeta: total traffic is zero");
  return (1.0 - std::clamp(kappa, 0.0, 1.0)) * matched / d;
}

IreeReport report(std::span<const Field> capacity, std::span<const Field> traffic,
                  std::span<const double> power) {
  IreeReport r;
  std::vector<SlotAggregates> slots;
  std::vector<double> xi;
  for (std::size_t t = 0; t < capacity.size(); ++t) {
    slots.push_back(aggregate(capacity[t], traffic[t], power[t]));
    xi.push_back(slots.back().xi);
  }
  r.kappa = kappa_cumulative(xi);
  r.eta_full = iree_full(capacity, traffic, power);
  r.eta_lb = iree_lower(slots, r.kappa);
  if (!slots.empty()) r.eta_transient = iree_transient(slots.back(), 0.0);
  double d = 0.0;
  for (const auto& s : slots) d += s.d_tot;
  r.zeta = d > 0.0 ? zeta(slots, r.kappa) : 0.0;
  return r;
}

}  // namespace mddra::metrics
