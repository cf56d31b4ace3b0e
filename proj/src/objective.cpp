#include "mddra/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mddra {

namespace {
constexpr double kInvLn2 = 1.4426950408889634;
}

SlotObjective::SlotObjective(network::ChannelGains gains, std::vector<double> traffic,
                             double cell_area, network::ChannelParams params,
                             network::ResourceLimits limits, Scale scale, CapacityModel model)
    : gains_(std::move(gains)),
      traffic_(std::move(traffic)),
      cell_area_(cell_area),
      params_(params),
      limits_(limits),
      scale_(scale),
      model_(model) {
  if (traffic_.size() != gains_.n_points()) throw ShapeError("SlotObjective: traffic/gain size mismatch");
  if (!(scale_.traffic > 0.0) || !(scale_.power > 0.0)) throw DomainError("SlotObjective: scales must be > 0");
  for (double d : traffic_) d_tot_ += std::max(d, 0.0);
  d_tot_ *= cell_area_;
}

std::vector<double> SlotObjective::capacity(const network::NetworkConfig& config) const {
  return model_ == CapacityModel::kLowerBound ? network::capacity_lb_points(config, gains_, limits_)
                                              : network::capacity_exact_points(config, gains_);
}

SlotEval SlotObjective::evaluate(const network::NetworkConfig& config, bool gradient) const {
  const std::size_t n_bs = gains_.n_bs();
  const std::size_t m = gains_.n_points();
  if (config.size() != n_bs) throw ShapeError("SlotObjective: BS count mismatch");

  // Per-(BS, point) log term and d/dP of the per-point capacity.
  std::vector<double> cap(m, 0.0);
  std::vector<double> lg;
  std::vector<double> dp;
  if (gradient) {
    lg.assign(n_bs * m, 0.0);
    dp.assign(n_bs * m, 0.0);
  }
  for (std::size_t n = 0; n < n_bs; ++n) {
    const double b = config.bandwidth[n];
    const double p = config.power[n];
    const double* g = gains_.row(n);
    const bool exact = model_ == CapacityModel::kExact;
    if (exact && b <= 0.0) continue;
    const double kb = exact ? 1.0 / b : 1.0 / limits_.b_max;
    for (std::size_t j = 0; j < m; ++j) {
      const double s = p * kb * g[j];
      const double l1 = std::log1p(s);
      cap[j] += b * kInvLn2 * l1;
      if (gradient) {
        const std::size_t k = n * m + j;
        if (exact) {
          lg[k] = kInvLn2 * (l1 - s / (1.0 + s));
          dp[k] = kInvLn2 * g[j] / (1.0 + s);
        } else {
          lg[k] = kInvLn2 * l1;
          dp[k] = kInvLn2 * b * kb * g[j] / (1.0 + s);
        }
      }
    }
  }

  SlotEval out;
  const double sum_c = std::accumulate(cap.begin(), cap.end(), 0.0);
  double sum_d = 0.0;
  for (double d : traffic_) sum_d += std::max(d, 0.0);
  out.terms.c_tot = sum_c * cell_area_ / scale_.traffic;
  out.terms.d_tot = d_tot_ / scale_.traffic;
  out.terms.p_t = network::total_power(config, params_) / scale_.power;
  out.dp_dp = params_.lambda / scale_.power;

  // Divergence and its per-point sensitivity.
  std::vector<double> dxi_dc(m, 0.0);
  if (!(sum_c > 0.0) || !(sum_d > 0.0)) {
    out.terms.xi = 1.0;
    out.degenerate = true;
  } else {
    const double floor = 1e-12 / static_cast<double>(m);
    double js = 0.0;
    double mean_g = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double p = cap[j] / sum_c;
      const double q = std::max(traffic_[j], 0.0) / sum_d;
      const double pf = std::max(p, floor);
      const double qf = std::max(q, floor);
      const double lp = std::log2(2.0 * pf / (pf + qf));
      if (p > 0.0) js += p * lp;
      if (q > 0.0) js += q * std::log2(2.0 * qf / (pf + qf));
      dxi_dc[j] = 0.5 * lp;
      mean_g += p * dxi_dc[j];
    }
    out.terms.xi = std::clamp(0.5 * js, 0.0, 1.0);
    for (double& v : dxi_dc) v = (v - mean_g) / sum_c;
  }

  if (!gradient) return out;
  out.dc_db.assign(n_bs, 0.0);
  out.dc_dp.assign(n_bs, 0.0);
  out.dxi_db.assign(n_bs, 0.0);
  out.dxi_dp.assign(n_bs, 0.0);
  const double ctot_scale = cell_area_ / scale_.traffic;
  for (std::size_t n = 0; n < n_bs; ++n) {
    double cb = 0.0, cp = 0.0, xb = 0.0, xp = 0.0;
    const double* l = lg.data() + n * m;
    const double* d = dp.data() + n * m;
    for (std::size_t j = 0; j < m; ++j) {
      cb += l[j];
      cp += d[j];
      xb += dxi_dc[j] * l[j];
      xp += dxi_dc[j] * d[j];
    }
    out.dc_db[n] = cb * ctot_scale;
    out.dc_dp[n] = cp * ctot_scale;
    out.dxi_db[n] = xb;
    out.dxi_dp[n] = xp;
  }
  return out;
}

LagrangianEval evaluate_lagrangian(const SlotObjective& objective,
                                   const network::NetworkConfig& config,
                                   const lyapunov::LyapunovState& state,
                                   const lyapunov::DualState& duals,
                                   const lyapunov::LongTermTargets& targets, double eta,
                                   bool gradient) {
  LagrangianEval out;
  out.slot = objective.evaluate(config, gradient);
  out.slot.terms.eta = eta;
  out.value = lyapunov::lagrangian(state, duals, targets, out.slot.terms);
  if (!gradient) return out;
  const auto w = lyapunov::lagrangian_weights(state, duals, targets, out.slot.terms);
  const double bmax = objective.limits().b_max;
  const double pmax = objective.limits().p_max;
  const std::size_t n_bs = config.size();
  out.grad_u.resize(n_bs);
  out.grad_v.resize(n_bs);
  for (std::size_t n = 0; n < n_bs; ++n) {
    const SlotEval& s = out.slot;
    out.grad_u[n] = bmax * (w.matched * s.matched_grad(s.dc_db, n) + w.xi * s.dxi_db[n]);
    out.grad_v[n] = pmax * (w.matched * s.matched_grad(s.dc_dp, n) + w.xi * s.dxi_dp[n] +
                            w.power * s.dp_dp);
  }
  return out;
}

LagrangianEval evaluate_transient(const SlotObjective& objective,
                                  const network::NetworkConfig& config, double xi_weight,
                                  double eta, bool gradient) {
  LagrangianEval out;
  out.slot = objective.evaluate(config, gradient);
  out.slot.terms.eta = eta;
  const auto& t = out.slot.terms;
  const double factor = 1.0 - xi_weight * t.xi;
  const bool active = factor > 0.0;
  out.value = (active ? factor : 0.0) * t.matched() - eta * t.p_t;
  if (!gradient) return out;
  const double bmax = objective.limits().b_max;
  const double pmax = objective.limits().p_max;
  const std::size_t n_bs = config.size();
  out.grad_u.resize(n_bs);
  out.grad_v.resize(n_bs);
  const SlotEval& s = out.slot;
  const double wm = active ? factor : 0.0;
  const double wx = active ? -xi_weight * t.matched() : 0.0;
  for (std::size_t n = 0; n < n_bs; ++n) {
    out.grad_u[n] = bmax * (wm * s.matched_grad(s.dc_db, n) + wx * s.dxi_db[n]);
    out.grad_v[n] = pmax * (wm * s.matched_grad(s.dc_dp, n) + wx * s.dxi_dp[n] - eta * s.dp_dp);
  }
  return out;
}

}  // namespace mddra
