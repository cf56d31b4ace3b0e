#include "mddra/lyapunov.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

#include "mddra/metrics.hpp"

namespace mddra::lyapunov {

namespace {

constexpr double kFlat = 1e-300;

double window_kappa(const LongTermTargets& t) { return metrics::clamp_kappa(t.kappa_horizon); }

// Coefficient of (1 - kappa_tau) in the eta residual.
double eta_offset(const LyapunovState& s, const LongTermTargets& t, const SlotTerms& slot) {
  return slot.p_t * t.eta_horizon / (1.0 - window_kappa(t)) - s.nu_eta * s.q_eta;
}

[[maybe_unused]] bool ascent_holds(const QuadraticSlice& q, double before, double after) {
  const double v0 = q.value(before);
  const double v1 = q.value(after);
  return v1 >= v0 - 1e-9 * (1.0 + std::abs(v0));
}

}  // namespace

void DualState::validate() const {
  if (!(rho_zeta > 0.0) || !(rho_kappa > 0.0) || !(rho_eta > 0.0)) {
    throw ConfigError("penalties must be > 0");
  }
}

void LongTermTargets::validate() const {
  if (!(zeta_min >= 0.0 && zeta_min <= 1.0)) throw ConfigError("zeta_min must lie in [0, 1]");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (window < 1 || window > horizon) throw ConfigError("window must lie in [1, horizon]");
}

Residuals residuals(const LyapunovState& s, const LongTermTargets& t, const SlotTerms& slot) {
  Residuals r;
  const double m = slot.matched();
  r.zeta = (1.0 - s.kappa_tau - s.h) * m + s.nu_zeta * s.q_zeta - t.zeta_min * slot.d_tot;
  r.kappa = slot.xi + s.nu_kappa * s.q_kappa - s.kappa_tau / static_cast<double>(t.horizon);
  r.eta = slot.p_t * slot.eta - (1.0 - s.kappa_tau) * eta_offset(s, t, slot);
  return r;
}

double utility(const LyapunovState& s, const SlotTerms& slot) {
  return (1.0 - s.kappa_tau) * slot.matched() - slot.eta * slot.p_t;
}

double lagrangian(const LyapunovState& s, const DualState& d, const LongTermTargets& t,
                  const SlotTerms& slot) {
  const Residuals r = residuals(s, t, slot);
  double penalty = d.omega_zeta * r.zeta + 0.5 * d.rho_zeta * r.zeta * r.zeta;
  penalty += d.omega_kappa * r.kappa + 0.5 * d.rho_kappa * r.kappa * r.kappa;
  penalty += d.omega_eta * r.eta + 0.5 * d.rho_eta * r.eta * r.eta;
  return utility(s, slot) - penalty;
}

LagrangianWeights lagrangian_weights(const LyapunovState& s, const DualState& d,
                                     const LongTermTargets& t, const SlotTerms& slot) {
  const Residuals r = residuals(s, t, slot);
  const double kappa = window_kappa(t);
  LagrangianWeights w;
  w.matched = (1.0 - s.kappa_tau) -
              (d.omega_zeta + d.rho_zeta * r.zeta) * (1.0 - s.kappa_tau - s.h);
  w.xi = -(d.omega_kappa + d.rho_kappa * r.kappa);
  const double dr_eta_dp = slot.eta - (1.0 - s.kappa_tau) * t.eta_horizon / (1.0 - kappa);
  w.power = -slot.eta - (d.omega_eta + d.rho_eta * r.eta) * dr_eta_dp;
  return w;
}

LyapunovState update_queues(const LyapunovState& s, const SlotTerms& slot,
                            const LongTermTargets& t) {
  if (s.kappa_tau >= 1.0 || t.kappa_horizon >= 1.0) {
    std::ostringstream os;
    os << "update_queues: division guard (kappa_tau = " << s.kappa_tau
       << ", kappa = " << t.kappa_horizon << ", both must be < 1)";
    throw NumericError(os.str());
  }
  LyapunovState out = s;
  out.q_zeta += (1.0 - s.kappa_tau - s.h) * slot.matched() - t.zeta_min * slot.d_tot;
  out.q_kappa += slot.xi - s.kappa_tau / static_cast<double>(t.horizon);
  out.q_eta += slot.p_t * (slot.eta / (1.0 - s.kappa_tau) - t.eta_horizon / (1.0 - t.kappa_horizon));
  return out;
}

DriftStep queue_drift_step(double q, double nu) {
  if (!(nu >= 0.0 && nu <= 2.0)) throw DomainError("queue_drift_step: nu must lie in [0, 2]");
  const double next = (1.0 - nu) * q;
  return {next, next * next - q * q};
}

double QuadraticSlice::value(double x) const {
  double v = lin * x;
  for (std::size_t i = 0; i < 3; ++i) {
    const double r = r0[i] + slope[i] * x;
    v -= omega[i] * r + 0.5 * rho[i] * r * r;
  }
  return v;
}

double QuadraticSlice::derivative(double x) const {
  double g = lin;
  for (std::size_t i = 0; i < 3; ++i) {
    g -= (omega[i] + rho[i] * (r0[i] + slope[i] * x)) * slope[i];
  }
  return g;
}

double QuadraticSlice::curvature() const {
  double c = 0.0;
  for (std::size_t i = 0; i < 3; ++i) c -= rho[i] * slope[i] * slope[i];
  return c;
}

double QuadraticSlice::argmax(double lo, double hi, double current) const {
  const double a = -curvature();
  const double g0 = derivative(0.0);
  if (a > kFlat) return std::clamp(g0 / a, lo, hi);
  // Linear in x: compare the two ends.
  if (g0 > 0.0) return hi;
  if (g0 < 0.0) return lo;
  return std::clamp(current, lo, hi);
}

std::array<double, 2> bounds(Variable v) {
  switch (v) {
    case Variable::kKappaTau: return {0.0, metrics::kKappaCeiling};
    case Variable::kH: return {0.0, 1.0};
    default: return {0.0, 2.0};
  }
}

QuadraticSlice slice(Variable v, const LyapunovState& s, const DualState& d,
                     const LongTermTargets& t, const SlotTerms& slot) {
  QuadraticSlice q;
  q.omega = {d.omega_zeta, d.omega_kappa, d.omega_eta};
  q.rho = {d.rho_zeta, d.rho_kappa, d.rho_eta};
  const Residuals r = residuals(s, t, slot);
  const double m = slot.matched();
  double x = 0.0;
  switch (v) {
    case Variable::kKappaTau:
      q.lin = -m;
      q.slope = {-m, -1.0 / static_cast<double>(t.horizon), eta_offset(s, t, slot)};
      x = s.kappa_tau;
      break;
    case Variable::kH:
      q.slope = {-m, 0.0, 0.0};
      x = s.h;
      break;
    case Variable::kNuZeta:
      q.slope = {s.q_zeta, 0.0, 0.0};
      x = s.nu_zeta;
      break;
    case Variable::kNuKappa:
      q.slope = {0.0, s.q_kappa, 0.0};
      x = s.nu_kappa;
      break;
    case Variable::kNuEta:
      q.slope = {0.0, 0.0, (1.0 - s.kappa_tau) * s.q_eta};
      x = s.nu_eta;
      break;
  }
  q.r0 = {r.zeta - q.slope[0] * x, r.kappa - q.slope[1] * x, r.eta - q.slope[2] * x};
  return q;
}

double solve_kappa(const LyapunovState& s, const DualState& d, const LongTermTargets& t,
                   const SlotTerms& slot) {
  const QuadraticSlice q = slice(Variable::kKappaTau, s, d, t, slot);
  const auto b = bounds(Variable::kKappaTau);
  const double k = q.argmax(b[0], b[1], s.kappa_tau);
  assert(ascent_holds(q, std::clamp(s.kappa_tau, b[0], b[1]), k));
  return k;
}

HSolution solve_h(const LyapunovState& s, const DualState& d, const LongTermTargets& t,
                  const SlotTerms& slot) {
  if (!(slot.matched() > 0.0)) return {s.h, true};
  const QuadraticSlice q = slice(Variable::kH, s, d, t, slot);
  const double h = q.argmax(0.0, 1.0, s.h);
  assert(ascent_holds(q, std::clamp(s.h, 0.0, 1.0), h));
  return {h, false};
}

Corrections solve_corrections(const LyapunovState& s, const DualState& d,
                              const LongTermTargets& t, const SlotTerms& slot) {
  Corrections c{s.nu_zeta, s.nu_kappa, s.nu_eta};
  auto solve = [&](Variable v, double queue, double current) {
    if (queue == 0.0) return current;
    const QuadraticSlice q = slice(v, s, d, t, slot);
    const double nu = q.argmax(0.0, 2.0, current);
    assert(ascent_holds(q, std::clamp(current, 0.0, 2.0), nu));
    return nu;
  };
  c.nu_zeta = solve(Variable::kNuZeta, s.q_zeta, s.nu_zeta);
  c.nu_kappa = solve(Variable::kNuKappa, s.q_kappa, s.nu_kappa);
  c.nu_eta = solve(Variable::kNuEta, (1.0 - s.kappa_tau) * s.q_eta, s.nu_eta);
  return c;
}

DualState update_duals(const DualState& d, const Residuals& r) {
  DualState out = d;
  out.omega_zeta += d.rho_zeta * r.zeta;
  out.omega_kappa += d.rho_kappa * r.kappa;
  out.omega_eta += d.rho_eta * r.eta;
  return out;
}

std::array<double, 5> scalar_stationarity(const LyapunovState& s, const DualState& d,
                                          const LongTermTargets& t, const SlotTerms& slot) {
  const Variable vars[5] = {Variable::kKappaTau, Variable::kH, Variable::kNuKappa,
                            Variable::kNuEta, Variable::kNuZeta};
  const double xs[5] = {s.kappa_tau, s.h, s.nu_kappa, s.nu_eta, s.nu_zeta};
  std::array<double, 5> out{};
  for (int i = 0; i < 5; ++i) {
    const QuadraticSlice q = slice(vars[i], s, d, t, slot);
    const auto b = bounds(vars[i]);
    const double g = q.derivative(xs[i]);
    out[static_cast<std::size_t>(i)] = std::abs(xs[i] - std::clamp(xs[i] + g, b[0], b[1]));
  }
  return out;
}

}  // namespace mddra::lyapunov
