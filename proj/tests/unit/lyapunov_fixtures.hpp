#pragma once

#include <cmath>
#include <functional>
#include <algorithm>
#include <random>

#include "mddra/common.hpp"
#include "mddra/lyapunov.hpp"

namespace fixtures {

struct RandomState {
  mddra::lyapunov::LyapunovState s;
  mddra::lyapunov::DualState d;
  mddra::lyapunov::LongTermTargets t;
  mddra::lyapunov::SlotTerms slot;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * mddra::uniform01(rng);
}

inline RandomState random_state(std::mt19937_64& rng) {
  RandomState r;
  r.s.q_zeta = uniform(rng, -1.0, 1.0);
  r.s.q_kappa = uniform(rng, -1.0, 1.0);
  r.s.q_eta = uniform(rng, -1.0, 1.0);
  r.s.nu_zeta = uniform(rng, 0.0, 2.0);
  r.s.nu_kappa = uniform(rng, 0.0, 2.0);
  r.s.nu_eta = uniform(rng, 0.0, 2.0);
  r.s.h = uniform(rng, 0.0, 1.0);
  r.s.kappa_tau = uniform(rng, 0.0, 0.99);
  r.d.omega_zeta = uniform(rng, -1.0, 1.0);
  r.d.omega_kappa = uniform(rng, -1.0, 1.0);
  r.d.omega_eta = uniform(rng, -1.0, 1.0);
  r.d.rho_zeta = uniform(rng, 1.0, 20.0);
  r.d.rho_kappa = uniform(rng, 1.0, 20.0);
  r.d.rho_eta = uniform(rng, 1.0, 20.0);
  r.t.eta_horizon = uniform(rng, 0.0, 2.0);
  r.t.kappa_horizon = uniform(rng, 0.0, 0.9);
  r.t.zeta_min = uniform(rng, 0.0, 1.0);
  r.t.window = 5;
  r.t.horizon = mddra::uniform01(rng) < 0.5 ? 5 : 30;
  r.slot.c_tot = uniform(rng, 0.0, 2.0);
  r.slot.d_tot = uniform(rng, 0.0, 2.0);
  r.slot.p_t = uniform(rng, 0.5, 2.0);
  r.slot.xi = uniform(rng, 0.0, 1.0);
  r.slot.eta = uniform(rng, 0.0, 2.0);
  return r;
}

/// Quad precision: resolving an argmax to 1e-8 needs the function value to
/// about 1e-16 relative on top of the slice's constant part.
using quad = __float128;

/// Golden-section maximizer of a unimodal function on [lo, hi].
inline double golden_max(const std::function<quad(quad)>& f, double lo, double hi) {
  using real = quad;
  const real g = real(0.6180339887498948) + real(4.8204586834365638e-17);
  real a = lo, b = hi;
  real x1 = b - g * (b - a), x2 = a + g * (b - a);
  real f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 400 && b - a > real(1e-30); ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  const real mid = real(0.5) * (a + b);
  // The bracket may collapse onto an end that beats every interior point.
  real best = mid, fbest = f(mid);
  for (real e : {real(lo), real(hi)}) {
    if (f(e) > fbest) {
      fbest = f(e);
      best = e;
    }
  }
  return static_cast<double>(best);
}

using mddra::lyapunov::DualState;
using mddra::lyapunov::LongTermTargets;
using mddra::lyapunov::LyapunovState;
using mddra::lyapunov::SlotTerms;
using mddra::lyapunov::Variable;

// Independent term-by-term evaluation of the augmented Lagrangian; `var`
// overrides one scalar variable.
template <class R>
R lagrangian_oracle(const LyapunovState& s, const DualState& d, const LongTermTargets& t,
                    const SlotTerms& x, int var = -1, R value = 0) {
  R k_tau = s.kappa_tau, h = s.h, nz = s.nu_zeta, nk = s.nu_kappa, ne = s.nu_eta;
  if (var == 0) k_tau = value;
  if (var == 1) h = value;
  if (var == 2) nz = value;
  if (var == 3) nk = value;
  if (var == 4) ne = value;
  const R m = std::min(x.c_tot, x.d_tot);
  const R kappa = std::min(std::max(t.kappa_horizon, 0.0), 1.0 - 1e-9);
  const R r_zeta = (1 - k_tau - h) * m + nz * R(s.q_zeta) - R(t.zeta_min) * R(x.d_tot);
  const R r_kappa = R(x.xi) + nk * R(s.q_kappa) - k_tau / R(t.horizon);
  const R r_eta = R(x.p_t) * R(x.eta) - (1 - k_tau) * (R(x.p_t) * R(t.eta_horizon) / (1 - kappa) - ne * R(s.q_eta));
  const R util = (1 - k_tau) * m - R(x.eta) * R(x.p_t);
  return util - (R(d.omega_zeta) * r_zeta + R(0.5) * R(d.rho_zeta) * r_zeta * r_zeta) -
         (R(d.omega_kappa) * r_kappa + R(0.5) * R(d.rho_kappa) * r_kappa * r_kappa) -
         (R(d.omega_eta) * r_eta + R(0.5) * R(d.rho_eta) * r_eta * r_eta);
}

int index_of(Variable v) {
  switch (v) {
    case Variable::kKappaTau: return 0;
    case Variable::kH: return 1;
    case Variable::kNuZeta: return 2;
    case Variable::kNuKappa: return 3;
    case Variable::kNuEta: return 4;
  }
  return -1;
}

double oracle_argmax(Variable v, const fixtures::RandomState& r) {
  const auto b = mddra::lyapunov::bounds(v);
  return golden_max(
      [&](fixtures::quad x) { return lagrangian_oracle<fixtures::quad>(r.s, r.d, r.t, r.slot, index_of(v), x); },
      b[0], b[1]);
}

}  // namespace fixtures
