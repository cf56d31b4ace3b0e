#pragma once

#include <array>

#include "mddra/common.hpp"

namespace mddra::lyapunov {

// All quantities here are normalized: capacity and traffic in units of a
// reference traffic total, power in units of a reference power, so the IREE
// values are in (traffic unit) / (power unit).

struct LyapunovState {
  double q_zeta = 0.0;
  double q_kappa = 0.0;
  double q_eta = 0.0;
  double nu_zeta = 1.0;
  double nu_kappa = 1.0;
  double nu_eta = 1.0;
  double h = 0.0;
  double kappa_tau = 0.0;
};

struct DualState {
  double omega_zeta = 0.0;
  double omega_kappa = 0.0;
  double omega_eta = 0.0;
  double rho_zeta = 10.0;
  double rho_kappa = 10.0;
  double rho_eta = 10.0;

  void validate() const;
};

struct LongTermTargets {
  double eta_horizon = 0.0;    // sliding-window IREE estimate
  double kappa_horizon = 0.0;  // sliding-window divergence
  double zeta_min = 0.8;
  int horizon = 30;
  int window = 5;

  void validate() const;
};

/// Slot aggregates at the current iterate plus the Dinkelbach parameter.
struct SlotTerms {
  double c_tot = 0.0;
  double d_tot = 0.0;
  double p_t = 0.0;
  double xi = 0.0;
  double eta = 0.0;  // transient IREE parameter
  [[nodiscard]] double matched() const { return c_tot < d_tot ? c_tot : d_tot; }
};

/// Residuals of the three queue-corrected equality constraints.
struct Residuals {
  double zeta = 0.0;
  double kappa = 0.0;
  double eta = 0.0;
};

Residuals residuals(const LyapunovState& s, const LongTermTargets& t, const SlotTerms& slot);

/// Augmented Lagrangian: bare utility minus dual and quadratic penalty terms.
double lagrangian(const LyapunovState& s, const DualState& d, const LongTermTargets& t,
                  const SlotTerms& slot);

/// Utility part (1 - kappa_tau) min{C, D} - eta P.
double utility(const LyapunovState& s, const SlotTerms& slot);

/// dLambda = w_matched d(min{C,D}) + w_xi d(xi) + w_power d(P) at fixed
/// Lyapunov and dual state.
struct LagrangianWeights {
  double matched = 0.0;
  double xi = 0.0;
  double power = 0.0;
};
LagrangianWeights lagrangian_weights(const LyapunovState& s, const DualState& d,
                                     const LongTermTargets& t, const SlotTerms& slot);

/// Queue recursion: Q^zeta += (1 - kappa_tau - h) min - zeta_min D,
/// Q^kappa += xi - kappa_tau / T, Q^eta += P (eta / (1 - kappa_tau) - eta^T / (1 - kappa)).
/// Throws NumericError when kappa_tau or kappa is >= 1.
LyapunovState update_queues(const LyapunovState& s, const SlotTerms& slot,
                            const LongTermTargets& t);

struct DriftStep {
  double next = 0.0;
  double drift = 0.0;  // next^2 - q^2
};
/// Contraction Q <- (1 - nu) Q with its quadratic drift; nu must lie in [0, 2].
DriftStep queue_drift_step(double q, double nu);

/// A one-dimensional slice of the Lagrangian: lin * x - sum_i [w_i r_i(x) + rho_i/2 r_i(x)^2]
/// with r_i(x) = r0_i + c_i x.
struct QuadraticSlice {
  double lin = 0.0;
  std::array<double, 3> r0{};
  std::array<double, 3> slope{};
  std::array<double, 3> omega{};
  std::array<double, 3> rho{};

  [[nodiscard]] double value(double x) const;
  [[nodiscard]] double derivative(double x) const;
  [[nodiscard]] double curvature() const;
  /// Maximizer over [lo, hi], with `current` returned when the slice is flat.
  [[nodiscard]] double argmax(double lo, double hi, double current) const;
};

enum class Variable { kKappaTau, kH, kNuZeta, kNuKappa, kNuEta };

/// Lagrangian restricted to one scalar variable (all others fixed), with the
/// constant part folded into r0 so value() differs from lagrangian() by a constant.
QuadraticSlice slice(Variable v, const LyapunovState& s, const DualState& d,
                     const LongTermTargets& t, const SlotTerms& slot);

/// Feasible interval of each scalar variable.
std::array<double, 2> bounds(Variable v);

double solve_kappa(const LyapunovState& s, const DualState& d, const LongTermTargets& t,
                   const SlotTerms& slot);

struct HSolution {
  double h = 0.0;
  bool irrelevant = false;  // min{C, D} = 0, h left unchanged
};
HSolution solve_h(const LyapunovState& s, const DualState& d, const LongTermTargets& t,
                  const SlotTerms& slot);

struct Corrections {
  double nu_zeta = 1.0;
  double nu_kappa = 1.0;
  double nu_eta = 1.0;
};
/// Each factor maximizes its own slice; a factor whose queue is zero is left unchanged.
Corrections solve_corrections(const LyapunovState& s, const DualState& d,
                              const LongTermTargets& t, const SlotTerms& slot);

/// Scaled dual ascent omega <- omega + rho * residual.
DualState update_duals(const DualState& d, const Residuals& r);

/// Projected-gradient magnitudes |x - Proj(x + dLambda/dx)| for kappa_tau, h,
/// nu_kappa, nu_eta, nu_zeta (the scalar first-order conditions).
std::array<double, 5> scalar_stationarity(const LyapunovState& s, const DualState& d,
                                          const LongTermTargets& t, const SlotTerms& slot);

}  // namespace mddra::lyapunov
