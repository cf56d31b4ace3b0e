#include <cmath>
#include <random>

#include "doctest.h"
#include "lyapunov_fixtures.hpp"
#include "mddra/objective.hpp"
#include "world_fixtures.hpp"

using namespace mddra;

namespace {

struct Setup {
  World world = make_world(fixtures::tiny_world(9));
  Scale scale{world.evolution.traffic[2].integral(), 4.0 * (world.config.channel.lambda + world.config.channel.p_circuit)};
  SlotObjective lb{world.model_gains, world.evolution.traffic[2].values, world.grid().cell_area(),
                   world.config.channel, world.config.limits, scale};
  SlotObjective exact{world.true_gains, world.evolution.traffic[2].values, world.grid().cell_area(),
                      world.config.channel, world.config.limits, scale, CapacityModel::kExact};
};

network::NetworkConfig random_config(std::mt19937_64& rng, const network::ResourceLimits& lim) {
  network::NetworkConfig c(4, 0.0, 0.0);
  for (std::size_t n = 0; n < 4; ++n) {
    c.bandwidth[n] = (0.05 + 0.9 * uniform01(rng)) * lim.b_max / 4.0;
    c.power[n] = (0.05 + 0.9 * uniform01(rng)) * lim.p_max;
  }
  return c;
}

}  // namespace

TEST_CASE("slot aggregates follow the capacity field") {
  const Setup s;
  const auto& lim = s.world.config.limits;
  const auto cfg = network::full_power_config(4, lim);
  const auto t = s.lb.evaluate(cfg, false).terms;
  const Field cap = network::capacity_lb_field(cfg, s.world.model_gains, s.world.grid(), lim);
  const auto agg = metrics::aggregate(cap, s.world.evolution.traffic[2], network::total_power(cfg, s.world.config.channel));
  CHECK(t.c_tot == doctest::Approx(agg.c_tot / s.scale.traffic).epsilon(1e-12));
  CHECK(t.d_tot == doctest::Approx(agg.d_tot / s.scale.traffic).epsilon(1e-12));
  CHECK(t.p_t == doctest::Approx(agg.p_t / s.scale.power).epsilon(1e-12));
  CHECK(t.xi == doctest::Approx(agg.xi).epsilon(1e-12));
  CHECK(s.exact.evaluate(cfg, false).terms.c_tot >= 0.0);
  CHECK(s.lb.traffic_total() == doctest::Approx(agg.d_tot));
}

TEST_CASE("Lagrangian and transient gradients match central differences") {
  const Setup s;
  const auto& lim = s.world.config.limits;
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = random_config(rng, lim);
    const auto r = fixtures::random_state(rng);
    const double eta = uniform01(rng);
    const auto ev = evaluate_lagrangian(s.lb, c, r.s, r.d, r.t, eta, true);
    const auto tr = evaluate_transient(s.lb, c, 2.0, eta, true);
    const double h = 1e-6;
    for (std::size_t n = 0; n < 4; ++n) {
      for (bool power : {false, true}) {
        auto plus = c, minus = c;
        (power ? plus.power[n] : plus.bandwidth[n]) += h * (power ? lim.p_max : lim.b_max);
        (power ? minus.power[n] : minus.bandwidth[n]) -= h * (power ? lim.p_max : lim.b_max);
        const double fd_l = (evaluate_lagrangian(s.lb, plus, r.s, r.d, r.t, eta, false).value -
                             evaluate_lagrangian(s.lb, minus, r.s, r.d, r.t, eta, false).value) / (2.0 * h);
        const double fd_t = (evaluate_transient(s.lb, plus, 2.0, eta, false).value -
                             evaluate_transient(s.lb, minus, 2.0, eta, false).value) / (2.0 * h);
        const double an_l = power ? ev.grad_v[n] : ev.grad_u[n];
        const double an_t = power ? tr.grad_v[n] : tr.grad_u[n];
        CHECK(std::abs(fd_l - an_l) <= 1e-4 * std::max(std::abs(an_l), 1e-3));
        CHECK(std::abs(fd_t - an_t) <= 1e-4 * std::max(std::abs(an_t), 1e-3));
      }
    }
  }
}

TEST_CASE("Lagrangian value equals the scalar Lagrangian of the slot terms") {
  const Setup s;
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_config(rng, s.world.config.limits);
    const auto r = fixtures::random_state(rng);
    const auto ev = evaluate_lagrangian(s.lb, c, r.s, r.d, r.t, 0.4, false);
    auto terms = s.lb.evaluate(c, false).terms;
    terms.eta = 0.4;
    CHECK(ev.value == doctest::Approx(lyapunov::lagrangian(r.s, r.d, r.t, terms)).epsilon(1e-12));
    const auto tr = evaluate_transient(s.lb, c, 1.0, 0.4, false);
    CHECK(tr.value == doctest::Approx(std::max(0.0, 1.0 - terms.xi) * terms.matched() - 0.4 * terms.p_t).epsilon(1e-12));
  }
}
