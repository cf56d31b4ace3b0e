#include <cmath>
#include <random>

#include "doctest.h"
#include "mddra/network.hpp"

using namespace mddra;
using namespace mddra::network;

namespace {

Grid square(std::size_t n, double cell) {
  Grid g;
  g.nx = g.ny = n;
  g.cell_size = cell;
  return g;
}

Deployment at(std::vector<Vec2> p) {
  Deployment d;
  d.positions = std::move(p);
  return d;
}

}  // namespace

TEST_CASE("pathloss oracles") {
  const auto ch = ChannelParams::from_db_model(35.0, 38.0);
  CHECK(ch.alpha == doctest::Approx(3.8));
  const double l100 = pathloss({100.0, 0.0}, {0.0, 0.0}, ch);
  CHECK(l100 == doctest::Approx(std::pow(10.0, 11.1)).epsilon(1e-6));
  CHECK(l100 == doctest::Approx(1.2589e11).epsilon(1e-4));
  CHECK(pathloss({3.0, 4.0}, {3.0, 4.0}, ch) == doctest::Approx(ch.beta).epsilon(1e-15));
  const double base = pathloss({10.0, 0.0}, {0.0, 0.0}, ch);
  CHECK(pathloss({10.0, 0.0}, {0.0, 0.0}, ch, 10.0) == doctest::Approx(10.0 * base).epsilon(1e-14));
}

TEST_CASE("pathloss never drops below the floor") {
  const ChannelParams ch;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{uniform01(rng) * 1000.0, uniform01(rng) * 1000.0};
    CHECK(pathloss(p, {500.0, 500.0}, ch) >= ch.beta);
  }
}

TEST_CASE("exact capacity: direct formula evaluation") {
  ChannelParams ch;
  ch.beta = 1000.0;  // colocated user: L = beta, so P / L = 1e-3 W at P = 1 W
  ch.sigma2 = 1e-17;
  const auto dep = at({{0.0, 0.0}});
  NetworkConfig cfg(1, 10e6, 1.0);
  // SNR = (P / L) / (sigma^2 B) = 1e-3 / (1e-17 * 1e7) = 1e7.
  CHECK(capacity_exact(cfg, {0.0, 0.0}, dep, ch) == doctest::Approx(1e7 * std::log2(1.0 + 1e7)).epsilon(1e-14));
  ch.sigma2 = 1e-14;  // SNR = 1e4
  CHECK(capacity_exact(cfg, {0.0, 0.0}, dep, ch) == doctest::Approx(1.3288e8).epsilon(1e-4));

  NetworkConfig off(1, 10e6, 0.0);
  CHECK(capacity_exact(off, {0.0, 0.0}, dep, ch) == 0.0);
  NetworkConfig zero_b(1, 0.0, 1.0);
  CHECK(capacity_exact(zero_b, {0.0, 0.0}, dep, ch) == 0.0);

  const ChannelParams def;
  const auto twin = at({{10.0, 10.0}, {10.0, 10.0}});
  NetworkConfig two(2, 20e6, 0.5);
  NetworkConfig one(1, 20e6, 0.5);
  const Vec2 user{60.0, 10.0};
  CHECK(capacity_exact(two, user, twin, def) == doctest::Approx(2.0 * capacity_exact(one, user, at({{10.0, 10.0}}), def)).epsilon(1e-15));
}

TEST_CASE("lower-bound capacity") {
  const ChannelParams ch;
  const ResourceLimits lim;
  const auto dep = at({{0.0, 0.0}});
  NetworkConfig all(1, lim.b_max, 0.7);
  CHECK(capacity_lb(all, {30.0, 40.0}, dep, ch, lim) == doctest::Approx(capacity_exact(all, {30.0, 40.0}, dep, ch)).epsilon(1e-15));
  NetworkConfig none(3, 0.0, 1.0);
  CHECK(capacity_lb(none, {1.0, 2.0}, at({{0, 0}, {5, 5}, {9, 9}}), ch, lim) == 0.0);

  std::mt19937_64 rng(42);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 6.0);
    std::vector<Vec2> pos;
    for (std::size_t b = 0; b < n; ++b) pos.push_back({uniform01(rng) * 500.0, uniform01(rng) * 500.0});
    NetworkConfig cfg(n, 0.0, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
      cfg.bandwidth[b] = uniform01(rng) * lim.b_max / static_cast<double>(n);
      cfg.power[b] = uniform01(rng) * lim.p_max;
    }
    const Vec2 user{uniform01(rng) * 500.0, uniform01(rng) * 500.0};
    const auto d = at(pos);
    if (capacity_lb(cfg, user, d, ch, lim) > capacity_exact(cfg, user, d, ch)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("exact capacity is nondecreasing in each B and P") {
  const ChannelParams ch;
  std::mt19937_64 rng(7);
  const auto dep = at({{100.0, 100.0}, {400.0, 250.0}});
  for (int i = 0; i < 200; ++i) {
    NetworkConfig cfg(2, 0.0, 0.0);
    for (std::size_t b = 0; b < 2; ++b) {
      cfg.bandwidth[b] = uniform01(rng) * 1e8;
      cfg.power[b] = uniform01(rng);
    }
    const Vec2 user{uniform01(rng) * 500.0, uniform01(rng) * 500.0};
    const double c0 = capacity_exact(cfg, user, dep, ch);
    auto up_b = cfg;
    up_b.bandwidth[i % 2] *= 1.5;
    auto up_p = cfg;
    up_p.power[i % 2] = std::min(1.0, up_p.power[i % 2] * 1.5);
    CHECK(capacity_exact(up_b, user, dep, ch) >= c0);
    CHECK(capacity_exact(up_p, user, dep, ch) >= c0);
  }
}

TEST_CASE("total power") {
  const ChannelParams ch;
  CHECK(total_power(NetworkConfig(2, 1e6, 1.0), ch) == doctest::Approx(2.0 / 0.38 + 10.0).epsilon(1e-14));
  CHECK(total_power(NetworkConfig(2, 1e6, 1.0), ch) == doctest::Approx(15.263).epsilon(1e-4));
  CHECK(total_power(NetworkConfig(3, 1e6, 0.0), ch) == doctest::Approx(15.0));
  CHECK(total_power(NetworkConfig(0, 0.0, 0.0), ch) == 0.0);
  // Affine in P with slope lambda per BS.
  NetworkConfig a(4, 1e6, 0.2), b = a;
  b.power[2] += 0.3;
  CHECK(total_power(b, ch) - total_power(a, ch) == doctest::Approx(0.3 * ch.lambda).epsilon(1e-12));
}

TEST_CASE("feasibility projection") {
  ResourceLimits lim;
  lim.b_max = 100.0;
  lim.p_max = 2.0;
  NetworkConfig c(3, 0.0, 0.0);
  c.bandwidth = {-5.0, 60.0, 90.0};
  c.power = {-1.0, 1.0, 3.0};
  project_feasible(c, lim);
  CHECK(c.bandwidth[0] == 0.0);
  CHECK(c.bandwidth[1] + c.bandwidth[2] == doctest::Approx(100.0));
  CHECK(c.bandwidth[1] / c.bandwidth[2] == doctest::Approx(60.0 / 90.0));
  CHECK(c.power == std::vector<double>{0.0, 1.0, 2.0});
  CHECK(is_feasible(c, lim));
  lim.b_min = 40.0;
  CHECK_THROWS_AS(project_feasible(c, lim), ConfigError);
}

TEST_CASE("deployment follows traffic") {
  const Grid g = square(4, 25.0);
  Field uniform(g, 1.0);
  std::vector<double> counts(g.size(), 0.0);
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    const auto d = deploy(1, uniform, static_cast<std::uint64_t>(s));
    counts[g.locate(d.positions[0])] += 1.0;
  }
  const double expected = static_cast<double>(draws) / static_cast<double>(g.size());
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 37.7);  // chi-square, 15 dof, p = 0.001

  Field spike(g, 0.0);
  spike[5] = 3.0;
  DeployOptions opt;
  opt.min_separation = 1.0;
  const auto d = deploy(6, spike, 3, opt);
  const Vec2 c = g.center(5);
  for (const auto& p : d.positions) {
    CHECK(std::abs(p.x - c.x) <= 0.5 * g.cell_size);
    CHECK(std::abs(p.y - c.y) <= 0.5 * g.cell_size);
  }

  const auto a = deploy(8, uniform, 17);
  const auto b = deploy(8, uniform, 17);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.positions[i].x == b.positions[i].x);
    CHECK(a.positions[i].y == b.positions[i].y);
  }
  CHECK(a.adjacency_threshold == doctest::Approx(default_adjacency_threshold(a.positions)));

  DeployOptions tight;
  tight.min_separation = 500.0;
  CHECK_THROWS_AS(deploy(5, uniform, 1, tight), ConfigError);
  CHECK_THROWS_AS(deploy(0, uniform, 1), ConfigError);
}

TEST_CASE("shadowing") {
  const Grid g = square(100, 10.0);
  const auto dep = at({{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 6}, {7, 7}, {8, 8}, {9, 9}, {10, 10}});
  for (double v : sample_shadowing(dep, g, 0.0, 3)) CHECK(v == 0.0);
  const auto s = sample_shadowing(dep, g, 10.0, 3);
  REQUIRE(s.size() == 100000);
  double mean = 0.0, sq = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());
  for (double v : s) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / static_cast<double>(s.size() - 1));
  CHECK(std::abs(sd - 10.0) <= 0.5);
  CHECK(std::abs(mean) <= 0.2);
  CHECK(sample_shadowing(dep, g, 10.0, 3) == s);
  CHECK(sample_shadowing(dep, g, 10.0, 4) != s);
}

TEST_CASE("gain tables agree with the point formulas") {
  const Grid g = square(5, 40.0);
  const ChannelParams ch;
  const ResourceLimits lim;
  const auto dep = at({{30.0, 50.0}, {150.0, 120.0}});
  const auto shadow = sample_shadowing(dep, g, 10.0, 9);
  const ChannelGains gains(dep, g, ch, shadow);
  NetworkConfig cfg(2, 0.0, 0.0);
  cfg.bandwidth = {1e8, 2e8};
  cfg.power = {0.4, 0.9};
  const auto ex = capacity_exact_points(cfg, gains);
  const auto lb = capacity_lb_points(cfg, gains, lim);
  for (std::size_t j = 0; j < g.size(); ++j) {
    double c = 0.0, l = 0.0;
    for (std::size_t n = 0; n < 2; ++n) {
      const double loss = pathloss(g.center(j), dep.positions[n], ch, shadow[n * g.size() + j]);
      c += cfg.bandwidth[n] * std::log2(1.0 + cfg.power[n] / loss / (ch.sigma2 * cfg.bandwidth[n]));
      l += cfg.bandwidth[n] * std::log2(1.0 + cfg.power[n] / loss / (ch.sigma2 * lim.b_max));
    }
    CHECK(ex[j] == doctest::Approx(c).epsilon(1e-12));
    CHECK(lb[j] == doctest::Approx(l).epsilon(1e-12));
  }
  const ChannelGains plain(dep, g, ch);
  for (std::size_t j = 0; j < g.size(); ++j) {
    CHECK(capacity_exact_points(cfg, plain)[j] == doctest::Approx(capacity_exact(cfg, g.center(j), dep, ch)).epsilon(1e-12));
  }
}
