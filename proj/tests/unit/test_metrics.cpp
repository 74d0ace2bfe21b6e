#include <cmath>
#include <numbers>
#include <random>

#include "../support/fixtures.hpp"
#include "doctest.h"
#include "mkvlab/core/errors.hpp"
#include "mkvlab/metrics/assignment.hpp"
#include "mkvlab/metrics/distances.hpp"
#include "mkvlab/metrics/kstar.hpp"

using namespace mkvlab;
using mkvlab::testing::normal_cdf;

namespace {

// Node-centred grid whose closed lattice balls hold exactly 2r/s nodes.
Grid offset_line(double half, double s) {
  const auto n = static_cast<std::size_t>(std::llround(2 * half / s));
  return Grid(1, {-half + s / 2, 0, 0}, {s, 1, 1}, {n, 1, 1});
}

Density indicator(const Grid& g, double a, double b) {
  return Density::from_function(g, [&](const Vec& x) { return x[0] > a && x[0] < b ? 1.0 : 0.0; });
}

}  // namespace

TEST_CASE("conjugate exponent and parameter checks") {
  CHECK(k_star_dual_exponent(2.0) == 2.0);
  CHECK(k_star_dual_exponent(3.0) == doctest::Approx(1.5));
  CHECK(k_star_dual_exponent(kInfinity) == 1.0);
  CHECK_THROWS_AS(KStarParams{1.0}.validate(1), ParameterError);
  CHECK_THROWS_AS(KStarParams{0.5}.validate(1), ParameterError);
  CHECK_THROWS_AS((KStarParams{2.0, 1.2}).validate(2), ParameterError);
  CHECK_NOTHROW((KStarParams{2.0, 1.5}).validate(2));
  CHECK(KStarParams{}.radius(3) == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("covering constants by enumeration") {
  const auto c1 = covering_constants(1, 1.0);
  CHECK(c1.lattice_balls_per_unit_ball == 4);
  CHECK(c1.unit_balls_per_lattice_ball == 1);
  CHECK(c1.c_of_r == 4);
  const auto c2 = covering_constants(2, std::sqrt(2.0));
  CHECK(c2.lattice_balls_per_unit_ball == 21);
  CHECK(c2.c_of_r >= 21);
  // Larger radii need more unit balls and meet more lattice balls.
  CHECK(covering_constants(1, 3.0).c_of_r > c1.c_of_r);
  CHECK(covering_constants(3, std::sqrt(3.0)).c_of_r >= 1);
}

TEST_CASE("lattice sum at k = inf is mass weighted by ball multiplicity") {
  const Grid g = offset_line(4.0, 0.05);
  std::mt19937_64 rng(3);
  const Density mu = testing::random_mixture(g, rng);
  const double s = kstar_norm_surrogate(mu, {kInfinity, 1.0});
  CHECK(s >= 1.0 - 1e-12);
  CHECK(s <= covering_constants(1, 1.0).c_of_r);
  const auto m = lattice_multiplicity(g, 1.0);
  double weighted = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) weighted += m[i] * mu[i];
  CHECK(s == doctest::Approx(weighted * g.cell_volume()).epsilon(1e-12));
}

TEST_CASE("uniform on [0,1] near k = 1 sees the sup in two balls") {
  const Grid g(1, {-2 + 0.005, 0, 0}, {0.01, 1, 1}, {400, 1, 1});
  CHECK(kstar_norm_surrogate(indicator(g, 0.0, 1.0), {1.0001, 1.0}) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("gaussian lattice sum matches its erf closed form") {
  const Grid g = Grid::cube(1, 8.0, 1601);
  const Density gauss = Density::gaussian(g, {}, {1, 1, 1});
  // g^2 = phi_{1/2} / (2 sqrt(pi)), so the L2 norm over [z-1, z+1] is closed form.
  double expected = 0.0;
  for (int z = -9; z <= 9; ++z) {
    const double mass = normal_cdf(std::sqrt(2.0) * (z + 1)) - normal_cdf(std::sqrt(2.0) * (z - 1));
    expected += std::sqrt(mass / (2 * std::sqrt(std::numbers::pi)));
  }
  const double s = kstar_norm_surrogate(gauss, {2.0, 1.0});
  CHECK(s == doctest::Approx(expected).epsilon(0.01));
  CHECK(s >= std::pow(4 * std::numbers::pi, -0.25));
}

TEST_CASE("dual oracle: uniform on [0,1] has value 1") {
  const Grid g = offset_line(2.0, 0.02);
  const Density uni = indicator(g, 0.0, 1.0);
  for (double k : {1.5, 2.0, 3.0}) CHECK(kstar_norm_dual_oracle(uni, {k}) == doctest::Approx(1.0).epsilon(2e-4));
  const auto a = kstar_norm_dual_oracle_detail(uni, {2.0});
  const auto b = kstar_norm_dual_oracle_detail(uni, {2.0});
  CHECK(a.value == b.value);
  CHECK(a.iterations == b.iterations);
  CHECK(a.upper_bound >= a.value);
}

TEST_CASE("dual oracle against hand-solved point programs") {
  // One loaded node: max c f s.t. f^k dV <= 1  =>  value dV^{-1/k}.
  // Two nodes in one unit ball: value || (c1, c2) ||_{k'} dV^{-1/k}.
  // Two nodes more than two apart: the programs decouple and add.
  const double s = 0.25;
  const Grid g(1, {-3, 0, 0}, {s, 1, 1}, {25, 1, 1});
  const double k = 2.5;
  const double kp = k_star_dual_exponent(k);
  auto spikes = [&](std::vector<std::pair<std::size_t, double>> at) {
    std::vector<double> v(g.size(), 0.0);
    for (auto [i, w] : at) v[i] = w;
    return Density(g, v);
  };
  CHECK(kstar_norm_dual_oracle(spikes({{12, 1.0}}), {k}) == doctest::Approx(std::pow(s, -1 / k)).epsilon(2e-4));
  const double near = std::pow(std::pow(0.25, kp) + std::pow(0.75, kp), 1 / kp) * std::pow(s, -1 / k);
  CHECK(kstar_norm_dual_oracle(spikes({{10, 1.0}, {12, 3.0}}), {k}) == doctest::Approx(near).epsilon(2e-4));
  const double far = (0.25 + 0.75) * std::pow(s, -1 / k);
  CHECK(kstar_norm_dual_oracle(spikes({{2, 1.0}, {22, 3.0}}), {k}) == doctest::Approx(far).epsilon(2e-4));
}

TEST_CASE("dual oracle: k = inf is the mass; d = 3 rejected") {
  const Grid g = offset_line(2.0, 0.05);
  CHECK(kstar_norm_dual_oracle(indicator(g, -0.5, 0.7), {kInfinity}) == doctest::Approx(1.0));
  const Density cube = Density::gaussian(Grid::cube(3, 2.0, 9), {}, {1, 1, 1});
  CHECK_THROWS_AS(kstar_norm_dual_oracle(cube, {2.0}), ParameterError);
}

TEST_CASE("dual oracle reports its bracket on nonconvergence") {
  const Grid g = offset_line(2.0, 0.02);
  DualOracleOptions opts;
  opts.max_iterations = 3;
  try {
    kstar_norm_dual_oracle(indicator(g, 0.0, 1.0), {2.0}, opts);
    FAIL("expected nonconvergence");
  } catch (const NonConvergenceError& e) {
    CHECK(e.lower_bound() <= e.upper_bound());
    CHECK(e.lower_bound() > 0.0);
  }
}

TEST_CASE("surrogate / oracle sandwich on random 1D mixtures") {
  const Grid g = offset_line(4.0, 0.05);
  const int c = covering_constants(1, 1.0).c_of_r;
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const Density mu = testing::random_mixture(g, rng);
    const double k = 1.5 + trial * 0.5;
    const double ratio = kstar_norm_surrogate(mu, {k, 1.0}) / kstar_norm_dual_oracle(mu, {k});
    CHECK(ratio >= 1.0 / c);
    CHECK(ratio <= c);
  }
}

TEST_CASE("kstar distance: identity, symmetry, monotone in the shift") {
  const Grid g = Grid::cube(1, 8.0, 641);
  const Density a = Density::gaussian(g, {}, {1, 1, 1});
  CHECK(kstar_distance(a, a, {2.0}) == 0.0);
  double prev = 0.0;
  for (double m : {0.1, 0.2, 0.4, 0.8}) {
    const Density b = Density::gaussian(g, {m, 0, 0}, {1, 1, 1});
    const double d = kstar_distance(a, b, {2.0});
    CHECK(d == kstar_distance(b, a, {2.0}));
    CHECK(d > prev);
    prev = d;
  }
  CHECK_THROWS_AS(kstar_distance(a, Density::gaussian(Grid::cube(1, 7.0, 641), {}, {1, 1, 1}), {2.0}), ShapeError);
}

TEST_CASE("kstar distance at k = inf over disjoint supports recovers L1") {
  const Grid g = offset_line(3.0, 0.01);
  const Density a = indicator(g, 0.1, 0.4);
  const Density b = indicator(g, 0.6, 0.9);
  // Every node of (0, 1) lies in exactly the balls around 0 and 1.
  const auto m = lattice_multiplicity(g, 1.0);
  CHECK(m[g.flatten({350, 0, 0})] == 2);
  const double d = kstar_distance(a, b, {kInfinity, 1.0});
  CHECK(d / 2.0 == doctest::Approx(tv_distance(a, b)).epsilon(1e-3));
  CHECK(tv_distance(a, b) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("metric axioms, TV comparison and exponent monotonicity on random densities") {
  std::mt19937_64 rng(99);
  for (int dim : {1, 2}) {
    const Grid g = dim == 1 ? offset_line(4.0, 0.05) : Grid(2, {-3.95, -3.95, 0}, {0.1, 0.1, 1}, {80, 80, 1});
    const double r = std::sqrt(double(dim));
    const double ball = unit_ball_volume(dim) * std::pow(r, dim);
    for (int trial = 0; trial < (dim == 1 ? 20 : 5); ++trial) {
      const Density x = testing::random_mixture(g, rng);
      const Density y = testing::random_mixture(g, rng);
      const Density z = testing::random_mixture(g, rng);
      const double k = 1.25 + trial % 4;
      const KStarParams kp{k};
      const double dxy = kstar_distance(x, y, kp);
      CHECK(dxy > 0.0);
      CHECK(dxy == kstar_distance(y, x, kp));
      CHECK(kstar_distance(x, z, kp) <= dxy + kstar_distance(y, z, kp) + 1e-12);
      CHECK(dxy >= std::pow(ball, -1.0 / k) * tv_distance(x, y) * (1 - 1e-9));
      const double p = k * 2;
      CHECK(kstar_norm_surrogate(x, {p}) <=
            std::pow(ball, (p - k) / (p * k)) * kstar_norm_surrogate(x, kp) * (1 + 1e-9));
    }
  }
}

TEST_CASE("total variation") {
  const Grid g = Grid::cube(1, 10.0, 2001);
  const Density a = Density::gaussian(g, {}, {1, 1, 1});
  const Density b = Density::gaussian(g, {0.5, 0, 0}, {1, 1, 1});
  CHECK(tv_distance(a, a) == 0.0);
  CHECK(tv_distance(a, b) == doctest::Approx(2 * (2 * normal_cdf(0.25) - 1)).epsilon(0.01 / 0.39483));
  CHECK(std::abs(tv_distance(a, b) - 0.39483) <= 0.01);
}

TEST_CASE("relative entropy") {
  const Grid g = Grid::cube(1, 10.0, 2001);
  const Density a = Density::gaussian(g, {}, {0.8, 1, 1});
  CHECK(std::abs(relative_entropy(a, a)) <= 1e-8);
  for (double m : {0.3, 0.5, 1.0}) {
    const Density b = Density::gaussian(g, {m, 0, 0}, {0.8, 1, 1});
    const double ent = relative_entropy(a, b);
    CHECK(ent == doctest::Approx(m * m / (2 * 0.64)).epsilon(0.02));
    CHECK(tv_distance(a, b) <= std::sqrt(2 * ent));
  }
  const Grid line(1, {-1, 0, 0}, {0.01, 1, 1}, {500, 1, 1});
  CHECK(std::isinf(relative_entropy(indicator(line, 0, 1), indicator(line, 2, 3))));
}

TEST_CASE("Gibbs and Pinsker on random pairs") {
  const Grid g = offset_line(4.0, 0.05);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const Density x = testing::random_mixture(g, rng);
    const Density y = testing::random_mixture(g, rng);
    const double ent = relative_entropy(x, y);
    CHECK(ent >= 0.0);
    if (std::isfinite(ent)) CHECK(tv_distance(x, y) <= std::sqrt(2 * ent) + 1e-12);
  }
}

TEST_CASE("wasserstein examples") {
  const EmpiricalMeasure a(1, {{0, 0, 0}, {1, 0, 0}});
  const EmpiricalMeasure b(1, {{0, 0, 0}, {3, 0, 0}});
  CHECK(wasserstein_q(a, b, 1) == doctest::Approx(1.0));
  CHECK(wasserstein_q(a, b, 2) == doctest::Approx(std::sqrt(2.0)));
  std::mt19937_64 rng(2);
  const auto c = testing::random_cloud(2, 50, rng);
  for (double q : {1.0, 2.0, 3.5}) CHECK(wasserstein_q(c, c, q) == 0.0);
  CHECK_THROWS_AS(wasserstein_q(a, EmpiricalMeasure(1, {{0, 0, 0}}), 1), ShapeError);
  CHECK_THROWS_AS(wasserstein_q(a, b, 0.5), ParameterError);
}

TEST_CASE("assignment equals brute force in d = 2 and sorting in d = 1") {
  std::mt19937_64 rng(11);
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto a = testing::random_cloud(2, n, rng);
    const auto b = testing::random_cloud(2, n, rng);
    for (double q : {1.0, 2.0}) {
      const double w = wasserstein_q(a, b, q);
      CHECK(std::abs(w - testing::brute_force_wasserstein(a, b, q)) <= 1e-12);
    }
  }
  for (std::size_t n : {5, 17, 64}) {
    const auto a = testing::random_cloud(1, n, rng);
    const auto b = testing::random_cloud(1, n, rng, 2.0);
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = std::pow(std::abs(a[i][0] - b[j][0]), 2.0);
    const auto match = solve_assignment(cost, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + match[i]];
    CHECK(std::abs(std::sqrt(total / n) - wasserstein_q(a, b, 2.0)) <= 1e-12);
  }
}

TEST_CASE("wasserstein is nondecreasing in q") {
  std::mt19937_64 rng(4);
  for (int dim : {1, 2}) {
    for (int i = 0; i < 10; ++i) {
      const auto a = testing::random_cloud(dim, 40, rng);
      const auto b = testing::random_cloud(dim, 40, rng, 1.5);
      const double w1 = wasserstein_q(a, b, 1), w2 = wasserstein_q(a, b, 2), w4 = wasserstein_q(a, b, 4);
      CHECK(w1 <= w2 + 1e-12);
      CHECK(w2 <= w4 + 1e-12);
    }
  }
}
