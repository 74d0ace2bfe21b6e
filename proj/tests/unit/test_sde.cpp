#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/parallel.hpp"
#include "mkvlab/sde/sde.hpp"

using namespace mkvlab;

namespace {

SdeConfig brownian(int dim, std::size_t n, std::uint64_t seed, double T = 1.0, double dt = 0.05) {
  SdeConfig c;
  c.dim = dim;
  c.sigma = DiffusionSpec::constant(dim, 1.0);
  c.horizon = T;
  c.dt = dt;
  c.n_particles = n;
  c.seed = seed;
  return c;
}

KernelSpec kernel(KernelFamily f, int d, double eps) {
  KernelSpec k;
  k.family = f;
  k.dim = d;
  k.epsilon = eps;
  k.beta = 0.5;
  return k;
}

const InitialLaw kOrigin2(ExactSampler{2, DiracLaw{}});

}  // namespace

TEST_CASE("em_step examples") {
  const Mat3 id{Vec{1, 0, 0}, Vec{0, 1, 0}, Vec{0, 0, 1}};
  const Vec w{0.3, -1.2, 0};
  const Vec a = em_step({1, 2, 0}, 0.0, {}, id, 0.04, w);
  CHECK(a[0] == doctest::Approx(1 + 0.2 * 0.3));
  CHECK(a[1] == doctest::Approx(2 - 0.2 * 1.2));
  const Vec b = em_step({1, 2, 0}, 0.0, {3, -1, 0}, id, 0.1, {});
  CHECK(b[0] == doctest::Approx(1.3));
  CHECK(b[1] == doctest::Approx(1.9));
  const Mat3 two{Vec{2, 0, 0}, Vec{}, Vec{}};
  CHECK(em_step({0, 0, 0}, 0.0, {1, 0, 0}, two, 0.01, {0.5, 0, 0})[0] == doctest::Approx(0.11));
  try {
    em_step({1e308, 0, 0}, 0.7, {1e308, 0, 0}, id, 10.0, {});
    FAIL("expected overflow");
  } catch (const OverflowError& e) {
    CHECK(e.time() == 0.7);
    CHECK(e.state()[0] == 1e308);
  }
}

TEST_CASE("config validation and time snapping") {
  SdeConfig c = brownian(1, 10, 0, 1.0, 0.3);
  CHECK(c.steps() == 4);
  CHECK(c.step_length() == doctest::Approx(0.25));
  c.record_times = {0.0, 0.26, 0.5, 0.49, 1.0};
  CHECK(c.record_steps() == std::vector<std::size_t>{0, 1, 2, 4});
  c.dt = 2.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  SdeConfig e = brownian(2, 10, 0);
  e.sigma.ellipticity = std::make_pair(0.5, 2.0);
  CHECK_NOTHROW(e.validate());
  e.sigma.matrix[1][1] = 0.1;
  CHECK_THROWS_AS(e.validate(), ParameterError);
  SdeConfig f = brownian(1, 10, 0);
  f.sigma.form = DiffusionSpec::Form::kDiagonalAffine;
  f.sigma.base = 1.0;
  f.sigma.slope = 0.5;
  f.sigma.clamp_radius = 1.0;
  f.sigma.ellipticity = std::make_pair(0.25, 2.25);
  CHECK_NOTHROW(f.validate());
  f.sigma.slope = 1.5;
  CHECK_THROWS_AS(f.validate(), ParameterError);
  CHECK(f.sigma.at({5, 0, 0})[0][0] == doctest::Approx(2.5));
}

TEST_CASE("brownian motion from the origin has unit variance at T = 1") {
  const std::size_t n = 10000;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto bundle = simulate_interacting(brownian(2, n, seed), kOrigin2);
    const Moments m = empirical_moments(bundle, 1.0, 2.0);
    for (int a = 0; a < 2; ++a) CHECK(std::abs(m.variance[a] - 1.0) <= 5 / std::sqrt(double(n)));
  }
}

TEST_CASE("fourth moment of brownian motion and Jensen") {
  const std::size_t n = 100000;
  const double T = 0.5;
  const auto bundle = simulate_interacting(brownian(1, n, 4, T, 0.1), InitialLaw(ExactSampler{1, DiracLaw{}}));
  const Moments m4 = empirical_moments(bundle, T, 4.0);
  // Var(X^4) = (105 - 9) T^4.
  CHECK(std::abs(m4.axis_absolute[0] - 3 * T * T) <= 4 * std::sqrt(96.0) * T * T / std::sqrt(double(n)));
  const Moments m1 = empirical_moments(bundle, T, 1.0);
  for (double q : {1.5, 2.0, 3.0}) CHECK(std::pow(m1.absolute, q) <= empirical_moments(bundle, T, q).absolute);
  CHECK(empirical_moments(bundle, 0.0, 2.0).absolute == 0.0);
  CHECK_THROWS_AS(empirical_moments(bundle, 0.25, 2.0), RangeError);
}

TEST_CASE("antisymmetric interaction keeps the empirical mean fixed") {
  SdeConfig c = brownian(2, 200, 3, 0.5, 0.01);
  c.sigma = DiffusionSpec::constant(2, 0.0);
  c.drift.b0 = MeanFieldTerm{kernel(KernelFamily::kCoulomb, 2, 0.1), 1.0};
  c.record_times = {0.0, 0.1, 0.25, 0.5};
  const auto bundle = simulate_interacting(c, InitialLaw(ExactSampler{2, GaussianLaw{}}));
  const Vec m0 = bundle.at(0).mean();
  for (std::size_t j = 1; j < bundle.times.size(); ++j) {
    const Vec m = bundle.at(j).mean();
    CHECK(std::abs(m[0] - m0[0]) <= 1e-10);
    CHECK(std::abs(m[1] - m0[1]) <= 1e-10);
  }
  // Particles actually moved.
  CHECK(norm(bundle.states.back()[0] - bundle.states.front()[0]) > 1e-3);
}

TEST_CASE("interacting runs are bit-identical under 1 and 8 threads") {
  SdeConfig c = brownian(2, 300, 9, 0.2, 0.02);
  c.drift.b0 = MeanFieldTerm{kernel(KernelFamily::kBiotSavart, 2, 0.05), 1.0};
  c.drift.b1 = LinearDrift::ornstein_uhlenbeck(2, 0.5);
  c.record_times = {0.0, 0.1, 0.2};
  const InitialLaw g(ExactSampler{2, GaussianLaw{}});
  set_max_threads(1);
  const auto one = simulate_interacting(c, g);
  set_max_threads(8);
  const auto eight = simulate_interacting(c, g);
  set_max_threads(0);
  CHECK(one == eight);
}

TEST_CASE("cell lists reproduce the direct sum for truncated kernels") {
  SdeConfig c = brownian(2, 400, 2, 0.01, 0.01);
  KernelSpec k = kernel(KernelFamily::kCoulomb, 2, 0.05);
  k.cutoff = 0.4;
  c.drift.b0 = MeanFieldTerm{k, 1.0};
  const auto start = sample_initial(InitialLaw(ExactSampler{2, GaussianLaw{}}), 400, 2);
  const auto cells = simulate_interacting(c, start);
  // One step by hand with the direct O(N^2) loop.
  const Mat3 id{Vec{1, 0, 0}, Vec{0, 1, 0}, Vec{0, 0, 1}};
  double worst = 0.0;
  for (std::size_t i = 0; i < start.size(); ++i) {
    Vec acc{};
    for (std::size_t j = 0; j < start.size(); ++j)
      if (j != i) acc += eval_kernel(k, start[i], start[j]);
    const Vec x = em_step(start[i], 0.0, (1.0 / 400) * acc, id, 0.01, step_noise(2, std::uint32_t(i), 0, 2));
    worst = std::max(worst, norm(x - cells.states[1][i]));
  }
  CHECK(worst <= 1e-12);
  set_max_threads(3);
  CHECK(simulate_interacting(c, start) == cells);
  set_max_threads(0);
}

TEST_CASE("collisions at epsilon = 0 abort with the step index") {
  SdeConfig c = brownian(2, 4, 0, 0.1, 0.01);
  c.drift.b0 = MeanFieldTerm{kernel(KernelFamily::kBiotSavart, 2, 0.0), 1.0};
  try {
    simulate_interacting(c, EmpiricalMeasure(2, {{0, 0, 0}, {1, 0, 0}, {1, 0, 0}, {2, 0, 0}}));
    FAIL("expected a collision");
  } catch (const CollisionError& e) {
    CHECK(e.step() == 0);
    CHECK(e.first() == 1);
    CHECK(e.second() == 2);
  }
}

TEST_CASE("a lone vortex feels only its local drift") {
  SdeConfig c = brownian(2, 1, 0, 1.0, 0.1);
  c.sigma = DiffusionSpec::constant(2, 0.0);
  c.drift.b0 = MeanFieldTerm{kernel(KernelFamily::kBiotSavart, 2, 0.0), 1.0};
  c.drift.b1 = LinearDrift::ornstein_uhlenbeck(2, 1.0);
  const auto b = simulate_interacting(c, EmpiricalMeasure(2, {{1, 1, 0}}));
  CHECK(b.states.back()[0][0] == doctest::Approx(std::pow(0.9, 10)));
}

TEST_CASE("explicit Euler on the linear ODE is first order") {
  double prev = 0.0;
  for (double dt : {0.1, 0.01, 0.001}) {
    SdeConfig c = brownian(1, 1, 0, 1.0, dt);
    c.sigma = DiffusionSpec::constant(1, 0.0);
    c.drift.b1 = LinearDrift::ornstein_uhlenbeck(1, 1.0);
    const MeasureFlow unused = MeasureFlow::constant({0.0, 1.0}, Density::gaussian(Grid::cube(1, 3, 11), {}, {1, 1, 1}));
    const auto b = simulate_decoupled(c, unused, EmpiricalMeasure(1, {{1, 0, 0}}));
    const double err = std::abs(b.states.back()[0][0] - std::exp(-1.0));
    if (prev > 0.0) CHECK(err / prev == doctest::Approx(0.1).epsilon(0.1));
    prev = err;
  }
}

TEST_CASE("decoupled equals interacting when the drift ignores the measure") {
  SdeConfig c = brownian(2, 500, 6, 0.5, 0.05);
  c.drift.b1 = LinearDrift::ornstein_uhlenbeck(2, 0.7);
  c.drift.b0 = MeanFieldTerm{kernel(KernelFamily::kCoulomb, 2, 0.1), 0.0};
  const InitialLaw g(ExactSampler{2, GaussianLaw{}});
  const MeasureFlow flow = MeasureFlow::constant({0.0, 0.5}, Density::gaussian(Grid::cube(2, 4, 21), {}, {1, 1, 1}));
  CHECK(simulate_decoupled(c, flow, g) == simulate_interacting(c, g));
}

TEST_CASE("decoupled Coulomb against a spreading Gaussian flow stays finite") {
  SdeConfig c = brownian(2, 200, 1, 0.5, 0.05);
  c.drift.b0 = MeanFieldTerm{kernel(KernelFamily::kCoulomb, 2, 0.05), 1.0};
  const Grid g = Grid::cube(2, 6.0, 61);
  std::vector<double> mesh;
  std::vector<MeasureFlow::Node> nodes;
  for (int j = 0; j <= 5; ++j) {
    const double t = 0.1 * j;
    mesh.push_back(t);
    const double s = std::sqrt(1 + t);
    nodes.push_back(Density::gaussian(g, {}, {s, s, 1}));
  }
  const auto b = simulate_decoupled(c, MeasureFlow(mesh, nodes), InitialLaw(ExactSampler{2, GaussianLaw{}}));
  for (const auto& p : b.states.back()) CHECK(all_finite(p));
  c.horizon = 1.0;
  CHECK_THROWS_AS(simulate_decoupled(c, MeasureFlow(mesh, nodes), InitialLaw(ExactSampler{2, GaussianLaw{}})), RangeError);
}

TEST_CASE("decoupled paths permute with their particle ids") {
  SdeConfig c = brownian(1, 50, 12, 0.3, 0.03);
  c.drift.b0 = MeanFieldTerm{kernel(KernelFamily::kRiesz, 1, 0.1), 1.0};
  const Grid g = Grid::cube(1, 5.0, 101);
  const MeasureFlow flow = MeasureFlow::constant({0.0, 0.3}, Density::gaussian(g, {}, {1, 1, 1}));
  const auto start = sample_initial(InitialLaw(ExactSampler{1, GaussianLaw{}}), 50, 12);
  std::vector<std::uint32_t> perm(50);
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(3));
  std::vector<Vec> shuffled(50);
  for (std::size_t i = 0; i < 50; ++i) shuffled[i] = start[perm[i]];
  const auto base = simulate_decoupled(c, flow, start);
  const auto moved = simulate_decoupled(c, flow, EmpiricalMeasure(1, shuffled), perm);
  for (std::size_t j = 0; j < base.times.size(); ++j)
    for (std::size_t i = 0; i < 50; ++i) CHECK(moved.states[j][i] == base.states[j][perm[i]]);
}

TEST_CASE("weak order one for the OU second moment") {
  // E X_T^2 for dX = -X dt + dW from 0 is (1 - e^{-2T})/2.
  const double exact = (1 - std::exp(-2.0)) / 2;
  auto bias = [&](double dt, std::size_t n) {
    SdeConfig c = brownian(1, n, 77, 1.0, dt);
    c.drift.b1 = LinearDrift::ornstein_uhlenbeck(1, 1.0);
    const auto b = simulate_interacting(c, InitialLaw(ExactSampler{1, DiracLaw{}}));
    return empirical_moments(b, 1.0, 2.0).absolute - exact;
  };
  const double e1 = bias(0.2, 100000), e2 = bias(0.1, 100000), e3 = bias(0.05, 400000);
  CHECK(e2 / e1 == doctest::Approx(0.5).epsilon(0.3));
  CHECK(e3 / e2 == doctest::Approx(0.5).epsilon(0.3));
}

TEST_CASE("noise streams are keyed by seed, particle and step") {
  CHECK(step_noise(1, 2, 3, 3) == step_noise(1, 2, 3, 3));
  CHECK(step_noise(1, 2, 3, 3) != step_noise(1, 2, 4, 3));
  CHECK(step_noise(1, 2, 3, 3) != step_noise(1, 3, 3, 3));
  CHECK(step_noise(1, 2, 3, 1)[1] == 0.0);
}
