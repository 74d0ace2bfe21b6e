#include <cmath>

#include "doctest.h"
#include "mkvlab/core/errors.hpp"
#include "mkvlab/experiments/experiments.hpp"

using namespace mkvlab;

namespace {

bool same_tables(const ExperimentReport& a, const ExperimentReport& b) {
  if (a.tables.size() != b.tables.size()) return false;
  for (std::size_t t = 0; t < a.tables.size(); ++t) {
    const auto& x = a.tables[t].rows;
    const auto& y = b.tables[t].rows;
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x[i].size(); ++j)
        if (!(x[i][j] == y[i][j] || (std::isnan(x[i][j]) && std::isnan(y[i][j])))) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("report lookups") {
  ExperimentReport r;
  r.scenario = "x";
  CHECK_FALSE(r.passed());
  r.quantities.push_back({"a", 1.0, 0.0});
  r.verdicts.push_back({"v", true, ""});
  CHECK(r.passed());
  CHECK(r.quantity("a").value == 1.0);
  CHECK_THROWS_AS(r.quantity("b"), RangeError);
  CHECK_THROWS_AS(r.verdict("w"), RangeError);
  r.verdicts.push_back({"w", false, ""});
  CHECK_FALSE(r.passed());

  SeedPlan s;
  CHECK(s.at(0) != s.at(1));
  CHECK(s.at(3) == SeedPlan{}.at(3));
}

TEST_CASE("inadmissible triple table") {
  const auto t = inadmissible_triples(50);
  REQUIRE(t.size() == 50);
  for (const auto& e : t) {
    CHECK_FALSE(e.in_class_D);
    CHECK(e.k <= e.p);
  }
  CHECK_THROWS_AS(inadmissible_triples(100000), ParameterError);
}

TEST_CASE("lamb-oseen at small scale") {
  LambOseenParams p;
  p.particles = 300;
  p.dt = 0.1;
  p.seeds.count = 2;
  p.pair_dt = 1e-3;
  const ExperimentReport r = run_lamb_oseen(p);
  CHECK(r.verdict("two_vortex_radius").passed);
  CHECK(r.quantity("pair_radius_drift").value <= 1e-6);
  CHECK(r.quantity("pair_angle").value == doctest::Approx(r.quantity("pair_angle_predicted").value).epsilon(1e-3));
  CHECK(r.quantity("radial_bins").value == 14.0);
  CHECK(r.tables.front().rows.size() == 2);
  CHECK(same_tables(r, run_lamb_oseen(p)));
}

TEST_CASE("decay slope of a frozen spread law is zero") {
  DecayParams p;
  p.dim = 1;
  p.k = 2.0;
  p.sigma = 0.0;
  p.start_std = 0.5;
  p.particles = 5000;
  p.seeds.count = 1;
  const ExperimentReport r = run_decay_slope(p);
  CHECK(std::abs(r.quantity("slope").value) < 1e-12);
  CHECK(r.passed());

  DecayParams bad = p;
  bad.k = 1.0;
  CHECK_THROWS_AS(run_decay_slope(bad), ParameterError);
  bad = p;
  bad.start_std = 0.0;
  CHECK_THROWS_AS(run_decay_slope(bad), ParameterError);
}

TEST_CASE("entropy cost estimators at small scale") {
  EntropyCostParams p;
  p.particles = 400;
  p.dt = 0.25;
  p.seeds.count = 2;
  p.grid_nodes = 128;
  const ExperimentReport r = run_entropy_cost(p);
  // Common random numbers make the initial coupling an exact translation.
  CHECK(r.quantity("w2_rel_error").value < 1e-12);
  CHECK(r.verdict("entropy_finite").passed);
  CHECK(r.quantity("C(t=0.25)").value > 0.0);
  CHECK(same_tables(r, run_entropy_cost(p)));
}

TEST_CASE("k*-Wasserstein at small scale") {
  KStarWassersteinParams p;
  p.particles = 400;
  p.dt = 0.25;
  p.seeds.count = 1;
  p.grid_nodes = 128;
  const ExperimentReport r = run_kstar_wasserstein(p);
  CHECK(r.quantity("zero_offset_distance").value == 0.0);
  CHECK(r.quantity("r2").value > 0.9);

  // In d = 1 the pair (pq/(q-1), k) can only fail through pq/(q-1) < k.
  KStarWassersteinParams bad = p;
  bad.p = 1.0;
  bad.q = 1.5;
  bad.k = 4.0;
  CHECK_THROWS_AS(run_kstar_wasserstein(bad), ParameterError);
}

TEST_CASE("picard contraction with a measure-independent drift") {
  PicardContractionParams p;
  p.picard = default_contraction_picard();
  p.picard.sde.drift = DriftSpec{};
  p.picard.sde.drift.b1 = LinearDrift::ornstein_uhlenbeck(1, 1.0);
  p.picard.particles = 1000;
  p.picard.sde.dt = 0.1;
  p.seeds.count = 2;
  p.chaos_check = false;
  const ExperimentReport r = run_picard_contraction(p);
  CHECK(r.verdict("class_d_gate").passed);
  CHECK(r.verdict("converged").passed);
  CHECK(r.verdict("self_consistency").passed);
  for (const auto& row : r.tables[1].rows) CHECK(row[2] == 2.0);  // iterations 0 and 1
}
