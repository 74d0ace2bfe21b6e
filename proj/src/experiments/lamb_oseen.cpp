#include <cmath>
#include <numbers>

#include "common.hpp"
#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/philox.hpp"
#include "mkvlab/measure/kde.hpp"
#include "mkvlab/metrics/distances.hpp"

namespace mkvlab {
namespace {

using detail::fmt;

constexpr std::uint64_t kReferenceSalt = 0x10A3;

SdeConfig vortex_config(const LambOseenParams& p, double epsilon, std::uint64_t seed) {
  SdeConfig c;
  c.dim = 2;
  c.sigma = DiffusionSpec::constant(2, std::sqrt(2.0 * p.nu));
  c.horizon = p.horizon;
  c.dt = p.dt;
  c.n_particles = p.particles;
  c.seed = seed;
  KernelSpec k;
  k.family = KernelFamily::kBiotSavart;
  k.dim = 2;
  k.epsilon = epsilon;
  c.drift.b0 = MeanFieldTerm{k, 1.0};
  return c;
}

// L1 distance between the histogram of |x| and the Rayleigh law of
// N(0, var I) on `bins` equal bins over [0, 4 sd) plus one tail bin.
double radial_l1(const EmpiricalMeasure& x, double var, std::size_t bins) {
  const double R = 4.0 * std::sqrt(var);
  std::vector<double> h(bins + 1, 0.0);
  for (const Vec& p : x.points()) {
    const double r = std::hypot(p[0], p[1]);
    const std::size_t i = r >= R ? bins : std::min(bins - 1, static_cast<std::size_t>(r / R * bins));
    h[i] += 1.0 / x.size();
  }
  auto survival = [&](double r) { return std::exp(-0.5 * r * r / var); };
  double l1 = 0.0;
  for (std::size_t i = 0; i < bins; ++i) l1 += std::abs(h[i] - (survival(R * i / bins) - survival(R * (i + 1) / bins)));
  return l1 + std::abs(h[bins] - survival(R));
}

double density_l1(const EmpiricalMeasure& x, double var) {
  const double sd = std::sqrt(var);
  const Grid g = Grid::cube(2, std::max(6.0 * sd, 1.0), default_nodes_per_axis(2));
  Bandwidth h = silverman_bandwidth(x, g.spacing()[0]);
  // Coverage: points beyond the window are rare; widen the grid if needed.
  double reach = 0.0;
  for (const Vec& p : x.points()) reach = std::max({reach, std::abs(p[0]), std::abs(p[1])});
  const Grid grid = reach + 3.0 * std::max(h[0], h[1]) < g.upper()[0]
                        ? g
                        : Grid::cube(2, reach + 3.0 * std::max(h[0], h[1]) + 1.0, default_nodes_per_axis(2));
  const Density est = kde_estimate(x, grid, h);
  const Density exact = Density::gaussian(grid, Vec{}, Vec{sd, sd, 1.0});
  return tv_distance(est, exact);
}

}  // namespace

ExperimentReport run_lamb_oseen(const LambOseenParams& p) {
  if (!(p.nu > 0.0)) throw ParameterError("lamb_oseen: nu must be positive");
  if (!(p.sigma0 > 0.0)) throw ParameterError("lamb_oseen: sigma0 must be positive");
  if (!(p.epsilon >= 0.0)) throw ParameterError("lamb_oseen: epsilon must be >= 0");
  if (p.particles < 2) throw ParameterError("lamb_oseen: need at least two particles");
  if (p.seeds.count < 1) throw ParameterError("lamb_oseen: need at least one seed");
  if (!(p.pair_radius > 0.0)) throw ParameterError("lamb_oseen: pair_radius must be positive");

  detail::Stopwatch clock;
  ExperimentReport r;
  r.scenario = "lamb_oseen";
  r.seed = p.seeds.base;
  const std::size_t bins =
      p.radial_bins ? p.radial_bins : static_cast<std::size_t>(std::ceil(2.0 * std::cbrt(double(p.particles))));
  const double var = p.sigma0 * p.sigma0 + 2.0 * p.nu * p.horizon;
  const InitialLaw start(ExactSampler{2, GaussianLaw{Vec{}, Vec{p.sigma0, p.sigma0, 1.0}}});
  const InitialLaw exact(ExactSampler{2, GaussianLaw{Vec{}, Vec{std::sqrt(var), std::sqrt(var), 1.0}}});

  RawTable table{"seeds", {"seed_index", "radial_l1", "radial_l1_half_eps", "radial_l1_exact_sampler", "density_l1",
                           "w2_to_exact_sampler", "w2_exact_vs_exact"}, {}};
  std::vector<double> err, err_half, err_ref, dens, w2, w2_ref;
  for (int s = 0; s < p.seeds.count; ++s) {
    const std::uint64_t seed = p.seeds.at(s);
    const TrajectoryBundle b = simulate_interacting(vortex_config(p, p.epsilon, seed), start);
    const EmpiricalMeasure x = b.at(b.times.size() - 1);
    const EmpiricalMeasure ref = sample_initial(exact, p.particles, mix_seed(seed, kReferenceSalt));
    const EmpiricalMeasure ref2 = sample_initial(exact, p.particles, mix_seed(seed, kReferenceSalt + 1));
    err.push_back(radial_l1(x, var, bins));
    err_ref.push_back(radial_l1(ref, var, bins));
    dens.push_back(density_l1(x, var));
    w2.push_back(wasserstein_q(x, ref, 2.0));
    w2_ref.push_back(wasserstein_q(ref2, ref, 2.0));
    double half = NAN;
    if (p.epsilon_halving) {
      const TrajectoryBundle bh = simulate_interacting(vortex_config(p, 0.5 * p.epsilon, seed), start);
      half = radial_l1(bh.at(bh.times.size() - 1), var, bins);
      err_half.push_back(half);
    }
    table.rows.push_back({double(s), err.back(), half, err_ref.back(), dens.back(), w2.back(), w2_ref.back()});
  }
  r.tables.push_back(std::move(table));
  detail::add_median(r, "radial_l1", err);
  detail::add_median(r, "radial_l1_exact_sampler", err_ref);
  detail::add_median(r, "density_l1", dens);
  detail::add_median(r, "w2_to_exact_sampler", w2);
  detail::add_median(r, "w2_exact_vs_exact", w2_ref);
  r.quantities.push_back({"radial_bins", double(bins), 0.0});

  const double med = detail::median(err);
  detail::add_verdict(r, "radial_l1", med <= p.max_radial_l1,
                      "median radial L1 " + fmt(med) + " <= " + fmt(p.max_radial_l1));
  if (p.epsilon_halving) {
    detail::add_median(r, "radial_l1_half_eps", err_half);
    const double growth = detail::median(err_half) / med - 1.0;
    r.quantities.push_back({"halving_growth", growth, 0.0});
    detail::add_verdict(r, "epsilon_halving", growth <= p.max_halving_growth,
                        "relative growth " + fmt(growth) + " <= " + fmt(p.max_halving_growth));
  } else {
    detail::add_verdict(r, "epsilon_halving", true, "not requested (epsilon_halving = false)");
  }

  // Two point vortices at +-a with sigma = 0 rotate rigidly about the origin.
  {
    SdeConfig c;
    c.dim = 2;
    c.sigma = DiffusionSpec::constant(2, 0.0);
    c.horizon = p.pair_horizon;
    c.dt = p.pair_dt;
    c.n_particles = 2;
    c.seed = p.seeds.base;
    KernelSpec k;
    k.family = KernelFamily::kBiotSavart;
    k.dim = 2;
    k.epsilon = p.epsilon;
    c.drift.b0 = MeanFieldTerm{k, 1.0};
    const int records = 100;
    for (int j = 0; j <= records; ++j) c.record_times.push_back(p.pair_horizon * j / records);
    const double a = p.pair_radius;
    const TrajectoryBundle b =
        simulate_interacting(c, EmpiricalMeasure(2, {Vec{a, 0, 0}, Vec{-a, 0, 0}}));
    double drift = 0.0;
    RawTable pair{"two_vortex", {"t", "x1", "y1", "x2", "y2", "radius_error"}, {}};
    for (std::size_t j = 0; j < b.times.size(); ++j) {
      const Vec& u = b.states[j][0];
      const Vec& v = b.states[j][1];
      const double e = std::max(std::abs(std::hypot(u[0], u[1]) - a), std::abs(std::hypot(v[0], v[1]) - a));
      drift = std::max(drift, e);
      pair.rows.push_back({b.times[j], u[0], u[1], v[0], v[1], e});
    }
    const Vec& end = b.states.back()[0];
    // Each vortex carries weight 1/2; blob speed at separation 2a.
    const double speed = 0.5 * 2.0 * a / (2.0 * std::numbers::pi * (4.0 * a * a + p.epsilon * p.epsilon));
    r.quantities.push_back({"pair_radius_drift", drift, 0.0});
    r.quantities.push_back({"pair_angle", std::atan2(end[1], end[0]), 0.0});
    r.quantities.push_back({"pair_angle_predicted", speed / a * p.pair_horizon, 0.0});
    r.tables.push_back(std::move(pair));
    detail::add_verdict(r, "two_vortex_radius", drift <= p.max_radius_drift,
                        "max radius drift " + fmt(drift) + " <= " + fmt(p.max_radius_drift));
  }
  r.wall_ms = clock.ms();
  return r;
}

}  // namespace mkvlab
