#include <cmath>

#include "common.hpp"
#include "mkvlab/core/errors.hpp"
#include "mkvlab/measure/kde.hpp"
#include "mkvlab/metrics/kstar.hpp"

namespace mkvlab {

ExperimentReport run_decay_slope(const DecayParams& p) {
  const ExponentParams e = class_d_check(p.dim, kInfinity, p.k);
  if (!e.in_class_D) throw ParameterError("decay_slope: " + e.inequality());
  if (!(p.horizon > 0.0)) throw ParameterError("decay_slope: horizon must be positive");
  if (!(p.t_min_fraction > 0.0 && p.t_min_fraction < 1.0))
    throw ParameterError("decay_slope: t_min_fraction must lie in (0, 1)");
  if (p.times < 3) throw ParameterError("decay_slope: need at least three record times");
  if (p.seeds.count < 1) throw ParameterError("decay_slope: need at least one seed");
  if (!(p.sigma >= 0.0)) throw ParameterError("decay_slope: sigma must be >= 0");
  if (p.sigma == 0.0 && !(p.start_std > 0.0))
    throw ParameterError("decay_slope: sigma = 0 needs a spread initial law (start_std > 0)");

  detail::Stopwatch clock;
  ExperimentReport r;
  r.scenario = "decay_slope";
  r.seed = p.seeds.base;
  const int d = p.dim;
  const double radius = p.radius > 0.0 ? p.radius : std::sqrt(double(d));
  const KStarParams kp{p.k, radius};
  const double predicted = p.sigma == 0.0 ? 0.0 : -d / (2.0 * p.k);

  SdeConfig c;
  c.dim = d;
  c.sigma = DiffusionSpec::constant(d, p.sigma);
  c.horizon = p.horizon;
  const double t_min = p.t_min_fraction * p.horizon;
  c.dt = t_min / 10.0;
  c.n_particles = p.particles;
  for (int i = 0; i < p.times; ++i)
    c.record_times.push_back(std::min(p.horizon, t_min * std::pow(1.0 / p.t_min_fraction, double(i) / (p.times - 1))));
  const InitialLaw start = p.start_std > 0.0
                               ? InitialLaw(ExactSampler{d, GaussianLaw{Vec{}, Vec{p.start_std, p.start_std, p.start_std}}})
                               : InitialLaw(ExactSampler{d, DiracLaw{}});

  RawTable norms{"norms", {"seed_index", "t", "kstar_norm"}, {}};
  std::vector<double> slopes;
  for (int s = 0; s < p.seeds.count; ++s) {
    c.seed = p.seeds.at(s);
    const TrajectoryBundle b = simulate_interacting(c, start);
    std::vector<double> lx, ly;
    for (std::size_t j = 0; j < b.times.size(); ++j) {
      if (b.times[j] <= 0.0) continue;
      const EmpiricalMeasure x = b.at(j);
      // Spacing and bandwidth both scale with the sample spread, so the
      // discretization bias is the same at every t and drops out of the slope.
      const Vec sd = x.stddev();
      double sd_min = sd[0];
      for (int a = 1; a < d; ++a) sd_min = std::min(sd_min, sd[a]);
      const double spacing = sd_min / 8.0;
      const Bandwidth h = silverman_bandwidth(x, spacing);
      double reach = 0.0, hmax = 0.0;
      for (const Vec& pt : x.points())
        for (int a = 0; a < d; ++a) reach = std::max(reach, std::abs(pt[a]));
      for (int a = 0; a < d; ++a) hmax = std::max(hmax, h[a]);
      const double half = std::max(radius, reach + 3.0 * hmax + spacing);
      const Grid g = Grid::cube(d, half, static_cast<std::size_t>(std::ceil(2.0 * half / spacing)) + 1);
      const double n = kstar_norm_surrogate(kde_estimate(x, g, h), kp);
      lx.push_back(std::log(b.times[j]));
      ly.push_back(std::log(n));
      norms.rows.push_back({double(s), b.times[j], n});
    }
    slopes.push_back(detail::ls_slope(lx, ly));
  }
  r.tables.push_back(std::move(norms));
  detail::add_median(r, "slope", slopes);
  r.quantities.push_back({"predicted_slope", predicted, 0.0});
  const double med = detail::median(slopes);
  const double tol = predicted == 0.0 ? p.slope_abs_tol : p.slope_rel_tol * std::abs(predicted);
  detail::add_verdict(r, "slope", std::abs(med - predicted) <= tol,
                      "median slope " + detail::fmt(med) + " vs " + detail::fmt(predicted) + " +- " + detail::fmt(tol));
  r.wall_ms = clock.ms();
  return r;
}

}  // namespace mkvlab
