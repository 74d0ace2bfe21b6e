#include <cmath>

#include "common.hpp"
#include "mkvlab/core/errors.hpp"
#include "mkvlab/measure/kde.hpp"
#include "mkvlab/metrics/distances.hpp"
#include "mkvlab/metrics/kstar.hpp"

namespace mkvlab {
namespace {

using detail::fmt;

SdeConfig pair_config(const BoundedInteraction& in, double sigma, double dt, std::size_t n, std::vector<double> times,
                      std::uint64_t seed) {
  SdeConfig c;
  c.dim = 1;
  c.sigma = DiffusionSpec::constant(1, sigma);
  c.horizon = *std::max_element(times.begin(), times.end());
  c.dt = dt;
  c.n_particles = n;
  c.seed = seed;
  times.insert(times.begin(), 0.0);
  c.record_times = std::move(times);
  if (in.enabled) {
    KernelSpec k;
    k.family = KernelFamily::kRiesz;
    k.dim = 1;
    k.kappa = in.kappa;
    k.beta = in.beta;
    k.epsilon = in.epsilon;
    c.drift.b0 = MeanFieldTerm{k, in.coupling};
  }
  return c;
}

void check_interaction(const BoundedInteraction& in, const std::string& who) {
  if (in.enabled && !(in.epsilon > 0.0)) throw ParameterError(who + ": the interaction must be regularized (epsilon > 0)");
}

InitialLaw shifted_gaussian(double mean, double sd) {
  return InitialLaw(ExactSampler{1, GaussianLaw{Vec{mean, 0, 0}, Vec{sd, 1, 1}}});
}

// One grid and one bandwidth for a group of 1D samples, so estimates are
// directly comparable.
struct SharedKde {
  Grid grid;
  Bandwidth h;
};

SharedKde shared_kde(const std::vector<EmpiricalMeasure>& xs, std::size_t nodes) {
  double hsum = 0.0, lo = INFINITY, hi = -INFINITY;
  for (const auto& x : xs) {
    hsum += silverman_bandwidth(x)[0];
    for (const Vec& p : x.points()) {
      lo = std::min(lo, p[0]);
      hi = std::max(hi, p[0]);
    }
  }
  const double reach = std::max(std::abs(lo), std::abs(hi));
  double h = hsum / xs.size();
  Grid g = Grid::cube(1, reach + 3.0 * h, nodes);
  h = std::max(h, g.spacing()[0]);
  if (reach + 3.0 * h > g.domain_upper()[0]) g = Grid::cube(1, reach + 3.0 * h, nodes);
  return {g, Bandwidth{h, 1, 1}};
}

}  // namespace

ExperimentReport run_entropy_cost(const EntropyCostParams& p) {
  check_interaction(p.interaction, "entropy_cost");
  if (p.times.empty()) throw ParameterError("entropy_cost: t_grid is empty");
  for (double t : p.times)
    if (!(t > 0.0)) throw ParameterError("entropy_cost: times must be positive");
  if (!(p.mean_offset > 0.0)) throw ParameterError("entropy_cost: mean_offset must be positive");
  if (!(p.sigma > 0.0 && p.sigma0 > 0.0)) throw ParameterError("entropy_cost: sigma and sigma0 must be positive");
  if (p.seeds.count < 1) throw ParameterError("entropy_cost: need at least one seed");

  detail::Stopwatch clock;
  ExperimentReport r;
  r.scenario = "entropy_cost";
  r.seed = p.seeds.base;
  const std::size_t nt = p.times.size();
  const double m = p.mean_offset;
  BoundedInteraction none = p.interaction;
  none.enabled = false;

  RawTable table{"runs", {"seed_index", "t", "entropy", "w2", "c_t", "entropy_drift_free", "entropy_exact_drift_free"},
                 {}};
  std::vector<std::vector<double>> c_t(nt), free_err(nt);
  std::vector<double> w2_err;
  bool finite = true;
  for (int s = 0; s < p.seeds.count; ++s) {
    const std::uint64_t seed = p.seeds.at(s);
    double ent[2][16];
    double w2 = 0.0;
    for (int variant = 0; variant < 2; ++variant) {
      const SdeConfig c = pair_config(variant == 0 ? p.interaction : none, p.sigma, p.dt, p.particles, p.times, seed);
      // Common random numbers: both laws share initial normals and noise.
      const TrajectoryBundle a = simulate_interacting(c, shifted_gaussian(0.0, p.sigma0));
      const TrajectoryBundle b = simulate_interacting(c, shifted_gaussian(m, p.sigma0));
      if (variant == 0) w2 = wasserstein_q(a.at(0), b.at(0), 2.0);
      for (std::size_t j = 0; j < nt; ++j) {
        const std::size_t idx = a.index_of(c.record_times[j + 1]);
        const EmpiricalMeasure xa = a.at(idx), xb = b.at(idx);
        const SharedKde k = shared_kde({xa, xb}, p.grid_nodes);
        ent[variant][j] = relative_entropy(kde_estimate(xa, k.grid, k.h), kde_estimate(xb, k.grid, k.h));
      }
    }
    w2_err.push_back(std::abs(w2 - m) / m);
    for (std::size_t j = 0; j < nt; ++j) {
      const double t = p.times[j];
      const double exact = m * m / (2.0 * (p.sigma0 * p.sigma0 + p.sigma * p.sigma * t));
      finite = finite && std::isfinite(ent[0][j]);
      c_t[j].push_back(ent[0][j] * t / (w2 * w2));
      free_err[j].push_back(std::abs(ent[1][j] - exact) / exact);
      table.rows.push_back({double(s), t, ent[0][j], w2, c_t[j].back(), ent[1][j], exact});
    }
  }
  r.tables.push_back(std::move(table));

  double cmax = 0.0, cmin = INFINITY, worst_free = 0.0;
  for (std::size_t j = 0; j < nt; ++j) {
    const std::string tag = "t=" + fmt(p.times[j]);
    detail::add_median(r, "C(" + tag + ")", c_t[j]);
    detail::add_median(r, "drift_free_rel_error(" + tag + ")", free_err[j]);
    const double c = detail::median(c_t[j]);
    cmax = std::max(cmax, c);
    cmin = std::min(cmin, c);
    worst_free = std::max(worst_free, detail::median(free_err[j]));
  }
  const double stability = cmax / cmin;
  r.quantities.push_back({"C_fit", cmax, 0.0});
  r.quantities.push_back({"stability_ratio", stability, 0.0});
  detail::add_median(r, "w2_rel_error", w2_err);

  detail::add_verdict(r, "entropy_finite", finite, finite ? "all entropies finite" : "an entropy estimate was +inf");
  detail::add_verdict(r, "stability", finite && stability <= p.max_stability_ratio,
                      "max C / min C = " + fmt(stability) + " <= " + fmt(p.max_stability_ratio));
  detail::add_verdict(r, "drift_free_closed_form", worst_free <= p.closed_form_rel_tol,
                      "worst median relative error " + fmt(worst_free) + " <= " + fmt(p.closed_form_rel_tol));
  const double w2e = detail::median(w2_err);
  detail::add_verdict(r, "w2_estimator", w2e <= p.w2_rel_tol,
                      "median |W2 - offset| / offset " + fmt(w2e) + " <= " + fmt(p.w2_rel_tol));
  r.wall_ms = clock.ms();
  return r;
}

ExperimentReport run_kstar_wasserstein(const KStarWassersteinParams& p) {
  check_interaction(p.interaction, "kstar_wasserstein");
  if (!(p.q >= 1.0)) throw ParameterError("kstar_wasserstein: q must be >= 1");
  const double pstar = p.q == 1.0 || std::isinf(p.p) ? kInfinity : p.p * p.q / (p.q - 1.0);
  const ExponentParams e = class_d_check(1, pstar, p.k);
  if (!e.in_class_D) throw ParameterError("kstar_wasserstein: (pq/(q-1), k) is not admissible: " + e.inequality());
  KStarParams kp{p.k, std::nullopt};
  kp.validate(1);
  if (p.offsets.empty()) throw ParameterError("kstar_wasserstein: offsets are empty");
  for (double o : p.offsets)
    if (!(o > 0.0)) throw ParameterError("kstar_wasserstein: offsets must be positive");
  if (!(p.time > 0.0)) throw ParameterError("kstar_wasserstein: time must be positive");
  if (p.seeds.count < 1) throw ParameterError("kstar_wasserstein: need at least one seed");

  detail::Stopwatch clock;
  ExperimentReport r;
  r.scenario = "kstar_wasserstein";
  r.seed = p.seeds.base;
  const std::vector<double> times{0.5 * p.time, p.time};

  RawTable table{"runs", {"seed_index", "t", "offset", "wq", "kstar_distance"}, {}};
  std::vector<double> r2, slope_full, slope_half;
  double zero_distance = 0.0;
  for (int s = 0; s < p.seeds.count; ++s) {
    const SdeConfig c = pair_config(p.interaction, p.sigma, p.dt, p.particles, times, p.seeds.at(s));
    const TrajectoryBundle base = simulate_interacting(c, shifted_gaussian(0.0, p.sigma0));
    if (s == 0) {
      const TrajectoryBundle again = simulate_interacting(c, shifted_gaussian(0.0, p.sigma0));
      const std::size_t j = base.index_of(p.time);
      const SharedKde k = shared_kde({base.at(j)}, p.grid_nodes);
      zero_distance = kstar_distance(kde_estimate(base.at(j), k.grid, k.h), kde_estimate(again.at(j), k.grid, k.h), kp);
    }
    std::vector<TrajectoryBundle> moved;
    std::vector<double> wq;
    for (double o : p.offsets) {
      moved.push_back(simulate_interacting(c, shifted_gaussian(o, p.sigma0)));
      wq.push_back(wasserstein_q(base.at(0), moved.back().at(0), p.q));
    }
    for (double t : times) {
      const std::size_t j = base.index_of(t);
      std::vector<EmpiricalMeasure> xs{base.at(j)};
      for (const auto& b : moved) xs.push_back(b.at(j));
      const SharedKde k = shared_kde(xs, p.grid_nodes);
      const Density ref = kde_estimate(xs[0], k.grid, k.h);
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      std::vector<double> y;
      for (std::size_t i = 0; i < p.offsets.size(); ++i) {
        y.push_back(kstar_distance(ref, kde_estimate(xs[i + 1], k.grid, k.h), kp));
        sxy += wq[i] * y[i];
        sxx += wq[i] * wq[i];
        syy += y[i] * y[i];
        table.rows.push_back({double(s), t, p.offsets[i], wq[i], y[i]});
      }
      const double slope = sxy / sxx;
      if (t == p.time) {
        double res = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) res += (y[i] - slope * wq[i]) * (y[i] - slope * wq[i]);
        r2.push_back(1.0 - res / syy);
        slope_full.push_back(slope);
      } else {
        slope_half.push_back(slope);
      }
    }
  }
  r.tables.push_back(std::move(table));
  detail::add_median(r, "r2", r2);
  detail::add_median(r, "slope", slope_full);
  detail::add_median(r, "slope_half_time", slope_half);
  r.quantities.push_back({"zero_offset_distance", zero_distance, 0.0});

  const double mr2 = detail::median(r2);
  detail::add_verdict(r, "proportional", mr2 >= p.min_r2, "median R^2 " + fmt(mr2) + " >= " + fmt(p.min_r2));
  detail::add_verdict(r, "zero_offset", zero_distance == 0.0, "distance at zero offset " + fmt(zero_distance));
  const double sf = detail::median(slope_full), sh = detail::median(slope_half);
  detail::add_verdict(r, "halving_time", sh > sf, "slope at t/2 " + fmt(sh) + " > slope at t " + fmt(sf));
  r.wall_ms = clock.ms();
  return r;
}

}  // namespace mkvlab
