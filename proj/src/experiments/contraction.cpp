#include <cmath>

#include "common.hpp"
#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/philox.hpp"
#include "mkvlab/metrics/distances.hpp"

namespace mkvlab {
namespace {

using detail::fmt;

constexpr std::uint64_t kCheckSalt = 0xC0DE0000;

// Horizon T <- tau_n, with dt shrunk so that the step count stays a
// multiple of the mesh intervals.
void set_horizon_from_tau(PicardConfig& cfg, const InitialLaw& gamma) {
  const Grid g = picard_grid(gamma, cfg);
  const double norm = gamma_pstar_norm(gamma, g, cfg.exponents, cfg.sde.seed);
  const double tau = tau_n(norm, cfg.n, cfg.exponents, cfg.beta0, cfg.sde.drift.measure_dependent());
  const double m = static_cast<double>(cfg.mesh_intervals);
  cfg.sde.horizon = tau;
  cfg.sde.dt = tau / (m * std::ceil(tau / (cfg.sde.dt * m) - 1e-9));
}

}  // namespace

PicardConfig default_contraction_picard() {
  PicardConfig cfg;
  cfg.exponents = class_d_check(1, kInfinity, 1.5);
  cfg.kparams = {1.5, std::nullopt};
  cfg.sde.dim = 1;
  cfg.sde.horizon = 1.0;
  cfg.sde.dt = 0.02;
  cfg.sde.sigma = DiffusionSpec::constant(1, 1.0);
  KernelSpec k;
  k.family = KernelFamily::kRiesz;
  k.dim = 1;
  k.epsilon = 0.1;
  k.kappa = 1.0;
  k.beta = 0.5;
  cfg.sde.drift.b0 = MeanFieldTerm{k, 1.0};
  cfg.particles = 10000;
  cfg.mesh_intervals = 10;
  cfg.tol = 1e-4;
  cfg.max_iter = 12;
  return cfg;
}

std::vector<ExponentParams> inadmissible_triples(std::size_t count) {
  const double ks[] = {1.0, 1.1, 1.2, 1.25, 1.4, 1.5, 1.75, 2.0, 2.5, 3.0};
  const double ps[] = {1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 16.0, kInfinity};
  std::vector<ExponentParams> out;
  for (int d = 1; d <= 3; ++d)
    for (double k : ks)
      for (double p : ps) {
        if (p < k) continue;
        const ExponentParams e = class_d_check(d, p, k);
        if (!e.in_class_D && out.size() < count) out.push_back(e);
      }
  if (out.size() < count) throw ParameterError("only " + std::to_string(out.size()) + " inadmissible triples available");
  return out;
}

ExperimentReport run_picard_contraction(const PicardContractionParams& p) {
  if (p.seeds.count < 1) throw ParameterError("picard_contraction: need at least one seed");
  if (p.chaos_check && p.chaos_particles < 2) throw ParameterError("picard_contraction: chaos_particles must be >= 2");

  detail::Stopwatch clock;
  ExperimentReport r;
  r.scenario = "picard_contraction";
  r.seed = p.seeds.base;

  // Gate: every inadmissible triple is refused before anything is simulated.
  std::size_t rejected = 0;
  std::string first_leak;
  for (const ExponentParams& e : inadmissible_triples(p.gate_cases)) {
    PicardConfig cfg = p.picard;
    cfg.exponents = e;
    cfg.kparams.k = e.k;
    try {
      cfg.validate();
      if (first_leak.empty()) first_leak = e.inequality();
    } catch (const ParameterError& err) {
      if (std::string(err.what()).find("not admissible") != std::string::npos) ++rejected;
      else if (first_leak.empty()) first_leak = err.what();
    }
  }
  r.quantities.push_back({"gate_rejected", double(rejected), 0.0});
  detail::add_verdict(r, "class_d_gate", rejected == p.gate_cases,
                      std::to_string(rejected) + " of " + std::to_string(p.gate_cases) + " inadmissible triples rejected" +
                          (first_leak.empty() ? "" : "; first leak: " + first_leak));

  RawTable iters{"iterations", {"seed_index", "iter", "rho", "ratio", "lambda", "floor"}, {}};
  RawTable seeds{"seeds", {"seed_index", "status", "iterations", "median_ratio", "final_rho", "final_floor",
                           "extra_rho", "extra_floor", "tau"}, {}};
  std::vector<double> med_ratio, consistency;
  int converged = 0;
  for (int s = 0; s < p.seeds.count; ++s) {
    PicardConfig cfg = p.picard;
    cfg.sde.seed = p.seeds.at(s);
    if (p.horizon_from_tau) set_horizon_from_tau(cfg, p.gamma);
    const PicardResult res = solve_fixed_point(p.gamma, cfg);
    if (res.status == PicardStatus::kConverged) ++converged;

    std::vector<double> ratios;
    for (const PicardIterate& it : res.log) {
      iters.rows.push_back({double(s), double(it.iter), it.rho, it.ratio, it.lambda, it.floor});
      if (std::isfinite(it.ratio) && it.rho > it.floor) ratios.push_back(it.ratio);
    }
    const double mr = detail::median(ratios);
    if (!ratios.empty()) med_ratio.push_back(mr);

    // One more application of Phi, against a paired rerun for the floor.
    const std::uint64_t a = mix_seed(cfg.sde.seed, kCheckSalt + 1);
    const std::uint64_t b = mix_seed(cfg.sde.seed, kCheckSalt + 2);
    const MeasureFlow pa = phi_map(res.flow, p.gamma, cfg, a);
    const MeasureFlow pb = phi_map(res.flow, p.gamma, cfg, b);
    const double extra = weighted_rho(pa, res.flow, res.lambda, cfg.exponents, cfg.kparams);
    const double floor = weighted_rho(pa, pb, res.lambda, cfg.exponents, cfg.kparams);
    consistency.push_back(extra / floor);
    seeds.rows.push_back({double(s), double(static_cast<int>(res.status)), double(res.log.size()), mr,
                          res.log.back().rho, res.log.back().floor, extra, floor, res.tau});

    if (s == 0 && p.chaos_check) {
      // Terminal law of the fixed point vs the particle system it describes.
      SdeConfig sde = cfg.sde;
      sde.n_particles = p.chaos_particles;
      sde.record_times = {};
      sde.seed = mix_seed(cfg.sde.seed, kCheckSalt + 3);
      const TrajectoryBundle fp = simulate_decoupled(sde, res.flow, p.gamma);
      sde.seed = mix_seed(cfg.sde.seed, kCheckSalt + 4);
      const TrajectoryBundle i1 = simulate_interacting(sde, p.gamma);
      sde.seed = mix_seed(cfg.sde.seed, kCheckSalt + 5);
      const TrajectoryBundle i2 = simulate_interacting(sde, p.gamma);
      const std::size_t last = fp.times.size() - 1;
      const double w_fp = wasserstein_q(fp.at(last), i1.at(last), 2.0);
      const double w_ii = wasserstein_q(i2.at(last), i1.at(last), 2.0);
      r.quantities.push_back({"w2_fixed_point_vs_particles", w_fp, 0.0});
      r.quantities.push_back({"w2_particles_vs_particles", w_ii, 0.0});
      detail::add_verdict(r, "chaos_triangle", w_fp <= p.chaos_factor * w_ii,
                          "W2(fixed point, particles) " + fmt(w_fp) + " <= " + fmt(p.chaos_factor) + " x " + fmt(w_ii));
    }
  }
  if (!p.chaos_check) detail::add_verdict(r, "chaos_triangle", true, "not requested (chaos_check = false)");
  r.tables.push_back(std::move(iters));
  r.tables.push_back(std::move(seeds));

  detail::add_median(r, "median_ratio", med_ratio);
  detail::add_median(r, "extra_rho_over_floor", consistency);
  r.quantities.push_back({"converged_seeds", double(converged), 0.0});

  detail::add_verdict(r, "converged", converged == p.seeds.count,
                      std::to_string(converged) + " of " + std::to_string(p.seeds.count) + " seeds converged");
  const double mr = detail::median(med_ratio);
  detail::add_verdict(r, "median_ratio", !med_ratio.empty() && mr < p.max_median_ratio,
                      med_ratio.empty() ? "no ratio above the Monte-Carlo floor"
                                        : "median ratio " + fmt(mr) + " < " + fmt(p.max_median_ratio));
  const double sc = detail::median(consistency);
  detail::add_verdict(r, "self_consistency", sc <= p.self_consistency_factor,
                      "median rho(Phi mu, mu) / floor " + fmt(sc) + " <= " + fmt(p.self_consistency_factor));
  r.wall_ms = clock.ms();
  return r;
}

}  // namespace mkvlab
