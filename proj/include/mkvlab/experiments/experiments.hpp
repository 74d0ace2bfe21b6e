#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mkvlab/picard/picard.hpp"

namespace mkvlab {

// Seeds used by a scenario: mix_seed(base, i) for i < count.
struct SeedPlan {
  std::uint64_t base = 20240601;
  int count = 10;
  std::uint64_t at(int i) const;
};

struct Quantity {
  std::string name;
  double value = 0.0;
  double half_width = 0.0;  // 95% normal half-width over seeds; 0 for single-run values
};

struct Verdict {
  std::string criterion;
  bool passed = false;
  std::string detail;
};

// Per-seed or per-time raw numbers, written as CSV by the CLI.
struct RawTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
  std::string scenario;
  std::string config_hash;  // filled in by the caller that owns the config text
  std::uint64_t seed = 0;
  std::vector<Quantity> quantities;
  std::vector<Verdict> verdicts;
  std::vector<RawTable> tables;
  double wall_ms = 0.0;

  bool passed() const;
  // Throw RangeError for unknown names.
  const Quantity& quantity(const std::string& name) const;
  const Verdict& verdict(const std::string& criterion) const;
};

struct LambOseenParams {
  double nu = 0.5;
  double sigma0 = 1.0;
  double epsilon = 0.05;
  std::size_t particles = 2000;
  double dt = 0.02;
  double horizon = 1.0;
  std::size_t radial_bins = 0;  // 0: ceil(2 N^{1/3})
  bool epsilon_halving = true;
  double pair_radius = 1.0;
  double pair_dt = 1e-4;
  double pair_horizon = 1.0;
  SeedPlan seeds;
  double max_radial_l1 = 0.1;
  double max_halving_growth = 0.5;
  double max_radius_drift = 1e-6;
};

struct DecayParams {
  int dim = 2;
  double k = 3.0;
  double horizon = 0.1;
  double t_min_fraction = 0.1;  // log-spaced record times over [fraction * T, T]
  int times = 8;
  std::size_t particles = 100000;
  double sigma = 1.0;
  double start_std = 0.0;  // 0: point mass at the origin
  double radius = 0.0;     // k*-ball radius; 0: sqrt(d)
  SeedPlan seeds;
  double slope_rel_tol = 0.15;  // used when the predicted slope is nonzero
  double slope_abs_tol = 0.05;  // used when it is zero (sigma = 0)
};

// Interaction used by the entropy-cost and k*-Wasserstein scenarios:
// regularized Riesz with bounded kernel.
struct BoundedInteraction {
  bool enabled = true;
  double kappa = 1.0;
  double beta = 0.5;
  double epsilon = 0.1;
  double coupling = 1.0;
};

struct EntropyCostParams {
  double mean_offset = 0.5;
  std::vector<double> times{0.25, 0.5, 1.0};
  std::size_t particles = 2000;
  double dt = 0.05;
  double sigma = 1.0;
  double sigma0 = 1.0;
  BoundedInteraction interaction;
  std::size_t grid_nodes = 256;
  SeedPlan seeds;
  double max_stability_ratio = 3.0;
  double closed_form_rel_tol = 0.10;
  double w2_rel_tol = 0.02;
};

struct KStarWassersteinParams {
  double k = 2.0;
  double p = 4.0;
  double q = 2.0;
  std::vector<double> offsets{0.1, 0.2, 0.4};
  double time = 0.5;
  std::size_t particles = 2000;
  double dt = 0.05;
  double sigma = 1.0;
  double sigma0 = 1.0;
  BoundedInteraction interaction;
  std::size_t grid_nodes = 256;
  SeedPlan seeds;
  double min_r2 = 0.9;
};

// Default Picard template: regularized Riesz in d = 1 with p = inf, k = 1.5.
PicardConfig default_contraction_picard();

struct PicardContractionParams {
  PicardConfig picard = default_contraction_picard();  // template; seed is replaced per run
  InitialLaw gamma{ExactSampler{1, GaussianLaw{{0, 0, 0}, {0.5, 1, 1}}}};
  bool horizon_from_tau = true;  // T <- tau_n before solving
  SeedPlan seeds;
  std::size_t gate_cases = 50;
  bool chaos_check = true;
  std::size_t chaos_particles = 2000;
  double max_median_ratio = 0.8;
  double self_consistency_factor = 2.0;
  double chaos_factor = 3.0;
};

ExperimentReport run_lamb_oseen(const LambOseenParams& params);
ExperimentReport run_decay_slope(const DecayParams& params);
ExperimentReport run_entropy_cost(const EntropyCostParams& params);
ExperimentReport run_kstar_wasserstein(const KStarWassersteinParams& params);
ExperimentReport run_picard_contraction(const PicardContractionParams& params);

// Inadmissible (d, p, k) triples with 1 <= k <= p, in a fixed order.
std::vector<ExponentParams> inadmissible_triples(std::size_t count);

}  // namespace mkvlab
