#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mkvlab/metrics/kstar.hpp"
#include "mkvlab/sde/sde.hpp"

namespace mkvlab {

// Exponents (d, p, k) with p, k possibly infinite.
struct ExponentParams {
  int d = 1;
  double p = kInfinity;
  double k = 2.0;
  double decay_exponent = 0.0;  // d(p - k)/(2pk), d/(2k) at p = inf
  double theta = 0.5;           // 1/2 - decay_exponent
  bool in_class_D = false;      // 1/k - 1/d < 1/p

  // "1/k - 1/d = ... < 1/p = ..." with the verdict, for error messages.
  std::string inequality() const;
};

// Throws ParameterError unless 1 <= k <= p <= inf and d in {1, 2, 3}.
ExponentParams class_d_check(int d, double p, double k);

// n when p = inf or b0 is absent, else beta0 * gamma_pstar_norm^{-1/theta}.
// Throws ParameterError when theta <= 0 or the norm is not positive.
double tau_n(double gamma_pstar_norm, int n, const ExponentParams& exponents, double beta0, bool b0_present);

// ||gamma||_{p*} on a grid (surrogate at k = p); 1 for p = inf and +inf
// for singular laws at finite p.
double gamma_pstar_norm(const InitialLaw& gamma, const Grid& grid, const ExponentParams& exponents,
                        std::uint64_t seed);

// max over mesh nodes t > 0 of e^{-lambda t} t^{decay} ||A_t - B_t||_{k*}.
double weighted_rho(const MeasureFlow& a, const MeasureFlow& b, double lambda, const ExponentParams& exponents,
                    const KStarParams& kparams);

struct FlowDiagnostics {
  std::vector<double> kstar_norms;  // per mesh node; +inf at a law-only t = 0 node
  double rho_seminorm = 0.0;        // sup_{t > 0} t^{decay} ||mu_t||_{k*}
  std::vector<double> kappa;        // kappa_t(gamma) per mesh node; zero without b0
  double kstar_square_integral = 0.0;  // sum_{j >= 1} ||mu_{t_j}||^2_{k*} (t_j - t_{j-1})
  bool blowup_flag = false;
  double blowup_time = 0.0;           // first node above the ceiling (if flagged)
  std::vector<double> leray_series;   // (tau - t_j)^theta ||mu_{t_j}||_{p*} before tau (if flagged)
};

struct DiagnosticsOptions {
  bool b0_present = false;
  double gamma_pstar_norm = 1.0;
  double ceiling = 1e3;
};

FlowDiagnostics flow_diagnostics(const MeasureFlow& flow, const ExponentParams& exponents,
                                 const KStarParams& kparams, const DiagnosticsOptions& opts = {});

struct PicardConfig {
  ExponentParams exponents;
  KStarParams kparams;        // k is taken from `exponents`
  double lambda = 0.0;
  bool auto_lambda = true;    // lambda <- max(2 lambda, 1/T) whenever a ratio reaches 0.9
  double tol = 1e-3;
  int max_iter = 20;
  std::size_t particles = 10000;
  std::size_t mesh_intervals = 10;
  double bandwidth_scale = 1.0;  // multiplies the Silverman bandwidth
  std::size_t grid_nodes = 0;    // per axis; 0: default_nodes_per_axis(d)
  double grid_half_width = 0.0;  // 0: sized from gamma and sigma
  SdeConfig sde;                 // dim, drift, sigma, horizon, dt, seed; particles/records are overwritten
  double beta0 = 0.25;
  int n = 1;
  double blowup_ceiling = 1e3;

  void validate() const;
  std::vector<double> mesh() const;
};

enum class PicardStatus { kConverged, kMaxIter, kDiverged, kBlowUp };
std::string to_string(PicardStatus s);

struct PicardIterate {
  int iter = 0;
  double rho = 0.0;    // rho(mu_{j+1}, mu_j) at the lambda in force
  double ratio = 0.0;  // rho_j / rho_{j-1}; NaN right after a lambda change
  double lambda = 0.0;
  double floor = 0.0;  // Monte-Carlo floor on this iterate's input
  double wall_ms = 0.0;
};

struct PicardResult {
  MeasureFlow flow;
  std::vector<PicardIterate> log;
  PicardStatus status = PicardStatus::kMaxIter;
  double lambda = 0.0;
  double mc_floor = 0.0;
  double tau = 0.0;
  FlowDiagnostics diagnostics;
};

// Grid used for every density of a Picard run.
Grid picard_grid(const InitialLaw& gamma, const PicardConfig& cfg);

// t = 0 node carried by every flow of the run, and the constant-in-time
// gamma-KDE starting flow.
MeasureFlow initial_flow(const InitialLaw& gamma, const PicardConfig& cfg, const Grid& grid);

// Law of the decoupled SDE driven by `flow`: M paths, KDE at every mesh
// node t > 0; node 0 is copied from `flow`.
MeasureFlow phi_map(const MeasureFlow& flow, const InitialLaw& gamma, const PicardConfig& cfg,
                    std::uint64_t iterate_seed);

// Iterates mu_{j+1} = Phi(mu_j) from the constant gamma-KDE flow until
// rho(mu_{j+1}, mu_j) <= max(tol, 2 floor). Rejects (p, k) outside class D
// and horizons beyond tau_n before simulating.
PicardResult solve_fixed_point(const InitialLaw& gamma, const PicardConfig& cfg);

}  // namespace mkvlab
