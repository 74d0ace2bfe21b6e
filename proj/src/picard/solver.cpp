#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/philox.hpp"
#include "mkvlab/measure/kde.hpp"
#include "mkvlab/picard/picard.hpp"

namespace mkvlab {
namespace {

constexpr std::uint64_t kGammaSalt = 0x6A77u;
constexpr double kLambdaCapTimesT = 64.0;

double bandwidth_floor(const Grid& g) {
  double f = 0.0;
  for (int a = 0; a < g.dim(); ++a) f = std::max(f, g.spacing()[a]);
  return f;
}

Density kde_on(const EmpiricalMeasure& sample, const Grid& g, double scale) {
  Bandwidth h = silverman_bandwidth(sample, bandwidth_floor(g));
  for (double& v : h) v *= scale;
  return kde_estimate(sample, g, h);
}

double sigma_scale(const DiffusionSpec& s) {
  if (s.form == DiffusionSpec::Form::kDiagonalAffine) return std::abs(s.base) + std::abs(s.slope) * s.clamp_radius;
  double f = 0.0;
  for (const Vec& row : s.matrix) f += norm2(row);
  return std::sqrt(f);
}

}  // namespace

std::string to_string(PicardStatus s) {
  switch (s) {
    case PicardStatus::kConverged: return "converged";
    case PicardStatus::kMaxIter: return "max_iter";
    case PicardStatus::kDiverged: return "diverged";
    case PicardStatus::kBlowUp: return "blow_up";
  }
  return "unknown";
}

void PicardConfig::validate() const {
  if (!exponents.in_class_D)
    throw ParameterError("(p, k) is not admissible: " + exponents.inequality());
  if (exponents.d != sde.dim) throw ParameterError("exponent dimension differs from the SDE dimension");
  kparams.validate(sde.dim);
  if (!(tol > 0.0)) throw ParameterError("picard tolerance must be positive");
  if (max_iter < 1) throw ParameterError("picard max_iter must be >= 1");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  if (particles < 2) throw ParameterError("picard needs at least two particles per iterate");
  if (mesh_intervals < 1) throw ParameterError("picard mesh needs at least one interval");
  if (!(bandwidth_scale > 0.0)) throw ParameterError("bandwidth scale must be positive");
  if (!(beta0 > 0.0 && beta0 <= 1.0)) throw ParameterError("beta0 must lie in (0, 1]");
  if (n < 1) throw ParameterError("n must be >= 1");
  if (!(blowup_ceiling > 0.0)) throw ParameterError("blow-up ceiling must be positive");
  sde.validate();
  if (sde.steps() % mesh_intervals != 0)
    throw ParameterError("the number of SDE steps (" + std::to_string(sde.steps()) +
                         ") must be a multiple of the mesh intervals (" + std::to_string(mesh_intervals) + ")");
}

std::vector<double> PicardConfig::mesh() const {
  std::vector<double> m(mesh_intervals + 1);
  for (std::size_t j = 0; j <= mesh_intervals; ++j) m[j] = sde.horizon * double(j) / double(mesh_intervals);
  return m;
}

Grid picard_grid(const InitialLaw& gamma, const PicardConfig& cfg) {
  const int d = cfg.sde.dim;
  const std::size_t nodes = cfg.grid_nodes ? cfg.grid_nodes : default_nodes_per_axis(d);
  if (cfg.grid_half_width > 0.0) return Grid::cube(d, cfg.grid_half_width, nodes);
  if (const auto* dens = std::get_if<Density>(&gamma.variant())) return dens->grid();
  const auto sample = sample_initial(gamma, 20000, mix_seed(cfg.sde.seed, kGammaSalt + 1));
  const Vec sd = sample.stddev();
  double reach = 0.0;
  double var0 = 0.0;
  for (const Vec& p : sample.points())
    for (int a = 0; a < d; ++a) reach = std::max(reach, std::abs(p[a]));
  for (int a = 0; a < d; ++a) var0 = std::max(var0, sd[a] * sd[a]);
  const double s = sigma_scale(cfg.sde.sigma);
  const double spread = std::sqrt(var0 + s * s * cfg.sde.horizon);
  const double half = std::max({reach, 6.0 * spread}) + 1.0;
  return Grid::cube(d, half, nodes);
}

MeasureFlow initial_flow(const InitialLaw& gamma, const PicardConfig& cfg, const Grid& grid) {
  const std::vector<double> mesh = cfg.mesh();
  Density start = [&] {
    if (const auto* dens = std::get_if<Density>(&gamma.variant())) {
      if (!(dens->grid() == grid)) throw ShapeError("initial density grid differs from the picard grid");
      return *dens;
    }
    return kde_on(sample_initial(gamma, cfg.particles, mix_seed(cfg.sde.seed, kGammaSalt)), grid, cfg.bandwidth_scale);
  }();
  std::vector<MeasureFlow::Node> nodes(mesh.size(), start);
  if (gamma.is_singular()) nodes[0] = gamma;
  return MeasureFlow(mesh, std::move(nodes));
}

MeasureFlow phi_map(const MeasureFlow& flow, const InitialLaw& gamma, const PicardConfig& cfg,
                    std::uint64_t iterate_seed) {
  SdeConfig sde = cfg.sde;
  sde.n_particles = cfg.particles;
  sde.seed = iterate_seed;
  sde.record_times = flow.mesh();
  const TrajectoryBundle bundle = simulate_decoupled(sde, flow, gamma);
  if (bundle.times.size() != flow.size()) throw ShapeError("SDE record times do not match the flow mesh");
  std::vector<MeasureFlow::Node> nodes;
  nodes.reserve(flow.size());
  nodes.push_back(flow.nodes()[0]);
  for (std::size_t j = 1; j < flow.size(); ++j) nodes.push_back(kde_on(bundle.at(j), flow.grid(), cfg.bandwidth_scale));
  return MeasureFlow(flow.mesh(), std::move(nodes));
}

PicardResult solve_fixed_point(const InitialLaw& gamma, const PicardConfig& cfg) {
  cfg.validate();
  if (gamma.dim() != cfg.sde.dim) throw ShapeError("initial law dimension differs from the SDE dimension");
  const bool b0 = cfg.sde.drift.measure_dependent();
  const Grid grid = picard_grid(gamma, cfg);
  const double gnorm = gamma_pstar_norm(gamma, grid, cfg.exponents, cfg.sde.seed);
  const double tau = tau_n(gnorm, cfg.n, cfg.exponents, cfg.beta0, b0);
  if (b0 && cfg.sde.horizon > tau * (1 + 1e-12))
    throw ParameterError("horizon T = " + std::to_string(cfg.sde.horizon) + " exceeds tau_n = " + std::to_string(tau));

  const double T = cfg.sde.horizon;
  const std::uint64_t base = cfg.sde.seed;
  const DiagnosticsOptions diag{b0, gnorm, cfg.blowup_ceiling};
  MeasureFlow current = initial_flow(gamma, cfg, grid);
  double lambda = cfg.lambda;
  double prev_rho = NAN;
  int streak = 0;
  std::vector<PicardIterate> log;
  PicardStatus status = PicardStatus::kMaxIter;
  double floor = 0.0;

  for (int j = 0; j < cfg.max_iter; ++j) {
    const auto t0 = std::chrono::steady_clock::now();
    MeasureFlow next = phi_map(current, gamma, cfg, mix_seed(base, 2 * std::uint64_t(j) + 1));
    const MeasureFlow twin = phi_map(current, gamma, cfg, mix_seed(base, 2 * std::uint64_t(j) + 2));
    PicardIterate row;
    row.iter = j;
    row.lambda = lambda;
    row.rho = weighted_rho(next, current, lambda, cfg.exponents, cfg.kparams);
    floor = weighted_rho(next, twin, lambda, cfg.exponents, cfg.kparams);
    row.floor = floor;
    row.ratio = std::isnan(prev_rho) || prev_rho == 0.0 ? NAN : row.rho / prev_rho;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    log.push_back(row);

    const FlowDiagnostics d = flow_diagnostics(next, cfg.exponents, cfg.kparams, diag);
    const MeasureFlow before = std::move(current);
    current = std::move(next);
    if (d.blowup_flag) {
      status = PicardStatus::kBlowUp;
      break;
    }
    if (row.rho <= std::max(cfg.tol, 2.0 * floor)) {
      status = PicardStatus::kConverged;
      break;
    }
    prev_rho = row.rho;
    if (cfg.auto_lambda && row.ratio >= 0.9 && lambda < kLambdaCapTimesT / T) {
      lambda = std::min(std::max(2.0 * lambda, 1.0 / T), kLambdaCapTimesT / T);
      // Restart the comparison under the new weight.
      prev_rho = weighted_rho(current, before, lambda, cfg.exponents, cfg.kparams);
      streak = 0;
      continue;
    }
    streak = row.ratio >= 1.0 && row.rho > floor ? streak + 1 : 0;
    if (streak >= 3) {
      status = PicardStatus::kDiverged;
      break;
    }
  }
  PicardResult out{current, std::move(log), status, lambda, floor, tau,
                   flow_diagnostics(current, cfg.exponents, cfg.kparams, diag)};
  return out;
}

}  // namespace mkvlab
