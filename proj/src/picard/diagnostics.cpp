#include <algorithm>
#include <cmath>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/philox.hpp"
#include "mkvlab/measure/kde.hpp"
#include "mkvlab/picard/picard.hpp"

namespace mkvlab {
namespace {

KStarParams with_k(const KStarParams& base, double k) {
  KStarParams out = base;
  out.k = k;
  return out;
}

double weight(double t, double decay) { return decay == 0.0 ? 1.0 : std::pow(t, decay); }

}  // namespace

double gamma_pstar_norm(const InitialLaw& gamma, const Grid& grid, const ExponentParams& exponents,
                        std::uint64_t seed) {
  if (std::isinf(exponents.p)) return 1.0;
  if (gamma.is_singular()) return kInfinity;
  const KStarParams kp{exponents.p, std::nullopt};
  if (const auto* d = std::get_if<Density>(&gamma.variant())) return kstar_norm_surrogate(*d, kp);
  const auto& sampler = std::get<ExactSampler>(gamma.variant());
  if (const auto* g = std::get_if<GaussianLaw>(&sampler.family))
    return kstar_norm_surrogate(Density::gaussian(grid, g->mean, g->std), kp);
  const auto sample = sample_initial(gamma, 20000, mix_seed(seed, 0x70u));
  double floor = 0.0;
  for (int a = 0; a < grid.dim(); ++a) floor = std::max(floor, grid.spacing()[a]);
  const Bandwidth h = silverman_bandwidth(sample, floor);
  return kstar_norm_surrogate(kde_estimate(sample, grid, h), kp);
}

double weighted_rho(const MeasureFlow& a, const MeasureFlow& b, double lambda, const ExponentParams& exponents,
                    const KStarParams& kparams) {
  if (a.mesh() != b.mesh()) throw ShapeError("weighted rho needs flows on one time mesh");
  if (!(a.grid() == b.grid())) throw ShapeError("weighted rho needs flows on one grid");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  const KStarParams kp = with_k(kparams, exponents.k);
  double out = 0.0;
  for (std::size_t j = 1; j < a.size(); ++j) {
    const double t = a.mesh()[j];
    const double d = kstar_distance(a.density(j), b.density(j), kp);
    out = std::max(out, std::exp(-lambda * t) * weight(t, exponents.decay_exponent) * d);
  }
  return out;
}

FlowDiagnostics flow_diagnostics(const MeasureFlow& flow, const ExponentParams& exponents,
                                 const KStarParams& kparams, const DiagnosticsOptions& opts) {
  const KStarParams kp = with_k(kparams, exponents.k);
  const auto& mesh = flow.mesh();
  FlowDiagnostics out;
  out.kstar_norms.resize(flow.size());
  out.kappa.assign(flow.size(), 0.0);
  for (std::size_t j = 0; j < flow.size(); ++j)
    out.kstar_norms[j] = flow.has_density(j) ? kstar_norm_surrogate(flow.density(j), kp)
                                              : (std::isinf(exponents.k) ? 1.0 : kInfinity);
  double running = opts.b0_present ? opts.gamma_pstar_norm : 0.0;
  if (opts.b0_present) out.kappa[0] = running;
  std::size_t blow = 0;
  for (std::size_t j = 1; j < flow.size(); ++j) {
    const double weighted = weight(mesh[j], exponents.decay_exponent) * out.kstar_norms[j];
    out.rho_seminorm = std::max(out.rho_seminorm, weighted);
    if (opts.b0_present) {
      running = std::max(running, weighted);
      out.kappa[j] = running;
    }
    out.kstar_square_integral += out.kstar_norms[j] * out.kstar_norms[j] * (mesh[j] - mesh[j - 1]);
    if (blow == 0 && out.kstar_norms[j] > opts.ceiling) blow = j;
  }
  if (blow > 0) {
    out.blowup_flag = true;
    out.blowup_time = mesh[blow];
    const KStarParams pp = with_k(kparams, exponents.p);
    for (std::size_t j = 1; j < blow; ++j)
      out.leray_series.push_back(std::pow(out.blowup_time - mesh[j], exponents.theta) *
                                 kstar_norm_surrogate(flow.density(j), pp));
  }
  return out;
}

}  // namespace mkvlab
